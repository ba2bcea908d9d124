#include "pgm/unscented.hpp"

#include <cmath>

#include "pgm/errors.hpp"
#include "pgm/linalg.hpp"

namespace pgm {
namespace filters {

SigmaPoints make_sigma_points(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                              const UnscentedParams& params) {
  const int d = static_cast<int>(mean.size());
  const double scale = static_cast<double>(d) + params.lambda;
  if (!(scale > 0.0)) throw InvalidArgument("make_sigma_points: d + lambda must be positive");

  const Eigen::MatrixXd l = CholeskyFactor::compute(cov).lower();
  const double spread = std::sqrt(scale);

  SigmaPoints sp;
  sp.points.resize(d, 2 * d + 1);
  sp.points.col(0) = mean;
  for (int i = 0; i < d; ++i) {
    sp.points.col(1 + i) = mean + spread * l.col(i);
    sp.points.col(1 + d + i) = mean - spread * l.col(i);
  }

  sp.mean_weights.resize(2 * d + 1);
  sp.cov_weights.resize(2 * d + 1);
  sp.mean_weights(0) = params.lambda / scale;
  sp.cov_weights(0) = sp.mean_weights(0) + (1.0 - params.alpha * params.alpha + params.beta);
  const double wi = 0.5 / scale;
  for (int i = 1; i < 2 * d + 1; ++i) {
    sp.mean_weights(i) = wi;
    sp.cov_weights(i) = wi;
  }
  return sp;
}

MeasurementStats unscented_stats(const GaussianComponent& comp, const VectorMap& h,
                                 const Eigen::MatrixXd& r, const UnscentedParams& params) {
  const SigmaPoints sp = make_sigma_points(comp.mean(), comp.cov(), params);
  const int n_pts = static_cast<int>(sp.points.cols());
  const int m = static_cast<int>(r.rows());

  Eigen::MatrixXd z_pts(m, n_pts);
  for (int i = 0; i < n_pts; ++i) {
    const Eigen::VectorXd zi = h(sp.points.col(i));
    if (zi.size() != m)
      throw DimensionError("unscented_stats: measurement map output does not match R");
    z_pts.col(i) = zi;
  }

  MeasurementStats stats;
  stats.z_hat = z_pts * sp.mean_weights;
  stats.p_zz = Eigen::MatrixXd(r);
  stats.p_zx = Eigen::MatrixXd::Zero(m, comp.dim());
  for (int i = 0; i < n_pts; ++i) {
    const Eigen::VectorXd dz = z_pts.col(i) - stats.z_hat;
    stats.p_zz += sp.cov_weights(i) * dz * dz.transpose();
    stats.p_zx += sp.cov_weights(i) * dz * (sp.points.col(i) - comp.mean()).transpose();
  }
  stats.p_zz = symmetrized(stats.p_zz);
  return stats;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> unscented_predict(const Eigen::VectorXd& mean,
                                                              const Eigen::MatrixXd& cov,
                                                              const VectorMap& f,
                                                              const Eigen::MatrixXd& q_step,
                                                              const UnscentedParams& params) {
  const SigmaPoints sp = make_sigma_points(mean, cov, params);
  const int n_pts = static_cast<int>(sp.points.cols());
  const int d = static_cast<int>(mean.size());

  Eigen::MatrixXd f_pts(d, n_pts);
  for (int i = 0; i < n_pts; ++i) f_pts.col(i) = f(sp.points.col(i));

  Eigen::VectorXd pred_mean = f_pts * sp.mean_weights;
  Eigen::MatrixXd pred_cov = q_step;
  for (int i = 0; i < n_pts; ++i) {
    const Eigen::VectorXd dx = f_pts.col(i) - pred_mean;
    pred_cov += sp.cov_weights(i) * dx * dx.transpose();
  }
  return {std::move(pred_mean), symmetrized(pred_cov)};
}

}  // namespace filters
}  // namespace pgm
