#include "pgm/gaussian.hpp"

#include <cmath>

#include "pgm/errors.hpp"

namespace pgm {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2π)
}

GaussianComponent::GaussianComponent(double weight, Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : weight_(weight), mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size())
    throw DimensionError("GaussianComponent: cov shape does not match mean dimension");
  if (!(weight_ >= 0.0))
    throw InvalidArgument("GaussianComponent: weight must be non-negative");
  if (!is_symmetric(cov_))
    throw InvalidArgument("GaussianComponent: covariance is not symmetric");
  (void)CholeskyFactor::compute(cov_);  // throws CholeskyFailure when not SPD
}

double gaussian_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const Eigen::MatrixXd& cov) {
  return gaussian_logpdf(x, mean, CholeskyFactor::compute(cov));
}

double gaussian_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const CholeskyFactor& cov_factor) {
  if (x.size() != mean.size() || cov_factor.dim() != x.size())
    throw DimensionError("gaussian_logpdf: dimension mismatch");
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * kLogTwoPi + cov_factor.log_det() + cov_factor.mahalanobis_sq(x - mean));
}

double gaussian_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                    const Eigen::MatrixXd& cov) {
  return std::exp(gaussian_logpdf(x, mean, cov));
}

}  // namespace pgm
