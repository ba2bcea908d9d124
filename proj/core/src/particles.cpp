#include "pgm/particles.hpp"

#include "pgm/errors.hpp"
#include "pgm/linalg.hpp"

namespace pgm {

ParticleSet::ParticleSet(Eigen::MatrixXd points) : points_(std::move(points)) {
  if (points_.cols() < 1 || points_.rows() < 1)
    throw InvalidArgument("ParticleSet: need at least one particle of dimension >= 1");
}

ParticleSet::ParticleSet(int dim, int n) : points_(dim, n) {
  if (dim < 1 || n < 1)
    throw InvalidArgument("ParticleSet: need at least one particle of dimension >= 1");
}

Eigen::VectorXd ParticleSet::mean() const {
  return points_.rowwise().mean();
}

Eigen::MatrixXd ParticleSet::covariance() const {
  const int n = size();
  if (n == 1) return Eigen::MatrixXd::Zero(dim(), dim());
  Eigen::MatrixXd centered = points_.colwise() - points_.rowwise().mean();
  return symmetrized(centered * centered.transpose() / static_cast<double>(n - 1));
}

GaussianComponent fit_gaussian(const ParticleSet& particles, FitInfo* info) {
  double eps = 0.0;
  Eigen::MatrixXd cov = ridge_to_spd(particles.covariance(), &eps);
  if (info != nullptr) {
    info->repaired = eps > 0.0;
    info->ridge = eps;
  }
  return GaussianComponent(1.0, particles.mean(), cov);
}

}  // namespace pgm
