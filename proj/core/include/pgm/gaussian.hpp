#pragma once

#include <Eigen/Dense>

#include "pgm/linalg.hpp"

namespace pgm {

/// One weighted Gaussian mode: ω·𝒩(x; μ, P).
///
/// Construction validates the representation invariants: the covariance must
/// be symmetric (1e-10 relative) with strictly positive Cholesky pivots, and
/// the weight non-negative. Instances are immutable value objects; operations
/// that "modify" a component build a new one.
class GaussianComponent {
 public:
  GaussianComponent(double weight, Eigen::VectorXd mean, Eigen::MatrixXd cov);

  [[nodiscard]] double weight() const noexcept { return weight_; }
  [[nodiscard]] const Eigen::VectorXd& mean() const noexcept { return mean_; }
  [[nodiscard]] const Eigen::MatrixXd& cov() const noexcept { return cov_; }
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(mean_.size()); }

  /// Same mode, different weight (used by normalization and weight updates).
  [[nodiscard]] GaussianComponent with_weight(double w) const {
    return GaussianComponent(w, mean_, cov_);
  }

 private:
  double weight_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

/// log 𝒩(x; μ, P) via Cholesky, all in the log domain so densities stay
/// finite at d = 40 where raw determinants under/overflow.
[[nodiscard]] double gaussian_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                                     const Eigen::MatrixXd& cov);

/// Same, with the covariance factor precomputed (hot loops evaluating many
/// points against one component).
[[nodiscard]] double gaussian_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                                     const CholeskyFactor& cov_factor);

/// 𝒩(x; μ, P) = exp(gaussian_logpdf).
[[nodiscard]] double gaussian_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                                  const Eigen::MatrixXd& cov);

}  // namespace pgm
