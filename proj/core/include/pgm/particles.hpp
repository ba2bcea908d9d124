#pragma once

#include <Eigen/Dense>

#include "pgm/gaussian.hpp"

namespace pgm {

/// Ensemble of d-dimensional states, stored column-wise (d × N). Column
/// storage keeps per-particle access contiguous for Eigen.
class ParticleSet {
 public:
  /// Takes ownership of a d × N matrix of particle columns; N ≥ 1.
  explicit ParticleSet(Eigen::MatrixXd points);

  /// Uninitialized set of n particles of dimension d (filled by samplers).
  ParticleSet(int dim, int n);

  [[nodiscard]] int dim() const noexcept { return static_cast<int>(points_.rows()); }
  [[nodiscard]] int size() const noexcept { return static_cast<int>(points_.cols()); }

  [[nodiscard]] Eigen::VectorXd point(int i) const { return points_.col(i); }
  void set_point(int i, const Eigen::VectorXd& x) { points_.col(i) = x; }

  [[nodiscard]] const Eigen::MatrixXd& points() const noexcept { return points_; }
  [[nodiscard]] Eigen::MatrixXd& points() noexcept { return points_; }

  /// Sample mean over particles.
  [[nodiscard]] Eigen::VectorXd mean() const;

  /// Bessel-corrected sample covariance (1/(N−1)); the zero matrix when N=1.
  [[nodiscard]] Eigen::MatrixXd covariance() const;

 private:
  Eigen::MatrixXd points_;
};

/// Diagnostics from fit_gaussian's degenerate paths.
struct FitInfo {
  bool repaired = false;  ///< covariance needed a ridge to become SPD
  double ridge = 0.0;     ///< the ε that was added
};

/// Moment fit of a particle set as a single unit-weight Gaussian. Singular
/// sample covariances (N ≤ d, collapsed ensembles) are ridge-repaired so the
/// result always satisfies the SPD invariant; the repair is reported through
/// `info`, never silent.
[[nodiscard]] GaussianComponent fit_gaussian(const ParticleSet& particles,
                                             FitInfo* info = nullptr);

}  // namespace pgm
