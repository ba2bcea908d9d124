#pragma once

#include <Eigen/Dense>

namespace pgm {

// ---- Cholesky ------------------------------------------------------------

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
///
/// Hand-rolled (rather than Eigen::LLT) because the failure contract requires
/// the index of the first non-positive pivot, which LLT does not expose.
class CholeskyFactor {
 public:
  /// Factors a = L·Lᵀ. Throws CholeskyFailure carrying (dim, pivot index) if
  /// a is not positive definite.
  [[nodiscard]] static CholeskyFactor compute(const Eigen::MatrixXd& a);

  [[nodiscard]] const Eigen::MatrixXd& lower() const noexcept { return l_; }
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(l_.rows()); }

  /// log|A| = 2·Σ log L_ii; stays finite where the raw determinant would
  /// underflow (large dimension, small covariances).
  [[nodiscard]] double log_det() const;

  /// Solves A·x = b via two triangular solves.
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

  /// rᵀ·A⁻¹·r, computed as ‖L⁻¹r‖².
  [[nodiscard]] double mahalanobis_sq(const Eigen::VectorXd& r) const;

 private:
  explicit CholeskyFactor(Eigen::MatrixXd l) : l_(std::move(l)) {}
  Eigen::MatrixXd l_;
};

// ---- Symmetry helpers ------------------------------------------------------

/// (M + Mᵀ)/2 — applied after every covariance arithmetic update to guard the
/// SPD invariant against roundoff.
[[nodiscard]] Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m);

/// True if ‖M − Mᵀ‖∞ ≤ rel_tol·max(1, ‖M‖∞).
[[nodiscard]] bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

// ---- SPD repair ------------------------------------------------------------

/// Symmetric-eigendecomposition repair: eigenvalues below `floor_value` are
/// raised to it and the matrix reassembled. Used by the UKF covariance-repair
/// path; the caller is responsible for logging the event.
[[nodiscard]] Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& m, double floor_value);

/// Adds an escalating ridge ε·I (starting at max(1e-8, 1e-6·trace/d), ×10 per
/// attempt) until the matrix factors. Returns the repaired matrix; reports the
/// final ε through `eps_used` when non-null (0 when no repair was needed).
[[nodiscard]] Eigen::MatrixXd ridge_to_spd(const Eigen::MatrixXd& m, double* eps_used = nullptr);

/// Symmetric square root of a positive semi-definite matrix (negative
/// eigenvalues from roundoff are clamped to zero). Used to sample noise with
/// singular covariances, e.g. process noise entering one coordinate only.
[[nodiscard]] Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m);

}  // namespace pgm
