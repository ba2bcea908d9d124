#pragma once

#include <Eigen/Dense>
#include <functional>

#include "pgm/gaussian.hpp"

namespace pgm {
namespace filters {

/// Scaled unscented-transform parameters. λ is taken as given (not derived
/// from a κ); the benchmark setting is α=1.3, β=1.5, λ=0.2.
struct UnscentedParams {
  double alpha = 1.3;
  double beta = 1.5;
  double lambda = 0.2;
};

/// The 2d+1 symmetric sigma points of (mean, cov) with their mean and
/// covariance weights:
///   X₀ = μ, X_{±i} = μ ± (√((d+λ)P))ᵢ,
///   w₀ = λ/(d+λ), wᵢ = 1/(2(d+λ)); w₀ᶜ = w₀ + (1 − α² + β).
/// Mean weights sum to 1 exactly.
struct SigmaPoints {
  Eigen::MatrixXd points;        ///< d × (2d+1), column 0 is the mean
  Eigen::VectorXd mean_weights;  ///< length 2d+1
  Eigen::VectorXd cov_weights;
};

[[nodiscard]] SigmaPoints make_sigma_points(const Eigen::VectorXd& mean,
                                            const Eigen::MatrixXd& cov,
                                            const UnscentedParams& params);

/// Predicted measurement statistics for one Gaussian mode:
///   ẑ (m), P_zz (m×m, includes +R), P_zx = E[(h−ẑ)(x−μ)ᵀ] (m×d).
struct MeasurementStats {
  Eigen::VectorXd z_hat;
  Eigen::MatrixXd p_zz;
  Eigen::MatrixXd p_zx;
};

using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Measurement statistics of h over a Gaussian mode via the scaled UT.
/// Exact for linear h. Throws CholeskyFailure if the mode covariance cannot
/// be factored for the sigma spread.
[[nodiscard]] MeasurementStats unscented_stats(const GaussianComponent& comp, const VectorMap& h,
                                               const Eigen::MatrixXd& r,
                                               const UnscentedParams& params);

/// UT propagation of (mean, cov) through f, with per-step process noise
/// added: returns (Σw f(X), Σwᶜ(fX−x̂)(fX−x̂)ᵀ + Q), symmetrized.
[[nodiscard]] std::pair<Eigen::VectorXd, Eigen::MatrixXd> unscented_predict(
    const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const VectorMap& f,
    const Eigen::MatrixXd& q_step, const UnscentedParams& params);

}  // namespace filters
}  // namespace pgm
