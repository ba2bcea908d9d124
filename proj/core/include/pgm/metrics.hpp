#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "pgm/chi2.hpp"
#include "pgm/mixture.hpp"

namespace pgm {
namespace metrics {

/// Two-sided standard-normal 99% band used to score the Sw series
/// (±z at the 0.995 quantile).
inline constexpr double kSwBound = 2.5758293035489004;

/// Per-(run, step) metric values recorded by the harness.
struct MetricRecord {
  int run = 0;
  int step = 0;
  double rmse_sq_contrib = 0.0;        ///< ‖truth − posterior mean‖²
  double beta = 0.0;                   ///< most-likely-mode NEES
  std::optional<double> sw_term;       ///< (ε²−E)/√Var; absent when Var degenerates
  double likelihood = 0.0;             ///< posterior density at the truth
  double v2sigma = 0.0;                ///< Σ det(2Pᵢ)
  int chosen_m = 1;                    ///< posterior mode count used for evaluation
};

// ---- Error metrics --------------------------------------------------------------

/// Monte-Carlo-averaged RMSE series: E(t) = √(mean over runs of ‖err(t)‖²)
/// — squared norms are averaged before the root — and its time average,
/// which averages the rooted series.
struct RmseSeries {
  Eigen::VectorXd per_step;
  double time_average = 0.0;
};

/// truths/estimates are indexed [run][step]; every run must have the same
/// step count and every pair of vectors the same dimension.
[[nodiscard]] RmseSeries rmse_series(const std::vector<std::vector<Eigen::VectorXd>>& truths,
                                     const std::vector<std::vector<Eigen::VectorXd>>& estimates);

/// Normalized estimation error squared β = eᵀP⁻¹e with e = truth − mean.
[[nodiscard]] double nees(const Eigen::VectorXd& x_true, const Eigen::VectorXd& mean,
                          const Eigen::MatrixXd& cov);

/// Mode index maximizing the per-mode density 𝒩ᵢ(x; μᵢ, Pᵢ) — unweighted, as
/// the multimodal consistency test prescribes.
[[nodiscard]] int most_likely_mode(const GaussianMixture& gmm, const Eigen::VectorXd& x);

/// Multimodal NEES: β of the most likely mode. With one mode this is exactly
/// the unimodal nees().
struct ModeNees {
  double beta = 0.0;
  int mode_index = 0;
};
[[nodiscard]] ModeNees nees_most_likely(const GaussianMixture& gmm,
                                        const Eigen::VectorXd& x_true);

// ---- χ² consistency bound ----------------------------------------------------------

/// One-sided NEES acceptance bound: N·β̄ over N runs is χ² with d·N degrees
/// of freedom, so the bound on the run-averaged β is quantile(χ²_{dN}, level)/N.
struct ChiSquareBound {
  int dim = 0;
  int runs = 0;
  double level = 0.0;
  double bound = 0.0;
};
[[nodiscard]] ChiSquareBound chi2_upper_bound(int dim, int n_runs, double level);

/// Fraction of steps with β(t) < ub.
[[nodiscard]] double consistency_fraction(const Eigen::VectorXd& beta_series, double ub);

// ---- Mixture-weight consistency test --------------------------------------------------

/// One run's ingredients for the weight-consistency statistic: the observed
/// squared weight error ε² = ‖e_i − ω‖² for the one-hot indicator e_i of the
/// most likely mode, with its exact expectation and variance under the
/// claimed weights,
///   E(ε²)  = Σ ωᵢ(1−ωᵢ),
///   Var(ε²) = Σ ωᵢ(1−ωᵢ)((1−ωᵢ)³+ωᵢ³)
///           + ΣΣ_{j≠k} ωⱼω_k(ωⱼ+ω_k−3ωⱼω_k) − E(ε²)².
struct WeightConsistency {
  double eps_sq = 0.0;
  double expected = 0.0;
  double variance = 0.0;
};

/// `indicator` must be one-hot of the same length as `weights`.
[[nodiscard]] WeightConsistency weight_consistency_terms(const Eigen::VectorXd& weights,
                                                         const Eigen::VectorXd& indicator);

/// Convenience overload taking the selected-mode index directly.
[[nodiscard]] WeightConsistency weight_consistency_terms(const Eigen::VectorXd& weights,
                                                         int mode_index);

/// Whether a run's variance supports a standardized term; a single mode (or
/// numerically zero variance) does not — the statistic is 0/0 there.
[[nodiscard]] std::optional<double> sw_term(const WeightConsistency& wc);

/// Standardized sum over runs at one step: Σ termⱼ/√n over the n runs with a
/// defined term (equals Σ(ε²−E)/√(N·Var) when every run is defined, and
/// keeps unit variance when some are excluded). Absent when no run defines a
/// term; the exclusion count is reported.
[[nodiscard]] std::optional<double> sw_statistic(
    const std::vector<std::optional<double>>& run_terms, int* excluded = nullptr);

// ---- Posterior-quality metrics ----------------------------------------------------------

/// Posterior density at the truth. The summary mixture already encodes the
/// evaluation rule for every filter type (ensembles arrive moment-fit to a
/// single Gaussian), so this is the mixture density itself.
[[nodiscard]] double likelihood_metric(const GaussianMixture& posterior_summary,
                                       const Eigen::VectorXd& x_true);

/// 2σ volume proxy: Σᵢ det(2Pᵢ) over the mixture modes, exactly as defined —
/// no mixture-weight factor. Computed via log-determinants.
[[nodiscard]] double v2sigma(const GaussianMixture& gmm);

}  // namespace metrics
}  // namespace pgm
