#pragma once

#include <string>
#include <vector>

#include "pgm/gaussian.hpp"
#include "pgm/particles.hpp"
#include "pgm/random.hpp"

namespace pgm {

/// Weighted Gaussian sum π(x) = Σ ω_i 𝒩(x; μ_i, P_i).
///
/// Construction normalizes the weights so they sum to exactly 1; a
/// pre-normalization sum below 1e-12 is rejected as a degenerate update
/// rather than silently divided through. Immutable after construction.
class GaussianMixture {
 public:
  explicit GaussianMixture(std::vector<GaussianComponent> components);

  /// Convenience: a single unit-weight mode.
  explicit GaussianMixture(const GaussianComponent& single);

  [[nodiscard]] int dim() const noexcept { return components_.front().dim(); }
  [[nodiscard]] int size() const noexcept { return static_cast<int>(components_.size()); }
  [[nodiscard]] const GaussianComponent& component(int i) const { return components_.at(i); }
  [[nodiscard]] const std::vector<GaussianComponent>& components() const noexcept {
    return components_;
  }

  /// Overall mixture mean Σ ω_i μ_i.
  [[nodiscard]] Eigen::VectorXd mean() const;

  /// Overall mixture covariance Σ ω_i (P_i + (μ_i−μ)(μ_i−μ)ᵀ).
  [[nodiscard]] Eigen::MatrixXd covariance() const;

 private:
  std::vector<GaussianComponent> components_;
};

// ---- Density and sampling --------------------------------------------------

/// log Σ ω_i 𝒩_i(x), evaluated with log-sum-exp so it stays finite in the
/// tails and at d = 40.
[[nodiscard]] double mixture_logpdf(const GaussianMixture& gmm, const Eigen::VectorXd& x);

/// Σ ω_i 𝒩_i(x): the mixture density.
[[nodiscard]] double mixture_pdf(const GaussianMixture& gmm, const Eigen::VectorXd& x);

/// Draws n particles: categorical selection on the weights, then a Gaussian
/// draw from the selected mode. Deterministic given the seed of `rng`.
[[nodiscard]] ParticleSet sample_mixture(const GaussianMixture& gmm, int n, RandomSource& rng);

// ---- Mode similarity and merging --------------------------------------------

/// Normalized error metric between two modes,
///   D(i,j) = (|4πP_i|^{−1/2} + |4πP_j|^{−1/2} − 2𝒩(μ_i; μ_j, P_i+P_j))
///            / (|4πP_i|^{−1/2} + |4πP_j|^{−1/2}),
/// i.e. the squared L2 distance between the two unit Gaussians normalized by
/// the sum of their energies. 0 for identical modes, → 1 as they separate;
/// symmetric. Computed in the log domain and clamped to [0, 1].
[[nodiscard]] double similarity(const GaussianComponent& ci, const GaussianComponent& cj);

/// Moment-matched merge of the modes at `indices`:
///   ω = Σ ω_l,  μ = Σ ω_l μ_l / ω,  P = Σ ω_l (P_l + (μ_l−μ)(μ_l−μ)ᵀ) / ω.
/// Indices must be non-empty, distinct and in range.
[[nodiscard]] GaussianComponent merge_components(const GaussianMixture& gmm,
                                                 const std::vector<int>& indices);

/// Merges every group of modes connected by D(i,j) < tol edges (union-find
/// over the similarity graph, so chained closeness merges transitively), and
/// repeats until no pair is closer than tol. Output order follows the
/// smallest surviving input index of each group; weights re-normalized.
[[nodiscard]] GaussianMixture merge_pass(const GaussianMixture& gmm, double tol);

/// Collapses the whole mixture to its moment-matched single Gaussian.
[[nodiscard]] GaussianComponent moment_match(const GaussianMixture& gmm);

// ---- Serialization -----------------------------------------------------------

/// JSON document {dim, components: [{weight, mean: [..], cov: [[..]]}]} with
/// row-major covariance; used for posterior snapshots.
[[nodiscard]] std::string to_json(const GaussianMixture& gmm, int indent = 2);
[[nodiscard]] GaussianMixture mixture_from_json(const std::string& text);

}  // namespace pgm
