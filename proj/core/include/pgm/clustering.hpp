#pragma once

#include <vector>

#include "pgm/mixture.hpp"
#include "pgm/particles.hpp"
#include "pgm/random.hpp"

namespace pgm {
namespace clustering {

/// Partition of a particle set: per-particle cluster labels, the cluster
/// count M, and the final Lloyd centroids. Every cluster owns at least one
/// particle (empty clusters are repaired during iteration).
struct ClusterAssignment {
  std::vector<int> labels;  ///< one label in [0, M) per particle
  int cluster_count = 0;
  std::vector<Eigen::VectorXd> centroids;
};

/// Within-cluster sum of squared distances to the centroids — the quantity
/// Lloyd's algorithm descends. Exposed for the monotonicity property tests
/// and for restart selection.
[[nodiscard]] double wcss(const ParticleSet& points, const ClusterAssignment& assignment);

/// Lloyd's k-means with k-means++ seeding, best of `restarts` independent
/// seedings by WCSS (ties keep the earliest restart, so the reduction is
/// deterministic). Iterates to an assignment fixpoint or max_iter. An empty
/// cluster is repaired by reseeding its centroid onto the particle farthest
/// from the centroid's last position, which keeps M fixed and never
/// increases WCSS.
[[nodiscard]] ClusterAssignment kmeans(const ParticleSet& points, int m, RandomSource& rng,
                                       int max_iter = 100, int restarts = 5);

/// Diagnostics for the degenerate covariance paths in cluster_moments.
struct ClusterDiagnostics {
  int singleton_clusters = 0;   ///< clusters that fell back to scaled global covariance
  int ridged_covariances = 0;   ///< clusters whose covariance needed a ridge
};

/// Per-cluster moment extraction into a Gaussian mixture:
///   n_i = |S_i|, w_i = n_i/N, μ_i = mean(S_i), C_i = Bessel covariance (n_i−1).
/// A singleton cluster takes 1e-2 × the global ensemble covariance; a
/// singular C_i (n_i ≤ d or failed factorization) is ridged with
/// ε = max(1e-8, 1e-6·trace/d), escalating. Repairs are reported through
/// `diag`, never silent.
[[nodiscard]] GaussianMixture cluster_moments(const ParticleSet& points,
                                              const ClusterAssignment& assignment,
                                              ClusterDiagnostics* diag = nullptr);

/// Likelihood agreement measure: the plain sum (not product, not log) of the
/// mixture density over all particles, L = Σ_i π(x_i). Scores how well a
/// candidate mixture explains the ensemble it was fit to.
[[nodiscard]] double likelihood_agreement(const GaussianMixture& gmm, const ParticleSet& points);

/// Outcome of the naive model-selection descent.
struct ModelSelection {
  GaussianMixture mixture;
  ClusterAssignment assignment;
  double l_mes = 0.0;
  ClusterDiagnostics diagnostics;
};

/// Naive cluster-count selection: for M = M_max down to 1, cluster from
/// scratch, fit moments, and score with likelihood_agreement; the incumbent
/// is replaced on L ≥ L*, so equal scores favor the smaller M (evaluated
/// later in the descent). Candidate M is clamped to the particle count.
[[nodiscard]] ModelSelection select_model(const ParticleSet& points, int m_max,
                                          RandomSource& rng, int max_iter = 100,
                                          int restarts = 5);

}  // namespace clustering
}  // namespace pgm
