#include "pgm/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "pgm/errors.hpp"
#include "pgm/linalg.hpp"

namespace pgm {
namespace clustering {

namespace {

/// Index of the nearest centroid to column `i` of `pts`.
int nearest_centroid(const Eigen::MatrixXd& pts, int i,
                     const std::vector<Eigen::VectorXd>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < static_cast<int>(centroids.size()); ++c) {
    const double d = (pts.col(i) - centroids[c]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

/// k-means++ seeding: first centroid uniform, then each next centroid drawn
/// with probability proportional to its squared distance from the chosen set.
std::vector<Eigen::VectorXd> seed_plus_plus(const Eigen::MatrixXd& pts, int m,
                                            RandomSource& rng) {
  const int n = static_cast<int>(pts.cols());
  std::vector<Eigen::VectorXd> centroids;
  centroids.reserve(m);
  centroids.push_back(pts.col(rng.uniform_index(n)));

  Eigen::VectorXd dist2(n);
  for (int i = 0; i < n; ++i) dist2(i) = (pts.col(i) - centroids[0]).squaredNorm();

  while (static_cast<int>(centroids.size()) < m) {
    const double total = dist2.sum();
    int pick;
    if (total <= 0.0) {
      pick = rng.uniform_index(n);  // all points coincide with a centroid
    } else {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += dist2(i);
        if (u < acc) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(pts.col(pick));
    for (int i = 0; i < n; ++i)
      dist2(i) = std::min(dist2(i), (pts.col(i) - centroids.back()).squaredNorm());
  }
  return centroids;
}

/// One seeded Lloyd run to fixpoint or max_iter.
ClusterAssignment lloyd_once(const ParticleSet& points, int m, RandomSource& rng, int max_iter) {
  const Eigen::MatrixXd& pts = points.points();
  const int n = points.size();

  ClusterAssignment a;
  a.cluster_count = m;
  a.centroids = seed_plus_plus(pts, m, rng);
  a.labels.assign(n, -1);

  for (int iter = 0; iter < max_iter; ++iter) {
    // Assignment step.
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const int c = nearest_centroid(pts, i, a.centroids);
      if (c != a.labels[i]) {
        a.labels[i] = c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    // Update step.
    std::vector<int> counts(m, 0);
    std::vector<Eigen::VectorXd> sums(m, Eigen::VectorXd::Zero(points.dim()));
    for (int i = 0; i < n; ++i) {
      counts[a.labels[i]] += 1;
      sums[a.labels[i]] += pts.col(i);
    }
    for (int c = 0; c < m; ++c)
      if (counts[c] > 0) a.centroids[c] = sums[c] / static_cast<double>(counts[c]);

    // Empty-cluster repair: park the centroid on the particle farthest from
    // its stale position (one particle per repaired cluster). The moved
    // centroid has no members, so WCSS is untouched by the move itself.
    std::vector<bool> taken(n, false);
    for (int c = 0; c < m; ++c) {
      if (counts[c] > 0) continue;
      int far = -1;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (taken[i]) continue;
        const double d = (pts.col(i) - a.centroids[c]).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      a.centroids[c] = pts.col(far);
      taken[far] = true;
    }
  }

  // Final assignment against the final centroids, so labels and centroids
  // are mutually consistent. Clusters emptied by the last update are
  // repaired by pinning a distinct particle to them (label forced, centroid
  // moved onto the particle); pinning never un-fills another cluster because
  // pinned particles are excluded from further stealing, so this terminates
  // within m passes with every cluster non-empty — even for degenerate
  // inputs where all particles coincide.
  std::vector<bool> pinned(n, false);
  for (int pass = 0; pass <= m; ++pass) {
    for (int i = 0; i < n; ++i)
      if (!pinned[i]) a.labels[i] = nearest_centroid(pts, i, a.centroids);
    std::vector<int> counts(m, 0);
    for (int i = 0; i < n; ++i) counts[a.labels[i]] += 1;

    bool any_empty = false;
    for (int c = 0; c < m; ++c) {
      if (counts[c] > 0) continue;
      any_empty = true;
      int far = -1;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (pinned[i]) continue;
        const double dd = (pts.col(i) - a.centroids[c]).squaredNorm();
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      a.centroids[c] = pts.col(far);
      a.labels[far] = c;
      pinned[far] = true;
    }
    if (!any_empty) break;
  }
  return a;
}

}  // namespace

double wcss(const ParticleSet& points, const ClusterAssignment& assignment) {
  double total = 0.0;
  for (int i = 0; i < points.size(); ++i)
    total += (points.points().col(i) - assignment.centroids[assignment.labels[i]]).squaredNorm();
  return total;
}

ClusterAssignment kmeans(const ParticleSet& points, int m, RandomSource& rng, int max_iter,
                         int restarts) {
  if (m < 1) throw InvalidArgument("kmeans: cluster count must be >= 1");
  if (m > points.size())
    throw InvalidArgument("kmeans: cluster count exceeds particle count");

  if (m == 1) {
    ClusterAssignment a;
    a.cluster_count = 1;
    a.labels.assign(points.size(), 0);
    a.centroids = {points.mean()};
    return a;
  }

  ClusterAssignment best;
  double best_wcss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    ClusterAssignment a = lloyd_once(points, m, rng, max_iter);
    const double w = wcss(points, a);
    if (w < best_wcss) {  // strict: ties keep the earliest restart
      best_wcss = w;
      best = std::move(a);
    }
  }
  return best;
}

GaussianMixture cluster_moments(const ParticleSet& points, const ClusterAssignment& assignment,
                                ClusterDiagnostics* diag) {
  const int n = points.size();
  const int m = assignment.cluster_count;
  const int d = points.dim();
  if (static_cast<int>(assignment.labels.size()) != n)
    throw InvalidArgument("cluster_moments: label count does not match particle count");

  std::vector<int> counts(m, 0);
  std::vector<Eigen::VectorXd> means(m, Eigen::VectorXd::Zero(d));
  for (int i = 0; i < n; ++i) {
    const int c = assignment.labels[i];
    if (c < 0 || c >= m) throw InvalidArgument("cluster_moments: label out of range");
    counts[c] += 1;
    means[c] += points.points().col(i);
  }
  for (int c = 0; c < m; ++c) {
    if (counts[c] == 0)
      throw InvalidArgument("cluster_moments: empty cluster in assignment");
    means[c] /= static_cast<double>(counts[c]);
  }

  std::vector<Eigen::MatrixXd> covs(m, Eigen::MatrixXd::Zero(d, d));
  for (int i = 0; i < n; ++i) {
    const int c = assignment.labels[i];
    const Eigen::VectorXd dev = points.points().col(i) - means[c];
    covs[c] += dev * dev.transpose();
  }

  std::vector<GaussianComponent> comps;
  comps.reserve(m);
  for (int c = 0; c < m; ++c) {
    Eigen::MatrixXd cov;
    if (counts[c] == 1) {
      // The 1/(n−1) formula is undefined; borrow shape from the whole
      // ensemble at reduced scale so the mode stays alive.
      cov = 1e-2 * points.covariance();
      if (diag != nullptr) diag->singleton_clusters += 1;
    } else {
      cov = symmetrized(covs[c] / static_cast<double>(counts[c] - 1));
    }

    double eps = 0.0;
    if (counts[c] <= d && counts[c] > 1) {
      // Rank-deficient by construction: ridge up front instead of waiting
      // for the factorization to fail.
      eps = std::max(1e-8, 1e-6 * cov.trace() / static_cast<double>(d));
      cov += eps * Eigen::MatrixXd::Identity(d, d);
    }
    double extra = 0.0;
    cov = ridge_to_spd(cov, &extra);
    if (diag != nullptr && (eps > 0.0 || extra > 0.0)) diag->ridged_covariances += 1;

    comps.emplace_back(static_cast<double>(counts[c]) / static_cast<double>(n), means[c],
                       std::move(cov));
  }
  return GaussianMixture(std::move(comps));
}

double likelihood_agreement(const GaussianMixture& gmm, const ParticleSet& points) {
  if (gmm.dim() != points.dim())
    throw DimensionError("likelihood_agreement: mixture/particle dimension mismatch");

  // Factor each component once; this runs for every candidate M per filter
  // step, over the full ensemble.
  std::vector<CholeskyFactor> factors;
  std::vector<double> log_w;
  factors.reserve(gmm.size());
  for (const auto& c : gmm.components()) {
    factors.push_back(CholeskyFactor::compute(c.cov()));
    log_w.push_back(c.weight() > 0.0 ? std::log(c.weight())
                                     : -std::numeric_limits<double>::infinity());
  }

  double total = 0.0;
  for (int i = 0; i < points.size(); ++i) {
    const Eigen::VectorXd x = points.points().col(i);
    double acc = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < gmm.size(); ++c) {
      if (!std::isfinite(log_w[c])) continue;
      const double t = log_w[c] + gaussian_logpdf(x, gmm.component(c).mean(), factors[c]);
      acc = (acc > t) ? acc + std::log1p(std::exp(t - acc)) : t + std::log1p(std::exp(acc - t));
    }
    total += std::exp(acc);
  }
  return total;
}

ModelSelection select_model(const ParticleSet& points, int m_max, RandomSource& rng,
                            int max_iter, int restarts) {
  if (m_max < 1) throw InvalidArgument("select_model: m_max must be >= 1");

  std::optional<ModelSelection> best;
  for (int m = std::min(m_max, points.size()); m >= 1; --m) {
    ClusterDiagnostics diag;
    ClusterAssignment a = kmeans(points, m, rng, max_iter, restarts);
    GaussianMixture gmm = cluster_moments(points, a, &diag);
    const double l = likelihood_agreement(gmm, points);
    // Replace on >=: equal scores favor the smaller M, found later.
    if (!best || l >= best->l_mes)
      best = ModelSelection{std::move(gmm), std::move(a), l, diag};
  }
  return std::move(*best);
}

}  // namespace clustering
}  // namespace pgm
