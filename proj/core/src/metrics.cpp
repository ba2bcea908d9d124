#include "pgm/metrics.hpp"

#include <cmath>

#include "pgm/errors.hpp"
#include "pgm/linalg.hpp"

namespace pgm {
namespace metrics {

RmseSeries rmse_series(const std::vector<std::vector<Eigen::VectorXd>>& truths,
                       const std::vector<std::vector<Eigen::VectorXd>>& estimates) {
  if (truths.size() != estimates.size() || truths.empty())
    throw InvalidArgument("rmse_series: need equal, non-zero run counts");
  const std::size_t steps = truths.front().size();
  if (steps == 0) throw InvalidArgument("rmse_series: need at least one step");

  RmseSeries out;
  out.per_step = Eigen::VectorXd::Zero(static_cast<int>(steps));
  for (std::size_t j = 0; j < truths.size(); ++j) {
    if (truths[j].size() != steps || estimates[j].size() != steps)
      throw InvalidArgument("rmse_series: ragged run lengths");
    for (std::size_t t = 0; t < steps; ++t) {
      if (truths[j][t].size() != estimates[j][t].size())
        throw InvalidArgument("rmse_series: truth/estimate dimension mismatch");
      out.per_step(static_cast<int>(t)) += (truths[j][t] - estimates[j][t]).squaredNorm();
    }
  }
  out.per_step = (out.per_step / static_cast<double>(truths.size())).cwiseSqrt();
  out.time_average = out.per_step.mean();
  return out;
}

double nees(const Eigen::VectorXd& x_true, const Eigen::VectorXd& mean,
            const Eigen::MatrixXd& cov) {
  if (x_true.size() != mean.size())
    throw DimensionError("nees: truth/mean dimension mismatch");
  return CholeskyFactor::compute(cov).mahalanobis_sq(x_true - mean);
}

int most_likely_mode(const GaussianMixture& gmm, const Eigen::VectorXd& x) {
  int best = 0;
  double best_log = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < gmm.size(); ++i) {
    const auto& c = gmm.component(i);
    const double lp = gaussian_logpdf(x, c.mean(), c.cov());
    if (lp > best_log) {
      best_log = lp;
      best = i;
    }
  }
  return best;
}

ModeNees nees_most_likely(const GaussianMixture& gmm, const Eigen::VectorXd& x_true) {
  const int i = most_likely_mode(gmm, x_true);
  const auto& c = gmm.component(i);
  return {nees(x_true, c.mean(), c.cov()), i};
}

ChiSquareBound chi2_upper_bound(int dim, int n_runs, double level) {
  if (dim < 1 || n_runs < 1)
    throw InvalidArgument("chi2_upper_bound: dim and runs must be >= 1");
  ChiSquareBound b;
  b.dim = dim;
  b.runs = n_runs;
  b.level = level;
  b.bound = chi2_quantile(static_cast<double>(dim) * n_runs, level) / n_runs;
  return b;
}

double consistency_fraction(const Eigen::VectorXd& beta_series, double ub) {
  if (beta_series.size() == 0) return 0.0;
  int below = 0;
  for (int t = 0; t < beta_series.size(); ++t) below += (beta_series(t) < ub);
  return static_cast<double>(below) / static_cast<double>(beta_series.size());
}

WeightConsistency weight_consistency_terms(const Eigen::VectorXd& weights,
                                           const Eigen::VectorXd& indicator) {
  if (weights.size() != indicator.size())
    throw DimensionError("weight_consistency_terms: weight/indicator length mismatch");
  int hot = -1;
  for (int i = 0; i < indicator.size(); ++i) {
    if (indicator(i) == 1.0) {
      if (hot >= 0) throw InvalidArgument("weight_consistency_terms: indicator not one-hot");
      hot = i;
    } else if (indicator(i) != 0.0) {
      throw InvalidArgument("weight_consistency_terms: indicator not one-hot");
    }
  }
  if (hot < 0) throw InvalidArgument("weight_consistency_terms: indicator not one-hot");
  return weight_consistency_terms(weights, hot);
}

WeightConsistency weight_consistency_terms(const Eigen::VectorXd& weights, int mode_index) {
  const int m = static_cast<int>(weights.size());
  if (mode_index < 0 || mode_index >= m)
    throw InvalidArgument("weight_consistency_terms: mode index out of range");

  WeightConsistency wc;
  // ε² = ‖e_i − ω‖², written out so the one-hot never materializes.
  wc.eps_sq = weights.squaredNorm() - 2.0 * weights(mode_index) + 1.0;

  for (int i = 0; i < m; ++i) wc.expected += weights(i) * (1.0 - weights(i));

  // Variance exactly per the printed expansion (cross-checked against exact
  // enumeration in the test suite).
  double var = -wc.expected * wc.expected;
  for (int i = 0; i < m; ++i) {
    const double w = weights(i);
    const double q = 1.0 - w;
    var += w * q * (q * q * q + w * w * w);
  }
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) {
      if (j == k) continue;
      const double wj = weights(j), wk = weights(k);
      var += wj * wk * (wj + wk - 3.0 * wj * wk);
    }
  wc.variance = var;
  return wc;
}

std::optional<double> sw_term(const WeightConsistency& wc) {
  // One mode makes ε² deterministic (variance exactly 0): the standardized
  // term is 0/0 and the run is excluded rather than scored as consistent.
  if (wc.variance <= 1e-14) return std::nullopt;
  return (wc.eps_sq - wc.expected) / std::sqrt(wc.variance);
}

std::optional<double> sw_statistic(const std::vector<std::optional<double>>& run_terms,
                                   int* excluded) {
  double sum = 0.0;
  int included = 0;
  for (const auto& t : run_terms) {
    if (t.has_value()) {
      sum += *t;
      included += 1;
    }
  }
  if (excluded != nullptr) *excluded = static_cast<int>(run_terms.size()) - included;
  if (included == 0) return std::nullopt;
  return sum / std::sqrt(static_cast<double>(included));
}

double likelihood_metric(const GaussianMixture& posterior_summary,
                         const Eigen::VectorXd& x_true) {
  return mixture_pdf(posterior_summary, x_true);
}

double v2sigma(const GaussianMixture& gmm) {
  const double d = static_cast<double>(gmm.dim());
  double total = 0.0;
  for (const auto& c : gmm.components()) {
    // det(2P) = 2^d · det(P), via the log-determinant to survive d = 40.
    total += std::exp(d * std::log(2.0) + CholeskyFactor::compute(c.cov()).log_det());
  }
  return total;
}

}  // namespace metrics
}  // namespace pgm
