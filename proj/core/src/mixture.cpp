#include "pgm/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "pgm/errors.hpp"

namespace pgm {

namespace {
constexpr double kLogFourPi = 2.5310242469692907930;  // log(4π)

/// log(e^a + e^b) without overflow.
double log_sum_exp2(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}
}  // namespace

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw InvalidArgument("GaussianMixture: no components");
  const int d = components_.front().dim();
  double sum = 0.0;
  for (const auto& c : components_) {
    if (c.dim() != d) throw DimensionError("GaussianMixture: mixed component dimensions");
    sum += c.weight();
  }
  if (sum < 1e-12)
    throw InvalidArgument("GaussianMixture: weight sum below 1e-12, degenerate update");
  for (auto& c : components_) c = c.with_weight(c.weight() / sum);
}

GaussianMixture::GaussianMixture(const GaussianComponent& single)
    : GaussianMixture(std::vector<GaussianComponent>{single.with_weight(1.0)}) {}

Eigen::VectorXd GaussianMixture::mean() const {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(dim());
  for (const auto& c : components_) mu += c.weight() * c.mean();
  return mu;
}

Eigen::MatrixXd GaussianMixture::covariance() const {
  const Eigen::VectorXd mu = mean();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(dim(), dim());
  for (const auto& c : components_) {
    const Eigen::VectorXd dm = c.mean() - mu;
    p += c.weight() * (c.cov() + dm * dm.transpose());
  }
  return symmetrized(p);
}

double mixture_logpdf(const GaussianMixture& gmm, const Eigen::VectorXd& x) {
  if (x.size() != gmm.dim()) throw DimensionError("mixture_logpdf: point dimension mismatch");
  double acc = -std::numeric_limits<double>::infinity();
  for (const auto& c : gmm.components()) {
    if (c.weight() <= 0.0) continue;  // zero-weight modes contribute exactly 0
    const double term = std::log(c.weight()) + gaussian_logpdf(x, c.mean(), c.cov());
    acc = log_sum_exp2(acc, term);
  }
  return acc;
}

double mixture_pdf(const GaussianMixture& gmm, const Eigen::VectorXd& x) {
  return std::exp(mixture_logpdf(gmm, x));
}

ParticleSet sample_mixture(const GaussianMixture& gmm, int n, RandomSource& rng) {
  if (n < 1) throw InvalidArgument("sample_mixture: need n >= 1");
  const int d = gmm.dim();
  const int m = gmm.size();

  std::vector<double> cdf(m);
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    acc += gmm.component(i).weight();
    cdf[i] = acc;
  }
  cdf.back() = 1.0;  // guard against roundoff at the top of the CDF

  std::vector<Eigen::MatrixXd> chol(m);
  for (int i = 0; i < m; ++i)
    chol[i] = CholeskyFactor::compute(gmm.component(i).cov()).lower();

  ParticleSet out(d, n);
  for (int s = 0; s < n; ++s) {
    const double u = rng.uniform();
    const int i = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    out.points().col(s) = gmm.component(i).mean() + chol[i] * rng.gaussian_vector(d);
  }
  return out;
}

double similarity(const GaussianComponent& ci, const GaussianComponent& cj) {
  if (ci.dim() != cj.dim()) throw DimensionError("similarity: component dimension mismatch");
  const double d = static_cast<double>(ci.dim());
  // |4πP|^{-1/2} in the log domain: -(d·log 4π + log|P|)/2.
  const double la = -0.5 * (d * kLogFourPi + CholeskyFactor::compute(ci.cov()).log_det());
  const double lb = -0.5 * (d * kLogFourPi + CholeskyFactor::compute(cj.cov()).log_det());
  const double lc = gaussian_logpdf(ci.mean(), cj.mean(), symmetrized(ci.cov() + cj.cov()));
  const double metric = 1.0 - 2.0 * std::exp(lc - log_sum_exp2(la, lb));
  return std::clamp(metric, 0.0, 1.0);
}

GaussianComponent merge_components(const GaussianMixture& gmm, const std::vector<int>& indices) {
  if (indices.empty()) throw InvalidArgument("merge_components: empty index set");
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidArgument("merge_components: duplicate indices");
  if (sorted.front() < 0 || sorted.back() >= gmm.size())
    throw InvalidArgument("merge_components: index out of range");

  double w = 0.0;
  for (int i : sorted) w += gmm.component(i).weight();
  if (w < 1e-300) throw InvalidArgument("merge_components: merged weight underflows");

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(gmm.dim());
  for (int i : sorted) mu += gmm.component(i).weight() * gmm.component(i).mean();
  mu /= w;

  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(gmm.dim(), gmm.dim());
  for (int i : sorted) {
    const auto& c = gmm.component(i);
    const Eigen::VectorXd dm = c.mean() - mu;
    p += c.weight() * (c.cov() + dm * dm.transpose());
  }
  p = symmetrized(p / w);
  return GaussianComponent(w, std::move(mu), std::move(p));
}

GaussianMixture merge_pass(const GaussianMixture& gmm, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("merge_pass: tol must lie in (0,1)");

  GaussianMixture current = gmm;
  // Each union-find pass can create merged modes that are newly close, so
  // iterate to a fixpoint; each pass strictly reduces the count, bounding the
  // loop by the initial mode count.
  while (current.size() > 1) {
    const int m = current.size();
    std::vector<int> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };

    bool any_edge = false;
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        if (similarity(current.component(i), current.component(j)) < tol) {
          const int ri = find(i), rj = find(j);
          if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
          any_edge = true;
        }
      }
    }
    if (!any_edge) break;

    std::vector<std::vector<int>> groups(m);
    for (int i = 0; i < m; ++i) groups[find(i)].push_back(i);

    std::vector<GaussianComponent> merged;
    for (int r = 0; r < m; ++r) {
      if (groups[r].empty()) continue;
      merged.push_back(groups[r].size() == 1 ? current.component(r)
                                             : merge_components(current, groups[r]));
    }
    current = GaussianMixture(std::move(merged));
  }
  return current;
}

GaussianComponent moment_match(const GaussianMixture& gmm) {
  std::vector<int> all(gmm.size());
  std::iota(all.begin(), all.end(), 0);
  return merge_components(gmm, all);  // weight is 1 by the mixture invariant
}

std::string to_json(const GaussianMixture& gmm, int indent) {
  nlohmann::json doc;
  doc["dim"] = gmm.dim();
  doc["components"] = nlohmann::json::array();
  for (const auto& c : gmm.components()) {
    nlohmann::json jc;
    jc["weight"] = c.weight();
    jc["mean"] = std::vector<double>(c.mean().data(), c.mean().data() + c.dim());
    auto rows = nlohmann::json::array();
    for (int r = 0; r < c.dim(); ++r) {
      auto row = nlohmann::json::array();
      for (int k = 0; k < c.dim(); ++k) row.push_back(c.cov()(r, k));
      rows.push_back(std::move(row));
    }
    jc["cov"] = std::move(rows);
    doc["components"].push_back(std::move(jc));
  }
  return doc.dump(indent);
}

GaussianMixture mixture_from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  const int d = doc.at("dim").get<int>();
  std::vector<GaussianComponent> comps;
  for (const auto& jc : doc.at("components")) {
    Eigen::VectorXd mean(d);
    const auto& jm = jc.at("mean");
    if (static_cast<int>(jm.size()) != d)
      throw InvalidArgument("mixture_from_json: mean length does not match dim");
    for (int i = 0; i < d; ++i) mean(i) = jm.at(i).get<double>();
    Eigen::MatrixXd cov(d, d);
    const auto& jcov = jc.at("cov");
    if (static_cast<int>(jcov.size()) != d)
      throw InvalidArgument("mixture_from_json: cov row count does not match dim");
    for (int r = 0; r < d; ++r)
      for (int k = 0; k < d; ++k) cov(r, k) = jcov.at(r).at(k).get<double>();
    comps.emplace_back(jc.at("weight").get<double>(), std::move(mean), std::move(cov));
  }
  return GaussianMixture(std::move(comps));
}

}  // namespace pgm
