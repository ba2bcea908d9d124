#include "pgm/demos.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pgm/errors.hpp"
#include "pgm/gaussian.hpp"
#include "pgm/models.hpp"
#include "pgm/plot.hpp"
#include "pgm/random.hpp"

namespace pgm {
namespace demos {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

double scalar_pdf(double x, double mean, double var) {
  Eigen::VectorXd xv(1), mv(1);
  Eigen::MatrixXd cv(1, 1);
  xv << x;
  mv << mean;
  cv << var;
  return gaussian_pdf(xv, mv, cv);
}

}  // namespace

// ---- Importance-weight collapse ------------------------------------------------

DepletionResult run_depletion(int n_particles, double prior_mean, double prior_var,
                              double like_mean, double like_var, std::uint64_t seed) {
  if (n_particles < 1) throw InvalidArgument("depletion demo needs at least one particle");
  if (prior_var <= 0.0 || like_var <= 0.0)
    throw InvalidArgument("depletion demo variances must be positive");

  RandomSource rng(seed);
  DepletionResult res;
  res.prior_mean = prior_mean;
  res.prior_var = prior_var;
  res.like_mean = like_mean;
  res.like_var = like_var;

  res.positions.resize(n_particles);
  const double sd = std::sqrt(prior_var);
  for (int i = 0; i < n_particles; ++i) res.positions(i) = prior_mean + sd * rng.gaussian();

  // Log-domain weighting: with a likelihood this narrow, raw densities at the
  // far tail underflow long before the normalized weights become degenerate.
  Eigen::VectorXd log_w(n_particles);
  for (int i = 0; i < n_particles; ++i) {
    const double r = res.positions(i) - like_mean;
    log_w(i) = -0.5 * r * r / like_var;
  }
  const double shift = log_w.maxCoeff();
  res.weights = (log_w.array() - shift).exp();
  res.weights /= res.weights.sum();

  res.max_weight = res.weights.maxCoeff();
  res.n_eff = 1.0 / res.weights.squaredNorm();
  return res;
}

DepletionResult run_depletion_default(std::uint64_t seed) {
  return run_depletion(400, 11.0, 0.3, 15.0, 0.1, seed);
}

std::vector<double> depletion_sweep(const std::vector<double>& prior_vars, std::uint64_t seed) {
  if (prior_vars.empty()) throw InvalidArgument("sweep needs at least one variance");
  constexpr int n = 400;
  RandomSource rng(seed);
  Eigen::VectorXd xi(n);
  for (int i = 0; i < n; ++i) xi(i) = rng.gaussian();

  std::vector<double> n_eff;
  n_eff.reserve(prior_vars.size());
  for (const double v : prior_vars) {
    if (v <= 0.0) throw InvalidArgument("sweep variances must be positive");
    const double sd = std::sqrt(v);
    Eigen::VectorXd log_w(n);
    for (int i = 0; i < n; ++i) {
      const double x = 11.0 + sd * xi(i);
      const double r = x - 15.0;
      log_w(i) = -0.5 * r * r / 0.1;
    }
    Eigen::VectorXd w = (log_w.array() - log_w.maxCoeff()).exp();
    w /= w.sum();
    n_eff.push_back(1.0 / w.squaredNorm());
  }
  return n_eff;
}

std::vector<double> depletion_sweep_grid() { return {0.3, 0.6, 1.2, 2.5, 5.0, 10.0}; }

void emit_depletion_outputs(const DepletionResult& res, const std::string& dir) {
  ensure_dir(dir);
  const int n = static_cast<int>(res.positions.size());

  {
    auto out = open_out(dir + "/depletion_weights.csv");
    out << "index,x,weight\n";
    for (int i = 0; i < n; ++i)
      out << i << ',' << fmt(res.positions(i)) << ',' << fmt(res.weights(i)) << '\n';
  }

  {
    const auto grid = depletion_sweep_grid();
    const auto n_eff = depletion_sweep(grid);
    auto out = open_out(dir + "/depletion_sweep.csv");
    out << "prior_var,n_eff\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
      out << fmt(grid[i]) << ',' << fmt(n_eff[i]) << '\n';
  }

  // Histogram of weight mass across position, with the (scaled) prior and
  // likelihood curves for context.
  {
    const double lo = std::min(res.positions.minCoeff(),
                               res.like_mean - 4.0 * std::sqrt(res.like_var));
    const double hi = std::max(res.positions.maxCoeff(),
                               res.like_mean + 4.0 * std::sqrt(res.like_var));
    constexpr int bins = 60;
    const double width = (hi - lo) / bins;

    plot::Series mass;
    mass.label = "WEIGHT MASS";
    std::vector<double> bin_mass(bins, 0.0);
    for (int i = 0; i < n; ++i) {
      int b = static_cast<int>((res.positions(i) - lo) / width);
      b = std::clamp(b, 0, bins - 1);
      bin_mass[static_cast<std::size_t>(b)] += res.weights(i);
    }
    for (int b = 0; b < bins; ++b) {
      mass.x.push_back(lo + (b + 0.5) * width);
      mass.y.push_back(bin_mass[static_cast<std::size_t>(b)]);
    }
    const double peak = *std::max_element(mass.y.begin(), mass.y.end());

    const auto curve = [&](const std::string& label, double mean, double var) {
      plot::Series s;
      s.label = label;
      double top = 0.0;
      for (int i = 0; i <= 200; ++i) {
        const double x = lo + (hi - lo) * i / 200.0;
        s.x.push_back(x);
        s.y.push_back(scalar_pdf(x, mean, var));
        top = std::max(top, s.y.back());
      }
      for (double& y : s.y) y *= peak / top;
      return s;
    };

    plot::ChartSpec spec;
    spec.title = "IMPORTANCE WEIGHT COLLAPSE";
    spec.x_label = "X";
    spec.y_label = "WEIGHT MASS";
    spec.series = {mass, curve("PRIOR (SCALED)", res.prior_mean, res.prior_var),
                   curve("LIKELIHOOD (SCALED)", res.like_mean, res.like_var)};
    plot::render_chart(spec, dir + "/depletion_hist.png");
  }
}

// ---- Flow-induced mode splitting ---------------------------------------------

BimodalResult run_bimodal(int n_particles, double t_final, double dt, std::uint64_t seed) {
  if (n_particles < 2) throw InvalidArgument("bimodal demo needs at least two particles");
  if (dt <= 0.0 || t_final <= 0.0) throw InvalidArgument("bimodal demo times must be positive");

  Eigen::VectorXd mean(2);
  mean << -12.0, 0.0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
  cov(0, 0) = 0.2;
  cov(1, 1) = 1.0;
  const GaussianMixture prior(GaussianComponent(1.0, mean, cov));

  RandomSource rng(seed);
  ParticleSet particles = sample_mixture(prior, n_particles, rng);

  const int steps = static_cast<int>(std::lround(t_final / dt));
  for (int i = 0; i < n_particles; ++i) {
    Eigen::Vector2d x = particles.point(i);
    for (int s = 0; s < steps; ++s) x += dt * models::demo_bimodal_drift(x);
    particles.set_point(i, x);
  }

  int positive = 0;
  for (int i = 0; i < n_particles; ++i) positive += particles.point(i)(1) > 0.0 ? 1 : 0;

  clustering::ModelSelection selection = clustering::select_model(particles, 2, rng);

  BimodalResult res{std::move(particles), static_cast<double>(positive) / n_particles,
                    static_cast<double>(n_particles - positive) / n_particles,
                    std::move(selection)};
  return res;
}

BimodalResult run_bimodal_default(std::uint64_t seed) { return run_bimodal(1000, 10.0, 0.01, seed); }

void emit_bimodal_outputs(const BimodalResult& res, const std::string& dir) {
  ensure_dir(dir);
  const int n = res.particles.size();

  {
    auto out = open_out(dir + "/bimodal_particles.csv");
    out << "x_1,x_2\n";
    for (int i = 0; i < n; ++i)
      out << fmt(res.particles.point(i)(0)) << ',' << fmt(res.particles.point(i)(1)) << '\n';
  }

  {
    auto out = open_out(dir + "/bimodal_mixture.json");
    out << to_json(res.selection.mixture) << '\n';
  }

  {
    double lo = res.particles.point(0)(1), hi = lo;
    for (int i = 0; i < n; ++i) {
      lo = std::min(lo, res.particles.point(i)(1));
      hi = std::max(hi, res.particles.point(i)(1));
    }
    if (!(hi > lo)) hi = lo + 1.0;
    constexpr int bins = 50;
    const double width = (hi - lo) / bins;

    plot::Series counts;
    counts.label = "PARTICLE COUNT";
    std::vector<int> bin_count(bins, 0);
    for (int i = 0; i < n; ++i) {
      int b = static_cast<int>((res.particles.point(i)(1) - lo) / width);
      b = std::clamp(b, 0, bins - 1);
      bin_count[static_cast<std::size_t>(b)] += 1;
    }
    for (int b = 0; b < bins; ++b) {
      counts.x.push_back(lo + (b + 0.5) * width);
      counts.y.push_back(bin_count[static_cast<std::size_t>(b)]);
    }

    plot::ChartSpec spec;
    spec.title = "MODE SPLITTING ALONG X2";
    spec.x_label = "X2";
    spec.y_label = "COUNT";
    spec.series = {counts};
    plot::render_chart(spec, dir + "/bimodal_x2.png");
  }
}

int scalar_split_mode_count(int n_particles, int steps, double var0, double process_noise,
                            std::uint64_t seed) {
  if (n_particles < 2) throw InvalidArgument("mode-split check needs at least two particles");
  if (steps < 1) throw InvalidArgument("mode-split check needs at least one step");

  const models::ScalarGrowthModel model(process_noise, 1.0, steps + 1);
  Eigen::VectorXd mean(1);
  mean << 0.0;
  Eigen::MatrixXd cov(1, 1);
  cov << var0;
  const GaussianMixture prior(GaussianComponent(1.0, mean, cov));

  RandomSource rng(seed);
  ParticleSet particles = sample_mixture(prior, n_particles, rng);
  for (int k = 0; k < steps; ++k)
    for (int i = 0; i < n_particles; ++i)
      particles.set_point(i, model.propagate(particles.point(i), k, rng));

  return clustering::select_model(particles, 2, rng).mixture.size();
}

}  // namespace demos
}  // namespace pgm
