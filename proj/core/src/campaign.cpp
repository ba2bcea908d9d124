#include "pgm/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "pgm/errors.hpp"
#include "pgm/plot.hpp"

namespace pgm {
namespace harness {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

/// Quotes a CSV cell that could contain commas or quotes (error messages).
std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  return out;
}

}  // namespace

// ---- Filter construction and scoring -------------------------------------------------

std::unique_ptr<filters::Filter> make_filter(const FilterSpec& spec,
                                             const models::StateSpaceModel& model,
                                             const GaussianMixture& prior,
                                             std::uint64_t master_seed, int run) {
  const std::uint64_t seed =
      derive_seed(master_seed, static_cast<std::uint64_t>(run), fnv1a64(spec.name));
  if (spec.type == "pgm")
    return std::make_unique<filters::PgmFilter>(spec.name, model, prior, spec.pgm, seed);
  if (spec.type == "pf")
    return std::make_unique<filters::SirFilter>(spec.name, model, prior, spec.particles, seed);
  if (spec.type == "ukf")
    return std::make_unique<filters::UkfFilter>(spec.name, model, prior, spec.ut);
  if (spec.type == "gmukf")
    return std::make_unique<filters::GmUkfFilter>(spec.name, model, prior, spec.ut);
  if (spec.type == "enkf")
    return std::make_unique<filters::EnkfFilter>(spec.name, model, prior, spec.particles, seed);
  throw ConfigError("unknown filter type '" + spec.type + "' for filter '" + spec.name + "'");
}

metrics::MetricRecord evaluate_posterior(int run, int step, const GaussianMixture& posterior,
                                         const Eigen::VectorXd& x_true) {
  metrics::MetricRecord rec;
  rec.run = run;
  rec.step = step;
  rec.rmse_sq_contrib = (x_true - posterior.mean()).squaredNorm();
  const metrics::ModeNees mn = metrics::nees_most_likely(posterior, x_true);
  rec.beta = mn.beta;
  if (posterior.size() > 1) {
    Eigen::VectorXd w(posterior.size());
    for (int i = 0; i < posterior.size(); ++i) w(i) = posterior.component(i).weight();
    rec.sw_term = metrics::sw_term(metrics::weight_consistency_terms(w, mn.mode_index));
  }
  rec.likelihood = metrics::likelihood_metric(posterior, x_true);
  rec.v2sigma = metrics::v2sigma(posterior);
  rec.chosen_m = posterior.size();
  return rec;
}

// ---- Campaign execution ---------------------------------------------------------------

namespace {

RunResult run_filter_on_truth(const FilterSpec& spec, const models::StateSpaceModel& model,
                              const GaussianMixture& prior, const models::TruthData& truth,
                              std::uint64_t master_seed, int run, bool collect_trace) {
  RunResult rr;
  rr.run = run;
  const int steps = static_cast<int>(truth.states.size()) - 1;
  try {
    const auto filter = make_filter(spec, model, prior, master_seed, run);
    for (int k = 1; k <= steps; ++k) {
      filters::StepTrace trace;
      filter->step(truth.measurements[static_cast<std::size_t>(k)], k,
                   collect_trace ? &trace : nullptr);
      if (collect_trace) {
        trace.step = k;
        rr.traces.push_back(std::move(trace));
      }
      GaussianMixture post = filter->posterior();
      if (!post.mean().allFinite())
        throw std::runtime_error("state diverged (non-finite mean) at step " + std::to_string(k));
      metrics::MetricRecord rec =
          evaluate_posterior(run, k, post, truth.states[static_cast<std::size_t>(k)]);
      if (!std::isfinite(rec.rmse_sq_contrib) || !std::isfinite(rec.beta) ||
          !std::isfinite(rec.likelihood) || !std::isfinite(rec.v2sigma))
        throw std::runtime_error("non-finite metric at step " + std::to_string(k));
      rr.records.push_back(std::move(rec));
      if (k == steps) rr.final_posterior = std::move(post);
    }
  } catch (const std::exception& e) {
    rr.ok = false;
    rr.error = e.what();
    rr.records.clear();
    rr.traces.clear();
    rr.final_posterior.reset();
  }
  return rr;
}

double mean_of(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.mean(); }

void aggregate(FilterCampaign& fc, int steps, double chi2_bound) {
  const int runs = static_cast<int>(fc.runs.size());
  int included = 0;
  for (const auto& rr : fc.runs) included += rr.ok ? 1 : 0;

  FilterSeries& s = fc.series;
  s.e_rms.resize(steps);
  s.beta.resize(steps);
  s.likelihood.resize(steps);
  s.v2sigma.resize(steps);
  s.sw.assign(static_cast<std::size_t>(steps), std::nullopt);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::optional<double>> terms;
  for (int t = 0; t < steps; ++t) {
    double sum_sq = 0.0, sum_beta = 0.0, sum_like = 0.0, sum_vol = 0.0;
    terms.clear();
    for (int r = 0; r < runs; ++r) {
      if (!fc.runs[static_cast<std::size_t>(r)].ok) continue;
      const auto& rec = fc.runs[static_cast<std::size_t>(r)].records[static_cast<std::size_t>(t)];
      sum_sq += rec.rmse_sq_contrib;
      sum_beta += rec.beta;
      sum_like += rec.likelihood;
      sum_vol += rec.v2sigma;
      terms.push_back(rec.sw_term);
    }
    if (included > 0) {
      s.e_rms(t) = std::sqrt(sum_sq / included);
      s.beta(t) = sum_beta / included;
      s.likelihood(t) = sum_like / included;
      s.v2sigma(t) = sum_vol / included;
      s.sw[static_cast<std::size_t>(t)] = metrics::sw_statistic(terms);
    } else {
      s.e_rms(t) = nan;
      s.beta(t) = nan;
      s.likelihood(t) = nan;
      s.v2sigma(t) = nan;
    }
  }

  FilterSummary& sum = fc.summary;
  sum.name = fc.name;
  sum.runs_included = included;
  sum.runs_failed = runs - included;
  if (included > 0) {
    sum.e_rms_bar = mean_of(s.e_rms);
    sum.beta_c_pct = 100.0 * metrics::consistency_fraction(s.beta, chi2_bound);
    sum.l_hat = mean_of(s.likelihood);
    sum.v2sigma_hat = mean_of(s.v2sigma);
    int defined = 0, inside = 0;
    for (const auto& sw : s.sw) {
      if (!sw) continue;
      defined += 1;
      if (std::abs(*sw) < metrics::kSwBound) inside += 1;
    }
    if (defined > 0) sum.sw_c_pct = 100.0 * inside / defined;
  } else {
    sum.e_rms_bar = nan;
    sum.beta_c_pct = nan;
    sum.l_hat = nan;
    sum.v2sigma_hat = nan;
  }
}

}  // namespace

CampaignResult run_campaign(const ExperimentConfig& cfg, const models::StateSpaceModel& model,
                            const GaussianMixture& prior, const CampaignOptions& opts) {
  if (model.state_dim() != prior.dim())
    throw DimensionError("prior dimension " + std::to_string(prior.dim()) +
                         " does not match model state dimension " +
                         std::to_string(model.state_dim()));
  if (opts.replay) {
    if (opts.replay->states.size() < 2)
      throw InvalidArgument("replay scenario needs at least one step");
    if (opts.replay->states.front().size() != model.state_dim())
      throw DimensionError("replay state dimension does not match the model");
  }

  const int runs = opts.replay ? 1 : cfg.runs;
  const int steps =
      opts.replay ? static_cast<int>(opts.replay->states.size()) - 1 : cfg.steps;

  CampaignResult result;
  result.config = cfg;
  result.dt = model.dt();
  result.chi2_bound = metrics::chi2_upper_bound(model.state_dim(), runs, kNeesLevel);
  result.filters.resize(cfg.filters.size());
  for (std::size_t f = 0; f < cfg.filters.size(); ++f) {
    result.filters[f].name = cfg.filters[f].name;
    result.filters[f].runs.resize(static_cast<std::size_t>(runs));
  }

  std::atomic<int> next_run{0};
  std::atomic<int> done_runs{0};
  std::mutex io_mutex;
  std::vector<std::string> worker_errors;

  const auto worker = [&]() {
    try {
      for (;;) {
        const int r = next_run.fetch_add(1);
        if (r >= runs) return;

        models::TruthData truth;
        if (opts.replay) {
          truth = *opts.replay;
        } else {
          RandomSource process_rng(
              derive_seed(cfg.seed, static_cast<std::uint64_t>(r),
                          role_label(StreamRole::truth_process)));
          RandomSource meas_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r),
                                            role_label(StreamRole::truth_measurement)));
          RandomSource init_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r),
                                            role_label(StreamRole::truth_init)));
          const Eigen::VectorXd x0 = sample_mixture(prior, 1, init_rng).point(0);
          truth = models::simulate_truth(model, x0, steps, process_rng, meas_rng);
        }
        if (r == 0) result.truth_run0 = truth;

        for (std::size_t f = 0; f < cfg.filters.size(); ++f)
          result.filters[f].runs[static_cast<std::size_t>(r)] = run_filter_on_truth(
              cfg.filters[f], model, prior, truth, cfg.seed, r, cfg.trace);

        const int done = done_runs.fetch_add(1) + 1;
        if (!opts.quiet) {
          const std::lock_guard<std::mutex> lock(io_mutex);
          std::fprintf(stderr, "[%s] run %d/%d complete\n", cfg.name.c_str(), done, runs);
        }
      }
    } catch (const std::exception& e) {
      const std::lock_guard<std::mutex> lock(io_mutex);
      worker_errors.emplace_back(e.what());
    }
  };

  const int n_threads = std::max(1, std::min(opts.threads, runs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  // Truth simulation failures (unlike per-filter failures, which are captured
  // in the run records) abort the campaign: without a scenario nothing can run.
  if (!worker_errors.empty()) throw std::runtime_error("campaign aborted: " + worker_errors[0]);

  for (auto& fc : result.filters) aggregate(fc, steps, result.chi2_bound.bound);
  return result;
}

CampaignResult run_campaign(const ExperimentConfig& cfg, const CampaignOptions& opts) {
  const auto model = build_model(cfg);
  const GaussianMixture prior = build_prior(cfg, model->state_dim());
  return run_campaign(cfg, *model, prior, opts);
}

// ---- Output emission --------------------------------------------------------------------

namespace {

void write_summary_csv(const CampaignResult& res, const std::string& path) {
  auto out = open_out(path);
  out << "filter,E_rms_bar,beta_c_pct,L_hat,V2sigma_hat,sw_c_pct\n";
  for (const auto& fc : res.filters) {
    const auto& s = fc.summary;
    out << fc.name << ',' << fmt(s.e_rms_bar) << ',' << fmt(s.beta_c_pct) << ',' << fmt(s.l_hat)
        << ',' << fmt(s.v2sigma_hat) << ',' << fmt_opt(s.sw_c_pct) << '\n';
  }
}

void write_metrics_csv(const CampaignResult& res, const std::string& path) {
  auto out = open_out(path);
  out << "filter,run,step,rmse_sq_contrib,beta,sw_term,likelihood,v2sigma,chosen_m\n";
  for (const auto& fc : res.filters)
    for (const auto& rr : fc.runs)
      for (const auto& rec : rr.records)
        out << fc.name << ',' << rec.run << ',' << rec.step << ',' << fmt(rec.rmse_sq_contrib)
            << ',' << fmt(rec.beta) << ',' << fmt_opt(rec.sw_term) << ',' << fmt(rec.likelihood)
            << ',' << fmt(rec.v2sigma) << ',' << rec.chosen_m << '\n';
}

void write_series_csv(const CampaignResult& res, const std::string& path) {
  auto out = open_out(path);
  out << "filter,step,e_rms,beta,sw,likelihood,v2sigma\n";
  for (const auto& fc : res.filters) {
    const auto& s = fc.series;
    for (int t = 0; t < s.e_rms.size(); ++t)
      out << fc.name << ',' << (t + 1) << ',' << fmt(s.e_rms(t)) << ',' << fmt(s.beta(t)) << ','
          << fmt_opt(s.sw[static_cast<std::size_t>(t)]) << ',' << fmt(s.likelihood(t)) << ','
          << fmt(s.v2sigma(t)) << '\n';
  }
}

void write_run_status_csv(const CampaignResult& res, const std::string& path) {
  auto out = open_out(path);
  out << "filter,run,status,error\n";
  for (const auto& fc : res.filters)
    for (const auto& rr : fc.runs)
      out << fc.name << ',' << rr.run << ',' << (rr.ok ? "ok" : "failed") << ','
          << csv_quote(rr.error) << '\n';
}

void write_trace_csv(const FilterCampaign& fc, const std::string& path) {
  auto out = open_out(path);
  out << "run,step,chosen_m,merged_modes,likelihood_underflow,covariance_repaired,"
         "particle_stats_fallback,resample_degenerate,weights\n";
  for (const auto& rr : fc.runs)
    for (const auto& tr : rr.traces) {
      out << rr.run << ',' << tr.step << ',' << tr.chosen_m << ',' << tr.merged_modes << ','
          << (tr.likelihood_underflow ? 1 : 0) << ',' << (tr.covariance_repaired ? 1 : 0) << ','
          << (tr.particle_stats_fallback ? 1 : 0) << ',' << (tr.resample_degenerate ? 1 : 0)
          << ',';
      for (std::size_t i = 0; i < tr.weights.size(); ++i)
        out << (i ? "|" : "") << fmt(tr.weights[i]);
      out << '\n';
    }
}

void write_charts(const CampaignResult& res, const std::string& dir) {
  const int steps = res.filters.empty() ? 0 : static_cast<int>(res.filters[0].series.e_rms.size());
  std::vector<double> x(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) x[static_cast<std::size_t>(t)] = t + 1;

  const auto series_of = [&](const std::function<double(const FilterSeries&, int)>& pick) {
    std::vector<plot::Series> out;
    for (const auto& fc : res.filters) {
      plot::Series s;
      s.label = fc.name;
      s.x = x;
      s.y.resize(static_cast<std::size_t>(steps));
      for (int t = 0; t < steps; ++t) s.y[static_cast<std::size_t>(t)] = pick(fc.series, t);
      out.push_back(std::move(s));
    }
    return out;
  };

  plot::ChartSpec erms;
  erms.title = res.config.name + " RMS ERROR";
  erms.x_label = "STEP";
  erms.y_label = "E RMS";
  erms.series = series_of([](const FilterSeries& s, int t) { return s.e_rms(t); });
  plot::render_chart(erms, dir + "/erms.png");

  plot::ChartSpec nees;
  nees.title = res.config.name + " MEAN NEES";
  nees.x_label = "STEP";
  nees.y_label = "BETA";
  nees.series = series_of([](const FilterSeries& s, int t) { return s.beta(t); });
  nees.h_line = res.chi2_bound.bound;
  nees.h_line_label = "UB = " + fmt(res.chi2_bound.bound).substr(0, 6);
  plot::render_chart(nees, dir + "/nees.png");

  plot::ChartSpec like;
  like.title = res.config.name + " TRUTH LIKELIHOOD";
  like.x_label = "STEP";
  like.y_label = "L";
  like.series = series_of([](const FilterSeries& s, int t) { return s.likelihood(t); });
  like.log_y = res.config.plot_log_scale;
  plot::render_chart(like, dir + "/likelihood.png");

  plot::ChartSpec vol;
  vol.title = res.config.name + " 2 SIGMA VOLUME";
  vol.x_label = "STEP";
  vol.y_label = "V";
  vol.series = series_of([](const FilterSeries& s, int t) { return s.v2sigma(t); });
  vol.log_y = res.config.plot_log_scale;
  plot::render_chart(vol, dir + "/v2sigma.png");
}

}  // namespace

void emit_outputs(const CampaignResult& result, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());

  write_summary_csv(result, dir + "/summary.csv");
  write_metrics_csv(result, dir + "/metrics.csv");
  write_series_csv(result, dir + "/series.csv");
  write_run_status_csv(result, dir + "/run_status.csv");
  write_truth_csv(result.truth_run0, result.dt, dir + "/truth_run0.csv");

  for (const auto& fc : result.filters) {
    if (!fc.runs.empty() && fc.runs[0].final_posterior) {
      auto out = open_out(dir + "/posterior_" + fc.name + ".json");
      out << to_json(*fc.runs[0].final_posterior) << '\n';
    }
    if (result.config.trace) write_trace_csv(fc, dir + "/trace_" + fc.name + ".csv");
  }

  write_charts(result, dir);
}

// ---- Truth serialization ------------------------------------------------------------------

void write_truth_csv(const models::TruthData& truth, double dt, const std::string& path) {
  if (truth.states.empty()) throw InvalidArgument("cannot serialize an empty scenario");
  if (truth.measurements.size() != truth.states.size())
    throw InvalidArgument("scenario has mismatched state/measurement streams");
  const int d = static_cast<int>(truth.states.front().size());
  int m = 0;
  for (const auto& z : truth.measurements)
    if (z) {
      m = static_cast<int>(z->size());
      break;
    }

  auto out = open_out(path);
  out << "step,time";
  for (int j = 1; j <= d; ++j) out << ",x_" << j;
  out << ",has_meas";
  for (int j = 1; j <= m; ++j) out << ",z_" << j;
  out << '\n';

  for (std::size_t k = 0; k < truth.states.size(); ++k) {
    out << k << ',' << fmt(static_cast<double>(k) * dt);
    for (int j = 0; j < d; ++j) out << ',' << fmt(truth.states[k](j));
    const auto& z = truth.measurements[k];
    out << ',' << (z ? 1 : 0);
    for (int j = 0; j < m; ++j) {
      out << ',';
      if (z) out << fmt((*z)(j));
    }
    out << '\n';
  }
}

models::TruthData load_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open truth file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty truth file");
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "step" || header[1] != "time")
    throw IoError(path + ": header must start with 'step,time,x_1,...'");

  int d = 0;
  std::size_t col = 2;
  while (col < header.size() && header[col] == "x_" + std::to_string(d + 1)) {
    d += 1;
    col += 1;
  }
  if (d == 0 || col >= header.size() || header[col] != "has_meas")
    throw IoError(path + ": expected x_1..x_d followed by has_meas in the header");
  col += 1;
  int m = 0;
  while (col < header.size() && header[col] == "z_" + std::to_string(m + 1)) {
    m += 1;
    col += 1;
  }
  if (col != header.size()) throw IoError(path + ": unrecognized trailing header columns");

  models::TruthData truth;
  int line_no = 1;
  while (std::getline(in, line)) {
    line_no += 1;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (cells.size() != header.size())
      throw IoError(where + ": expected " + std::to_string(header.size()) + " cells, got " +
                    std::to_string(cells.size()));
    if (std::stoll(cells[0]) != static_cast<long long>(truth.states.size()))
      throw IoError(where + ": steps must be contiguous from 0");

    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x(j) = std::stod(cells[static_cast<std::size_t>(2 + j)]);
    truth.states.push_back(std::move(x));

    const bool has_meas = cells[static_cast<std::size_t>(2 + d)] == "1";
    if (has_meas) {
      Eigen::VectorXd z(m);
      for (int j = 0; j < m; ++j) z(j) = std::stod(cells[static_cast<std::size_t>(3 + d + j)]);
      truth.measurements.emplace_back(std::move(z));
    } else {
      truth.measurements.emplace_back(std::nullopt);
    }
  }
  if (truth.states.empty()) throw IoError(path + ": no data rows");
  return truth;
}

}  // namespace harness
}  // namespace pgm
