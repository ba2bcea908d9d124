#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pgm/config.hpp"
#include "pgm/filters.hpp"
#include "pgm/metrics.hpp"
#include "pgm/mixture.hpp"
#include "pgm/models.hpp"

namespace pgm {
namespace harness {

/// Confidence level of the NEES acceptance bound drawn on the β chart.
inline constexpr double kNeesLevel = 0.99;

/// Instantiates one filter from its config entry. The filter's random stream
/// is derived from (master seed, run index, hash of the filter's name), so
/// adding, removing, or reordering filters never changes another filter's
/// draws.
[[nodiscard]] std::unique_ptr<filters::Filter> make_filter(const FilterSpec& spec,
                                                           const models::StateSpaceModel& model,
                                                           const GaussianMixture& prior,
                                                           std::uint64_t master_seed, int run);

/// Scores one posterior summary against the truth at one step.
[[nodiscard]] metrics::MetricRecord evaluate_posterior(int run, int step,
                                                       const GaussianMixture& posterior,
                                                       const Eigen::VectorXd& x_true);

/// One filter's outcome on one run. A run that diverges (non-finite state or
/// an unrecoverable numerical failure) is kept with ok=false and excluded
/// from every aggregate.
struct RunResult {
  int run = 0;
  bool ok = true;
  std::string error;                               ///< set when !ok
  std::vector<metrics::MetricRecord> records;      ///< steps 1..T (complete when ok)
  std::vector<filters::StepTrace> traces;          ///< filled when tracing is enabled
  std::optional<GaussianMixture> final_posterior;  ///< summary after the last step
};

/// Per-step aggregates for one filter over its included runs.
struct FilterSeries {
  Eigen::VectorXd e_rms;                  ///< √(run-mean ‖err‖²)
  Eigen::VectorXd beta;                   ///< run-mean NEES
  std::vector<std::optional<double>> sw;  ///< standardized weight statistic
  Eigen::VectorXd likelihood;             ///< run-mean posterior density at the truth
  Eigen::VectorXd v2sigma;                ///< run-mean Σ det(2Pᵢ)
};

/// Whole-campaign scalar summary for one filter (one results-table row).
struct FilterSummary {
  std::string name;
  double e_rms_bar = 0.0;          ///< time average of the RMSE series
  double beta_c_pct = 0.0;         ///< % of steps with mean NEES below the χ² bound
  double l_hat = 0.0;              ///< time average of the likelihood series
  double v2sigma_hat = 0.0;        ///< time average of the volume series
  std::optional<double> sw_c_pct;  ///< % of defined steps with |Sw| inside the band
  int runs_included = 0;
  int runs_failed = 0;
};

struct FilterCampaign {
  std::string name;
  std::vector<RunResult> runs;
  FilterSeries series;
  FilterSummary summary;
};

struct CampaignResult {
  ExperimentConfig config;
  metrics::ChiSquareBound chi2_bound;  ///< for (state dim, executed runs, kNeesLevel)
  std::vector<FilterCampaign> filters;
  models::TruthData truth_run0;        ///< the run-0 scenario, for export/replay
  double dt = 1.0;                     ///< tick duration, for the truth time column
};

struct CampaignOptions {
  int threads = 1;
  bool quiet = true;
  /// Non-null: skip truth simulation and re-filter this recorded scenario as
  /// a single run (run index 0, so filter seeds match the original run 0).
  const models::TruthData* replay = nullptr;
};

/// Runs the full Monte Carlo campaign: per run, one simulated truth shared by
/// every filter, then per-step scoring and per-filter aggregation. Runs are
/// independent and may execute on a thread pool; results land in
/// deterministic slots so the outcome is bit-identical for any thread count.
[[nodiscard]] CampaignResult run_campaign(const ExperimentConfig& cfg,
                                          const models::StateSpaceModel& model,
                                          const GaussianMixture& prior,
                                          const CampaignOptions& opts = {});

/// Convenience wrapper: builds the model and prior from the config first.
[[nodiscard]] CampaignResult run_campaign(const ExperimentConfig& cfg,
                                          const CampaignOptions& opts = {});

/// Writes the result tree under `dir`: summary.csv, metrics.csv, series.csv,
/// run_status.csv, truth_run0.csv, posterior_<filter>.json (run-0 final
/// posterior), optional trace_<filter>.csv, and the four charts
/// (erms.png, nees.png with the bound line, likelihood.png, v2sigma.png).
void emit_outputs(const CampaignResult& result, const std::string& dir);

/// Serializes a scenario with columns step, time, x_1..x_d, has_meas,
/// z_1..z_m (measurement cells empty on non-measurement steps).
void write_truth_csv(const models::TruthData& truth, double dt, const std::string& path);

/// Reads a scenario back from the write_truth_csv format; dimensions are
/// inferred from the header row.
[[nodiscard]] models::TruthData load_truth_csv(const std::string& path);

}  // namespace harness
}  // namespace pgm
