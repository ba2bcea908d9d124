#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "pgm/campaign.hpp"
#include "pgm/config.hpp"
#include "pgm/demos.hpp"
#include "pgm/errors.hpp"
#include "pgm/metrics.hpp"

namespace {

struct RunArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int runs_override = 0;
  bool quiet = false;
  int threads = 1;
};

void apply_overrides(pgm::harness::ExperimentConfig& cfg, const RunArgs& args) {
  if (args.seed_set) cfg.seed = args.seed;
  if (args.runs_override > 0) cfg.runs = args.runs_override;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
}

void print_summary(const pgm::harness::CampaignResult& result) {
  std::printf("%-12s %12s %12s %12s %14s %10s %9s\n", "filter", "E_rms_bar", "beta_c_pct",
              "L_hat", "V2sigma_hat", "sw_c_pct", "runs");
  for (const auto& fc : result.filters) {
    const auto& s = fc.summary;
    char sw[32];
    if (s.sw_c_pct)
      std::snprintf(sw, sizeof(sw), "%.2f", *s.sw_c_pct);
    else
      std::snprintf(sw, sizeof(sw), "-");
    std::printf("%-12s %12.6g %12.6g %12.6g %14.6g %10s %6d/%d\n", fc.name.c_str(), s.e_rms_bar,
                s.beta_c_pct, s.l_hat, s.v2sigma_hat, sw, s.runs_included,
                s.runs_included + s.runs_failed);
  }
  std::printf("NEES bound: %.6g (dim %d, %d runs, level %.2f)\n", result.chi2_bound.bound,
              result.chi2_bound.dim, result.chi2_bound.runs, result.chi2_bound.level);
}

int cmd_run(const RunArgs& args) {
  pgm::harness::ExperimentConfig cfg = pgm::harness::load_config(args.config_path);
  apply_overrides(cfg, args);

  pgm::harness::CampaignOptions opts;
  opts.quiet = args.quiet;
  opts.threads = args.threads;
  const pgm::harness::CampaignResult result = pgm::harness::run_campaign(cfg, opts);
  pgm::harness::emit_outputs(result, cfg.out_dir);

  if (!args.quiet) {
    print_summary(result);
    std::printf("outputs written to %s\n", cfg.out_dir.c_str());
  }
  return 0;
}

int cmd_replay(const std::string& truth_path, const RunArgs& args) {
  pgm::harness::ExperimentConfig cfg = pgm::harness::load_config(args.config_path);
  apply_overrides(cfg, args);
  if (args.out_dir.empty()) cfg.out_dir += "_replay";

  const pgm::models::TruthData truth = pgm::harness::load_truth_csv(truth_path);
  pgm::harness::CampaignOptions opts;
  opts.quiet = args.quiet;
  opts.replay = &truth;
  const auto model = pgm::harness::build_model(cfg);
  const pgm::GaussianMixture prior = pgm::harness::build_prior(cfg, model->state_dim());
  const pgm::harness::CampaignResult result = pgm::harness::run_campaign(cfg, *model, prior, opts);
  pgm::harness::emit_outputs(result, cfg.out_dir);

  if (!args.quiet) {
    print_summary(result);
    std::printf("replay outputs written to %s\n", cfg.out_dir.c_str());
  }
  return 0;
}

int cmd_demo(const std::string& which, const std::string& out_dir, std::uint64_t seed,
             bool seed_set) {
  if (which == "depletion") {
    const auto res = pgm::demos::run_depletion_default(seed_set ? seed
                                                                : pgm::demos::kDepletionSeed);
    pgm::demos::emit_depletion_outputs(res, out_dir);
    std::printf("particles: %d\n", static_cast<int>(res.positions.size()));
    std::printf("max normalized weight: %.6f\n", res.max_weight);
    std::printf("effective sample size: %.4f\n", res.n_eff);
    const auto grid = pgm::demos::depletion_sweep_grid();
    const auto sweep = pgm::demos::depletion_sweep(
        grid, seed_set ? seed : pgm::demos::kDepletionSeed);
    std::printf("prior-variance sweep (variance -> N_eff):\n");
    for (std::size_t i = 0; i < grid.size(); ++i)
      std::printf("  %6.2f -> %.4f\n", grid[i], sweep[i]);
    std::printf("outputs written to %s\n", out_dir.c_str());
    return 0;
  }
  const auto res =
      pgm::demos::run_bimodal_default(seed_set ? seed : pgm::demos::kBimodalSeed);
  pgm::demos::emit_bimodal_outputs(res, out_dir);
  std::printf("particles: %d\n", res.particles.size());
  std::printf("mass with x2 > 0: %.4f\n", res.mass_positive);
  std::printf("mass with x2 < 0: %.4f\n", res.mass_negative);
  std::printf("selected mode count: %d\n", res.selection.mixture.size());
  std::printf("agreement score: %.6g\n", res.selection.l_mes);
  std::printf("outputs written to %s\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive nonlinear state estimation benchmark driver"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Run a Monte Carlo campaign from a config file");
  run->add_option("config", run_args.config_path, "experiment config file")->required();
  run->add_option("--seed", run_args.seed, "override the master seed")
      ->each([&](const std::string&) { run_args.seed_set = true; });
  run->add_option("--out", run_args.out_dir, "override the output directory");
  run->add_option("--runs-override", run_args.runs_override, "override the run count");
  run->add_option("--threads", run_args.threads, "worker threads for independent runs");
  run->add_flag("--quiet", run_args.quiet, "suppress progress and summary output");

  std::string demo_which;
  std::string demo_out = "out";
  std::uint64_t demo_seed = 0;
  bool demo_seed_set = false;
  CLI::App* demo = app.add_subcommand("demo", "Run an illustrative demo");
  demo->add_option("which", demo_which, "demo name")
      ->required()
      ->check(CLI::IsMember({"depletion", "bimodal"}));
  demo->add_option("--out", demo_out, "output directory");
  demo->add_option("--seed", demo_seed, "demo seed")
      ->each([&](const std::string&) { demo_seed_set = true; });

  int bound_dim = 0;
  int bound_runs = 0;
  double bound_level = 0.99;
  CLI::App* bound = app.add_subcommand("bound", "Print the chi-square NEES acceptance bound");
  bound->add_option("--dim", bound_dim, "state dimension")->required();
  bound->add_option("--runs", bound_runs, "Monte Carlo run count")->required();
  bound->add_option("--level", bound_level, "confidence level")->required();

  std::string replay_truth;
  RunArgs replay_args;
  CLI::App* replay = app.add_subcommand("replay", "Re-filter a recorded scenario");
  replay->add_option("truth", replay_truth, "truth CSV (truth_run0.csv schema)")->required();
  replay->add_option("config", replay_args.config_path, "experiment config file")->required();
  replay->add_option("--seed", replay_args.seed, "override the master seed")
      ->each([&](const std::string&) { replay_args.seed_set = true; });
  replay->add_option("--out", replay_args.out_dir, "output directory");
  replay->add_flag("--quiet", replay_args.quiet, "suppress progress and summary output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (demo->parsed()) return cmd_demo(demo_which, demo_out, demo_seed, demo_seed_set);
    if (bound->parsed()) {
      const auto b = pgm::metrics::chi2_upper_bound(bound_dim, bound_runs, bound_level);
      std::printf("%.4f\n", b.bound);
      return 0;
    }
    if (replay->parsed()) return cmd_replay(replay_truth, replay_args);
  } catch (const pgm::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const pgm::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
