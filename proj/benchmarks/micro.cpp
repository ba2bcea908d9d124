// Micro-benchmarks for the hot paths: density evaluation, sampling,
// clustering, mixture reduction, and a full filter step. Run via
// `pgm_micro` (google-benchmark flags apply, e.g. --benchmark_filter=...).

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "pgm/clustering.hpp"
#include "pgm/filters.hpp"
#include "pgm/metrics.hpp"
#include "pgm/mixture.hpp"
#include "pgm/models.hpp"
#include "pgm/random.hpp"

namespace {

using namespace pgm;

GaussianMixture make_mixture(int dim, int m, std::uint64_t seed, double spread) {
  RandomSource rng(seed);
  std::vector<GaussianComponent> comps;
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd mu(dim);
    for (int j = 0; j < dim; ++j) mu(j) = spread * rng.gaussian();
    Eigen::MatrixXd root(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) root(r, c) = rng.gaussian();
    comps.emplace_back(0.2 + rng.uniform(), mu,
                       0.4 * root * root.transpose() +
                           0.3 * Eigen::MatrixXd::Identity(dim, dim));
  }
  return GaussianMixture(std::move(comps));
}

void bm_mixture_pdf(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const GaussianMixture gm = make_mixture(dim, 4, 7, 2.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(dim, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(mixture_pdf(gm, x));
}
BENCHMARK(bm_mixture_pdf)->Arg(1)->Arg(3)->Arg(40);

void bm_sample_mixture(benchmark::State& state) {
  const GaussianMixture gm = make_mixture(3, 4, 7, 2.0);
  RandomSource rng(11);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_mixture(gm, n, rng));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bm_sample_mixture)->Arg(1000)->Arg(10000);

void bm_kmeans(benchmark::State& state) {
  const GaussianMixture gm = make_mixture(3, 3, 7, 6.0);
  RandomSource sampler(13);
  const ParticleSet pts = sample_mixture(gm, static_cast<int>(state.range(0)), sampler);
  for (auto _ : state) {
    RandomSource rng(17);
    benchmark::DoNotOptimize(clustering::kmeans(pts, 3, rng));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_kmeans)->Arg(500)->Arg(2000);

void bm_select_model(benchmark::State& state) {
  const GaussianMixture gm = make_mixture(3, 2, 7, 8.0);
  RandomSource sampler(13);
  const ParticleSet pts = sample_mixture(gm, static_cast<int>(state.range(0)), sampler);
  for (auto _ : state) {
    RandomSource rng(17);
    benchmark::DoNotOptimize(clustering::select_model(pts, 3, rng));
  }
}
BENCHMARK(bm_select_model)->Arg(500)->Arg(2000);

void bm_merge_pass(benchmark::State& state) {
  const GaussianMixture gm = make_mixture(3, static_cast<int>(state.range(0)), 7, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(merge_pass(gm, 0.2));
}
BENCHMARK(bm_merge_pass)->Arg(4)->Arg(10);

void bm_chi2_bound(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(metrics::chi2_upper_bound(static_cast<int>(state.range(0)), 50, 0.99));
}
BENCHMARK(bm_chi2_bound)->Arg(1)->Arg(40);

void bm_pgm_step(benchmark::State& state) {
  const models::ScalarGrowthModel model(10.0, 1.0, 2);
  const GaussianMixture prior({GaussianComponent(1.0, Eigen::VectorXd::Zero(1),
                                                 5.0 * Eigen::MatrixXd::Identity(1, 1))});
  filters::PgmOptions opts;
  opts.particle_count = static_cast<int>(state.range(0));
  opts.m_max = 2;
  opts.merge_tol = 0.01;
  opts.variant = 1;
  Eigen::VectorXd z(1);
  z << 2.5;
  for (auto _ : state) {
    filters::PgmFilter f("bench", model, prior, opts, 23);
    f.step(std::nullopt, 1);
    f.step(z, 2);
    benchmark::DoNotOptimize(f.posterior());
  }
}
BENCHMARK(bm_pgm_step)->Arg(50)->Arg(500);

}  // namespace

BENCHMARK_MAIN();
