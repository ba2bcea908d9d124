#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pgm/clustering.hpp"
#include "pgm/mixture.hpp"
#include "pgm/particles.hpp"

namespace pgm {
namespace demos {

inline constexpr std::uint64_t kDepletionSeed = 2016;
inline constexpr std::uint64_t kBimodalSeed = 1899;

// ---- Importance-weight collapse ------------------------------------------------

/// A prior ensemble scored against a barely-overlapping likelihood: the
/// canonical way plain importance weighting degenerates.
struct DepletionResult {
  Eigen::VectorXd positions;  ///< sampled particle positions
  Eigen::VectorXd weights;    ///< normalized importance weights
  double max_weight = 0.0;
  double n_eff = 0.0;  ///< effective sample size 1/Σw²
  double prior_mean = 0.0;
  double prior_var = 0.0;
  double like_mean = 0.0;
  double like_var = 0.0;
};

[[nodiscard]] DepletionResult run_depletion(int n_particles, double prior_mean, double prior_var,
                                            double like_mean, double like_var,
                                            std::uint64_t seed);

/// The textbook scenario: 400 particles from 𝒩(11, 0.3) weighted by the
/// likelihood 𝒩(15, 0.1) — nearly all mass lands on one particle.
[[nodiscard]] DepletionResult run_depletion_default(std::uint64_t seed = kDepletionSeed);

/// N_eff at each prior variance, with common random numbers: the particles
/// are mean + √v·ξ with the ξ draws shared across variances, so widening the
/// prior (more overlap with the likelihood) is the only change.
[[nodiscard]] std::vector<double> depletion_sweep(const std::vector<double>& prior_vars,
                                                  std::uint64_t seed = kDepletionSeed);

/// Variance grid used by the shipped sweep artifact.
[[nodiscard]] std::vector<double> depletion_sweep_grid();

/// Writes depletion_weights.csv, depletion_sweep.csv, and depletion_hist.png
/// (binned weight mass with the scaled prior/likelihood curves) under `dir`.
void emit_depletion_outputs(const DepletionResult& res, const std::string& dir);

// ---- Flow-induced mode splitting ---------------------------------------------

/// A unimodal ensemble pushed through the two-state demo drift until the
/// x₂ flow tears it into two well-separated modes.
struct BimodalResult {
  ParticleSet particles;  ///< ensemble at the final time
  double mass_positive = 0.0;  ///< fraction of particles with x₂ > 0
  double mass_negative = 0.0;
  clustering::ModelSelection selection;  ///< clustering of the final ensemble
};

/// Samples n particles from 𝒩([−12,0]ᵀ, diag(0.2,1)), integrates the
/// noise-free demo drift with Euler steps of length dt up to t_final, and
/// runs mixture selection with at most two modes on the result.
[[nodiscard]] BimodalResult run_bimodal(int n_particles, double t_final, double dt,
                                        std::uint64_t seed);

/// Default scenario: 1000 particles, t_final = 10, dt = 0.01.
[[nodiscard]] BimodalResult run_bimodal_default(std::uint64_t seed = kBimodalSeed);

/// Writes bimodal_particles.csv, bimodal_mixture.json, and bimodal_x2.png
/// (the x₂ histogram showing the two lobes) under `dir`.
void emit_bimodal_outputs(const BimodalResult& res, const std::string& dir);

/// Propagates n particles from 𝒩(0, var0) through the scalar growth
/// benchmark (process noise active, no measurements) and selects a mixture
/// with at most two modes: the ±7 attractors split the ensemble. Returns the
/// selected mode count.
[[nodiscard]] int scalar_split_mode_count(int n_particles, int steps, double var0,
                                          double process_noise, std::uint64_t seed);

}  // namespace demos
}  // namespace pgm
