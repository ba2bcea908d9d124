#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "pgm/random.hpp"

namespace pgm {
namespace models {

// ---- Base model -------------------------------------------------------------

/// One benchmark system: a one-step state transition with additive process
/// noise, a measurement map with additive Gaussian noise, and the cadence at
/// which measurements arrive.
///
/// Ticks are the discrete propagation steps; for continuous systems one tick
/// is one Euler step of length dt, and meas_every counts ticks between
/// measurement epochs. Instances are immutable after construction and safe
/// to share across threads.
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;

  [[nodiscard]] int state_dim() const noexcept { return static_cast<int>(q_step_.rows()); }
  [[nodiscard]] int meas_dim() const noexcept { return static_cast<int>(r_.rows()); }
  [[nodiscard]] int meas_every() const noexcept { return meas_every_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }

  /// Per-step process noise covariance Q (already discretized for
  /// continuous systems). Positive semi-definite: noise may enter a strict
  /// subset of coordinates.
  [[nodiscard]] const Eigen::MatrixXd& process_noise_cov() const noexcept { return q_step_; }

  /// Measurement noise covariance R (positive semi-definite; zero means a
  /// noise-free measurement stream).
  [[nodiscard]] const Eigen::MatrixXd& meas_noise_cov() const noexcept { return r_; }

  /// Deterministic part of the transition from tick k to k+1 (k is the
  /// source tick, starting at 0 — time-dependent forcings index on k).
  [[nodiscard]] virtual Eigen::VectorXd propagate_mean(const Eigen::VectorXd& x, int k) const = 0;

  /// Noise-free measurement map h(x).
  [[nodiscard]] virtual Eigen::VectorXd measure_clean(const Eigen::VectorXd& x) const = 0;

  /// Full transition: propagate_mean plus a process-noise draw.
  [[nodiscard]] Eigen::VectorXd propagate(const Eigen::VectorXd& x, int k,
                                          RandomSource& rng) const;

  /// Noisy measurement: measure_clean plus an R draw.
  [[nodiscard]] Eigen::VectorXd measure(const Eigen::VectorXd& x, RandomSource& rng) const;

 protected:
  /// q_step: per-tick process noise covariance (PSD); r: measurement noise
  /// covariance (PSD); dt: tick duration in seconds (1 for discrete systems).
  StateSpaceModel(Eigen::MatrixXd q_step, Eigen::MatrixXd r, int meas_every, double dt);

 private:
  Eigen::MatrixXd q_step_, r_;
  Eigen::MatrixXd q_sqrt_, r_sqrt_;
  int meas_every_;
  double dt_;
};

// ---- Drift functions (exposed for direct testing) ----------------------------

/// Scalar growth benchmark transition: x/2 + 25x/(1+x²) + 8·cos(1.2k).
[[nodiscard]] double scalar_benchmark_step(double x, int k, double noise);

/// Its measurement map: x²/20.
[[nodiscard]] double scalar_benchmark_measure(double x);

/// Lorenz-63 drift, (σ(−x₁+x₂), ρx₁ − x₂ − x₁x₃, −γx₃ + x₁x₂) with the
/// benchmark constants σ=10, ρ=28, γ=8/3.
[[nodiscard]] Eigen::Vector3d lorenz63_drift(const Eigen::Vector3d& x);

/// Lorenz-96 drift, ẋ_i = x_{i−1}(x_{i+1} − x_{i−2}) − x_i + F, cyclic.
[[nodiscard]] Eigen::VectorXd lorenz96_drift(const Eigen::VectorXd& x, double forcing);

/// The two-state demo drift (ẋ₁ = −x₁/2, ẋ₂ = sin(x₂/2)) whose flow splits a
/// unimodal prior into two modes.
[[nodiscard]] Eigen::Vector2d demo_bimodal_drift(const Eigen::Vector2d& x);

// ---- Continuous systems -------------------------------------------------------

/// How a continuous-time diffusion level maps onto the per-step noise:
/// `intensity` treats it as a rate (Q_step = Γ·dt); `per_step` injects it
/// directly every step.
enum class NoiseMode { intensity, per_step };

/// Euler–Maruyama discretization of ẋ = drift(x) + noise.
struct ContinuousModelConfig {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;
  double dt = 0.0;
  Eigen::MatrixXd diffusion_cov;  ///< continuous-time intensity Γ (PSD)
  int substeps_per_measurement = 1;
};

/// One Euler–Maruyama step: x + drift(x)·dt + w, w ~ 𝒩(0, Γ·dt).
[[nodiscard]] Eigen::VectorXd integrate_step(const ContinuousModelConfig& cfg,
                                             const Eigen::VectorXd& x, RandomSource& rng);

/// StateSpaceModel over an Euler–Maruyama discretized drift.
class ContinuousModel : public StateSpaceModel {
 public:
  ContinuousModel(ContinuousModelConfig cfg, Eigen::MatrixXd r, int meas_dim_check,
                  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> measure,
                  NoiseMode noise_mode);

  [[nodiscard]] Eigen::VectorXd propagate_mean(const Eigen::VectorXd& x, int k) const override;
  [[nodiscard]] Eigen::VectorXd measure_clean(const Eigen::VectorXd& x) const override;

 private:
  ContinuousModelConfig cfg_;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> measure_;
};

// ---- Concrete benchmark systems -----------------------------------------------

/// Scalar growth benchmark: x_{k+1} = x_k/2 + 25x_k/(1+x_k²) + 8cos(1.2k) + ν,
/// z = x²/20 + n. Strongly bimodal: the measurement cannot tell ±x apart.
class ScalarGrowthModel : public StateSpaceModel {
 public:
  ScalarGrowthModel(double process_noise_var, double meas_noise_var, int meas_every);
  [[nodiscard]] Eigen::VectorXd propagate_mean(const Eigen::VectorXd& x, int k) const override;
  [[nodiscard]] Eigen::VectorXd measure_clean(const Eigen::VectorXd& x) const override;
};

/// Lorenz-63 with range measurement z = ‖x‖ + n. Noise enters the third
/// state equation by default (noise_all_coords=false), matching the system
/// definition; the alternative full-state noise is selectable.
///
/// `substeps` subdivides the deterministic flow of each tick into that many
/// forward-Euler steps of length dt/substeps; noise still enters once per
/// tick, so the per-tick Q is unaffected.
class Lorenz63Model : public StateSpaceModel {
 public:
  Lorenz63Model(double dt, double diffusion, double meas_noise_var, int meas_every,
                NoiseMode noise_mode, bool noise_all_coords, int substeps = 1);
  [[nodiscard]] Eigen::VectorXd propagate_mean(const Eigen::VectorXd& x, int k) const override;
  [[nodiscard]] Eigen::VectorXd measure_clean(const Eigen::VectorXd& x) const override;

 private:
  double dt_step_;
  int substeps_;
};

/// Lorenz-96 (cyclic, dimension d, forcing F) observing the odd-numbered
/// coordinates x₁, x₃, …, x_{d−1} (1-based), i.e. d/2 linear measurements.
///
/// `substeps` subdivides the deterministic flow of each tick into that many
/// forward-Euler steps of length dt/substeps (noise still enters once per
/// tick). The single-step default is unstable for the common forcing F=8 at
/// dt=0.05 — the advective frequencies on the attractor exceed the explicit
/// Euler stability limit — so configurations at that scale should subdivide
/// until dt/substeps ≲ 0.01.
class Lorenz96Model : public StateSpaceModel {
 public:
  Lorenz96Model(int dim, double forcing, double dt, double diffusion, double meas_noise_var,
                int meas_every, NoiseMode noise_mode, int substeps = 1);
  [[nodiscard]] Eigen::VectorXd propagate_mean(const Eigen::VectorXd& x, int k) const override;
  [[nodiscard]] Eigen::VectorXd measure_clean(const Eigen::VectorXd& x) const override;

 private:
  double forcing_;
  double dt_step_;
  int substeps_;
};

/// Two-dimensional linear-Gaussian system with a fixed stable transition
/// matrix and a first-coordinate measurement. Exists so filters can be
/// checked against the analytic Kalman recursion.
class LinearGaussianModel : public StateSpaceModel {
 public:
  LinearGaussianModel(double process_noise_var, double meas_noise_var, int meas_every);
  [[nodiscard]] Eigen::VectorXd propagate_mean(const Eigen::VectorXd& x, int k) const override;
  [[nodiscard]] Eigen::VectorXd measure_clean(const Eigen::VectorXd& x) const override;

  [[nodiscard]] const Eigen::Matrix2d& transition() const noexcept { return a_; }
  [[nodiscard]] const Eigen::RowVector2d& observation() const noexcept { return h_; }

 private:
  Eigen::Matrix2d a_;
  Eigen::RowVector2d h_;
};

// ---- Truth simulation -----------------------------------------------------------

/// A simulated scenario: states x_0..x_T and the measurement stream, with
/// measurements at ticks k ≥ 1 where k mod meas_every == 0.
struct TruthData {
  std::vector<Eigen::VectorXd> states;                   ///< index 0..T
  std::vector<std::optional<Eigen::VectorXd>> measurements;  ///< index 0..T; [0] empty
};

/// Simulates the truth forward from x0 for T ticks. Process and measurement
/// noise come from separate streams so the two are independently
/// reproducible (and so filters seeded from other streams never alias).
[[nodiscard]] TruthData simulate_truth(const StateSpaceModel& model, const Eigen::VectorXd& x0,
                                       int steps, RandomSource& process_rng,
                                       RandomSource& meas_rng);

}  // namespace models
}  // namespace pgm
