#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pgm/clustering.hpp"
#include "pgm/mixture.hpp"
#include "pgm/models.hpp"
#include "pgm/particles.hpp"
#include "pgm/unscented.hpp"

namespace pgm {
namespace filters {

// ---- Common interface ---------------------------------------------------------

/// Per-step diagnostics a filter can report to the harness trace log.
struct StepTrace {
  int step = 0;
  int chosen_m = 0;             ///< cluster count selected this step (0: no clustering ran)
  int merged_modes = 0;         ///< modes removed by the merge pass
  std::vector<double> weights;  ///< mixture weights after the step (carried on no-meas steps)
  bool likelihood_underflow = false;
  bool covariance_repaired = false;
  bool particle_stats_fallback = false;
  bool resample_degenerate = false;
};

/// A recursive estimator: step() advances one tick (absorbing a measurement
/// when one arrives) and posterior() summarizes the current state as a
/// Gaussian mixture — ensemble-type states are moment-fit to one Gaussian,
/// which is also the evaluation rule the metrics use for them.
///
/// Instances own their randomness and are deterministic given
/// (seed, configuration, measurement stream). Single-owner mutable state:
/// not shared across threads.
class Filter {
 public:
  virtual ~Filter() = default;

  /// Advance from tick k−1 to tick k; z is the measurement at k, if any.
  virtual void step(const std::optional<Eigen::VectorXd>& z, int k,
                    StepTrace* trace = nullptr) = 0;

  [[nodiscard]] virtual GaussianMixture posterior() const = 0;

  [[nodiscard]] const std::string& name() const noexcept { return name_; }

 protected:
  explicit Filter(std::string name) : name_(std::move(name)) {}

 private:
  std::string name_;
};

// ---- Building-block operations ---------------------------------------------------

/// Algorithm step "sample": draw n particles from the posterior mixture and
/// push each through the full transition kernel (deterministic map plus a
/// process-noise draw) from tick `source_step`.
[[nodiscard]] ParticleSet pgm_predict(const GaussianMixture& posterior,
                                      const models::StateSpaceModel& model, int n_particles,
                                      int source_step, RandomSource& rng);

/// In-place transition of every particle from tick `source_step`.
void propagate_particles(ParticleSet& particles, const models::StateSpaceModel& model,
                         int source_step, RandomSource& rng);

/// Kalman/least-squares update of one mode against measurement z:
///   K = P_zxᵀ P_zz⁻¹, μ⁺ = μ + K(z − ẑ), P⁺ = P − K P_zz Kᵀ (symmetrized).
/// The weight is passed through unchanged. A posterior covariance that loses
/// definiteness to roundoff is ridge-repaired and reported via cov_repaired.
[[nodiscard]] GaussianComponent kalman_component_update(const GaussianComponent& comp,
                                                        const MeasurementStats& stats,
                                                        const Eigen::VectorXd& z,
                                                        bool* cov_repaired = nullptr);

/// Measurement statistics taken directly from a cluster's particles:
///   ẑ = mean h(x_l); P_zz = Bessel cov of h(x_l) + R;
///   P_zx = 1/(N_j−1) Σ (h(x_l)−ẑ)(x_l−μ)ᵀ with μ the cluster mean.
/// A cluster with fewer than two particles cannot support the sample
/// covariances; it falls back to the unscented statistics of the fitted
/// component (reported via fell_back).
[[nodiscard]] MeasurementStats particle_stats(const ParticleSet& cluster_particles,
                                              const GaussianComponent& comp, const VectorMap& h,
                                              const Eigen::MatrixXd& r,
                                              const UnscentedParams& fallback_params,
                                              bool* fell_back = nullptr);

/// Discrete mode-weight update ω_i ∝ ω_i⁻ · l_i, computed in the log domain
/// (invariant under common scaling of the likelihoods). If every combined
/// term underflows to −∞ the priors are kept and `underflow` is set.
[[nodiscard]] Eigen::VectorXd mode_weight_update(const Eigen::VectorXd& prior_weights,
                                                 const Eigen::VectorXd& log_likelihoods,
                                                 bool* underflow = nullptr);

// ---- PGM filter -------------------------------------------------------------------

struct PgmOptions {
  int particle_count = 0;
  int m_max = 1;
  double merge_tol = 0.01;
  int variant = 1;  ///< 1: unscented per-mode stats; 2: cluster-particle stats
  UnscentedParams ut;
  int kmeans_restarts = 5;
  int kmeans_max_iter = 100;
};

/// The particle–Gaussian-mixture filter. Each measurement epoch runs
/// sample → cluster (naive model selection up to m_max) → per-mode Kalman
/// update → mode-weight update → merge pass. Between measurements the state
/// is carried as the propagated particle ensemble itself — clustering only
/// happens when a measurement arrives, which is what makes the filter cheap
/// under sparse measurements.
class PgmFilter : public Filter {
 public:
  PgmFilter(std::string name, const models::StateSpaceModel& model, GaussianMixture prior,
            PgmOptions opts, std::uint64_t seed);

  void step(const std::optional<Eigen::VectorXd>& z, int k, StepTrace* trace = nullptr) override;
  [[nodiscard]] GaussianMixture posterior() const override;

  /// True while the state is a particle ensemble (between measurements).
  [[nodiscard]] bool holds_particles() const noexcept;

  /// Mixture weights after the last measurement update (carried unchanged
  /// across propagation-only steps, mirroring the discrete prediction rule
  /// for weights).
  [[nodiscard]] const std::vector<double>& mode_weights() const noexcept { return mode_weights_; }

 private:
  const models::StateSpaceModel* model_;
  PgmOptions opts_;
  RandomSource rng_;
  std::variant<GaussianMixture, ParticleSet> state_;
  std::vector<double> mode_weights_;
};

// ---- Baseline filters ----------------------------------------------------------------

/// Sequential importance resampling particle filter: propagate, weight by
/// the measurement likelihood, systematic-resample back to uniform weights
/// at every measurement.
class SirFilter : public Filter {
 public:
  SirFilter(std::string name, const models::StateSpaceModel& model, const GaussianMixture& prior,
            int n_particles, std::uint64_t seed);

  void step(const std::optional<Eigen::VectorXd>& z, int k, StepTrace* trace = nullptr) override;
  [[nodiscard]] GaussianMixture posterior() const override;

  [[nodiscard]] const ParticleSet& particles() const noexcept { return particles_; }
  [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return weights_; }

 private:
  const models::StateSpaceModel* model_;
  RandomSource rng_;
  ParticleSet particles_;
  Eigen::VectorXd weights_;
};

/// Conventional Gaussian-mixture UKF: a bank of unscented Kalman filters,
/// one per mode, with the discrete mode-weight update. The component count
/// is fixed at construction — no clustering, no merging.
class GmUkfFilter : public Filter {
 public:
  GmUkfFilter(std::string name, const models::StateSpaceModel& model, GaussianMixture prior,
              UnscentedParams ut);

  void step(const std::optional<Eigen::VectorXd>& z, int k, StepTrace* trace = nullptr) override;
  [[nodiscard]] GaussianMixture posterior() const override { return state_; }

  /// Covariance repairs (eigenvalue flooring) performed so far.
  [[nodiscard]] int repair_count() const noexcept { return repair_count_; }

 private:
  const models::StateSpaceModel* model_;
  UnscentedParams ut_;
  GaussianMixture state_;
  int repair_count_ = 0;
};

/// Unscented Kalman filter: the single-mode case of the mixture bank (the
/// two share every code path, so one mode is exactly a UKF).
class UkfFilter : public GmUkfFilter {
 public:
  UkfFilter(std::string name, const models::StateSpaceModel& model, const GaussianMixture& prior,
            UnscentedParams ut);

  [[nodiscard]] Eigen::VectorXd mean() const { return posterior().component(0).mean(); }
  [[nodiscard]] Eigen::MatrixXd cov() const { return posterior().component(0).cov(); }
};

/// Stochastic ensemble Kalman filter: sample-covariance gain with perturbed
/// observations, every member updated individually.
class EnkfFilter : public Filter {
 public:
  EnkfFilter(std::string name, const models::StateSpaceModel& model,
             const GaussianMixture& prior, int n_members, std::uint64_t seed);

  void step(const std::optional<Eigen::VectorXd>& z, int k, StepTrace* trace = nullptr) override;
  [[nodiscard]] GaussianMixture posterior() const override;

  [[nodiscard]] const ParticleSet& ensemble() const noexcept { return ensemble_; }

 private:
  const models::StateSpaceModel* model_;
  RandomSource rng_;
  ParticleSet ensemble_;
  Eigen::MatrixXd r_sqrt_;
};

}  // namespace filters
}  // namespace pgm
