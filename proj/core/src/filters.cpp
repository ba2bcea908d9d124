#include "pgm/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pgm/errors.hpp"
#include "pgm/linalg.hpp"

namespace pgm {
namespace filters {

namespace {

/// Builds a component, flooring the covariance spectrum at 1e-10 if it lost
/// definiteness to roundoff. Reports the repair; never silently changes it.
GaussianComponent component_with_repair(double weight, Eigen::VectorXd mean, Eigen::MatrixXd cov,
                                        bool* repaired) {
  try {
    return GaussianComponent(weight, mean, cov);
  } catch (const CholeskyFailure&) {
    if (repaired != nullptr) *repaired = true;
    return GaussianComponent(weight, std::move(mean), floor_eigenvalues(cov, 1e-10));
  }
}

VectorMap measurement_map(const models::StateSpaceModel& model) {
  return [&model](const Eigen::VectorXd& x) { return model.measure_clean(x); };
}

}  // namespace

// ---- Building-block operations ---------------------------------------------------

ParticleSet pgm_predict(const GaussianMixture& posterior, const models::StateSpaceModel& model,
                        int n_particles, int source_step, RandomSource& rng) {
  if (n_particles < 2) throw InvalidArgument("pgm_predict: need at least 2 particles");
  ParticleSet particles = sample_mixture(posterior, n_particles, rng);
  propagate_particles(particles, model, source_step, rng);
  return particles;
}

void propagate_particles(ParticleSet& particles, const models::StateSpaceModel& model,
                         int source_step, RandomSource& rng) {
  if (particles.dim() != model.state_dim())
    throw DimensionError("propagate_particles: particle/model dimension mismatch");
  for (int i = 0; i < particles.size(); ++i)
    particles.points().col(i) = model.propagate(particles.points().col(i), source_step, rng);
}

GaussianComponent kalman_component_update(const GaussianComponent& comp,
                                          const MeasurementStats& stats,
                                          const Eigen::VectorXd& z, bool* cov_repaired) {
  if (z.size() != stats.z_hat.size())
    throw DimensionError("kalman_component_update: measurement dimension mismatch");

  const CholeskyFactor pzz = CholeskyFactor::compute(stats.p_zz);
  // K = P_zxᵀ P_zz⁻¹ (d×m); the quadratic term K P_zz Kᵀ collapses to WᵀW
  // with W = L⁻¹P_zx, which keeps it symmetric PSD by construction.
  const Eigen::MatrixXd gain = pzz.solve(stats.p_zx).transpose();
  const Eigen::MatrixXd w =
      pzz.lower().triangularView<Eigen::Lower>().solve(stats.p_zx);

  Eigen::VectorXd mean = comp.mean() + gain * (z - stats.z_hat);
  Eigen::MatrixXd cov = symmetrized(comp.cov() - w.transpose() * w);

  try {
    return GaussianComponent(comp.weight(), mean, cov);
  } catch (const CholeskyFailure&) {
    if (cov_repaired != nullptr) *cov_repaired = true;
    return GaussianComponent(comp.weight(), std::move(mean), ridge_to_spd(cov));
  }
}

MeasurementStats particle_stats(const ParticleSet& cluster_particles,
                                const GaussianComponent& comp, const VectorMap& h,
                                const Eigen::MatrixXd& r, const UnscentedParams& fallback_params,
                                bool* fell_back) {
  const int n = cluster_particles.size();
  if (n < 2) {
    if (fell_back != nullptr) *fell_back = true;
    return unscented_stats(comp, h, r, fallback_params);
  }

  const int m = static_cast<int>(r.rows());
  Eigen::MatrixXd z_pts(m, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd zi = h(cluster_particles.points().col(i));
    if (zi.size() != m) throw DimensionError("particle_stats: measurement map output mismatch");
    z_pts.col(i) = zi;
  }

  MeasurementStats stats;
  stats.z_hat = z_pts.rowwise().mean();
  const Eigen::MatrixXd dz = z_pts.colwise() - Eigen::VectorXd(stats.z_hat);
  const Eigen::MatrixXd dx = cluster_particles.points().colwise() - comp.mean();
  const double bessel = 1.0 / static_cast<double>(n - 1);
  stats.p_zz = symmetrized(dz * dz.transpose() * bessel + r);
  stats.p_zx = dz * dx.transpose() * bessel;
  return stats;
}

Eigen::VectorXd mode_weight_update(const Eigen::VectorXd& prior_weights,
                                   const Eigen::VectorXd& log_likelihoods, bool* underflow) {
  if (prior_weights.size() != log_likelihoods.size())
    throw DimensionError("mode_weight_update: weight/likelihood length mismatch");

  const int m = static_cast<int>(prior_weights.size());
  Eigen::VectorXd combined(m);
  for (int i = 0; i < m; ++i)
    combined(i) = (prior_weights(i) > 0.0 ? std::log(prior_weights(i))
                                          : -std::numeric_limits<double>::infinity()) +
                  log_likelihoods(i);

  const double shift = combined.maxCoeff();
  if (!std::isfinite(shift)) {
    // Every mode's likelihood underflowed: no information to apply, keep the
    // prior weights and report it instead of dividing by zero.
    if (underflow != nullptr) *underflow = true;
    return prior_weights;
  }

  Eigen::VectorXd w = (combined.array() - shift).exp();
  return w / w.sum();
}

// ---- PGM filter -------------------------------------------------------------------

PgmFilter::PgmFilter(std::string name, const models::StateSpaceModel& model,
                     GaussianMixture prior, PgmOptions opts, std::uint64_t seed)
    : Filter(std::move(name)),
      model_(&model),
      opts_(opts),
      rng_(seed),
      state_(std::move(prior)) {
  if (opts_.particle_count < 2)
    throw InvalidArgument("PgmFilter: particle_count must be >= 2");
  if (opts_.m_max < 1) throw InvalidArgument("PgmFilter: m_max must be >= 1");
  if (opts_.variant != 1 && opts_.variant != 2)
    throw InvalidArgument("PgmFilter: variant must be 1 or 2");
  const auto& gmm = std::get<GaussianMixture>(state_);
  mode_weights_.reserve(gmm.size());
  for (const auto& c : gmm.components()) mode_weights_.push_back(c.weight());
}

bool PgmFilter::holds_particles() const noexcept {
  return std::holds_alternative<ParticleSet>(state_);
}

GaussianMixture PgmFilter::posterior() const {
  if (const auto* gmm = std::get_if<GaussianMixture>(&state_)) return *gmm;
  return GaussianMixture(fit_gaussian(std::get<ParticleSet>(state_)));
}

void PgmFilter::step(const std::optional<Eigen::VectorXd>& z, int k, StepTrace* trace) {
  // Predict: sample-and-propagate from a mixture state, or carry the live
  // ensemble forward.
  ParticleSet predicted = [&] {
    if (const auto* gmm = std::get_if<GaussianMixture>(&state_))
      return pgm_predict(*gmm, *model_, opts_.particle_count, k - 1, rng_);
    ParticleSet particles = std::move(std::get<ParticleSet>(state_));
    propagate_particles(particles, *model_, k - 1, rng_);
    return particles;
  }();

  if (trace != nullptr) trace->step = k;

  if (!z.has_value()) {
    // No measurement: the ensemble is the state; mixture weights are
    // unchanged by prediction.
    state_ = std::move(predicted);
    if (trace != nullptr) {
      trace->chosen_m = 0;
      trace->weights = mode_weights_;
    }
    return;
  }

  // Cluster the predicted ensemble into the best mixture up to m_max modes.
  auto sel = clustering::select_model(predicted, opts_.m_max, rng_, opts_.kmeans_max_iter,
                                      opts_.kmeans_restarts);
  const int m = sel.mixture.size();

  // Per-mode measurement statistics, likelihoods, and Kalman updates.
  Eigen::VectorXd prior_w(m), loglik(m);
  std::vector<GaussianComponent> updated;
  updated.reserve(m);
  bool repaired = false;
  bool fell_back = false;
  const VectorMap h = measurement_map(*model_);

  for (int i = 0; i < m; ++i) {
    const auto& comp = sel.mixture.component(i);
    prior_w(i) = comp.weight();

    MeasurementStats stats;
    if (opts_.variant == 2) {
      // Collect this cluster's particles for the empirical statistics.
      int count = 0;
      for (int lbl : sel.assignment.labels) count += (lbl == i);
      if (count >= 2) {
        ParticleSet members(predicted.dim(), count);
        int at = 0;
        for (int p = 0; p < predicted.size(); ++p)
          if (sel.assignment.labels[p] == i) members.points().col(at++) = predicted.points().col(p);
        stats = particle_stats(members, comp, h, model_->meas_noise_cov(), opts_.ut, &fell_back);
      } else {
        fell_back = true;
        stats = unscented_stats(comp, h, model_->meas_noise_cov(), opts_.ut);
      }
    } else {
      stats = unscented_stats(comp, h, model_->meas_noise_cov(), opts_.ut);
    }

    loglik(i) = gaussian_logpdf(*z, stats.z_hat, stats.p_zz);
    updated.push_back(kalman_component_update(comp, stats, *z, &repaired));
  }

  bool underflow = false;
  const Eigen::VectorXd post_w = mode_weight_update(prior_w, loglik, &underflow);
  for (int i = 0; i < m; ++i) updated[i] = updated[i].with_weight(post_w(i));

  GaussianMixture merged = merge_pass(GaussianMixture(std::move(updated)), opts_.merge_tol);

  mode_weights_.clear();
  for (const auto& c : merged.components()) mode_weights_.push_back(c.weight());

  if (trace != nullptr) {
    trace->chosen_m = m;
    trace->merged_modes = m - merged.size();
    trace->weights = mode_weights_;
    trace->likelihood_underflow = underflow;
    trace->covariance_repaired = repaired;
    trace->particle_stats_fallback = fell_back;
  }
  state_ = std::move(merged);
}

// ---- SIR particle filter -------------------------------------------------------------

SirFilter::SirFilter(std::string name, const models::StateSpaceModel& model,
                     const GaussianMixture& prior, int n_particles, std::uint64_t seed)
    : Filter(std::move(name)),
      model_(&model),
      rng_(seed),
      particles_(sample_mixture(prior, n_particles, rng_)),
      weights_(Eigen::VectorXd::Constant(n_particles, 1.0 / n_particles)) {
  if (n_particles < 2) throw InvalidArgument("SirFilter: need at least 2 particles");
}

GaussianMixture SirFilter::posterior() const {
  // Weights are uniform after every step (weight-then-resample), so the
  // plain moment fit is the weighted fit.
  return GaussianMixture(fit_gaussian(particles_));
}

void SirFilter::step(const std::optional<Eigen::VectorXd>& z, int k, StepTrace* trace) {
  propagate_particles(particles_, *model_, k - 1, rng_);
  if (trace != nullptr) {
    trace->step = k;
    trace->chosen_m = 0;
  }
  if (!z.has_value()) return;

  const int n = particles_.size();
  const CholeskyFactor r_factor = CholeskyFactor::compute(model_->meas_noise_cov());

  Eigen::VectorXd loglik(n);
  for (int i = 0; i < n; ++i)
    loglik(i) = gaussian_logpdf(*z, model_->measure_clean(particles_.points().col(i)), r_factor);

  // Importance weighting in the log domain (incoming weights are uniform).
  const double shift = loglik.maxCoeff();
  if (!std::isfinite(shift)) {
    // Total degeneracy: every particle's likelihood underflowed. Resample
    // from the unweighted ensemble (a no-op draw) and flag it.
    weights_.setConstant(1.0 / n);
    if (trace != nullptr) trace->resample_degenerate = true;
  } else {
    weights_ = (loglik.array() - shift).exp();
    weights_ /= weights_.sum();
  }

  // Systematic resampling back to uniform weights.
  const double offset = rng_.uniform();
  Eigen::MatrixXd resampled(particles_.dim(), n);
  double cumulative = weights_(0);
  int src = 0;
  for (int i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + offset) / static_cast<double>(n);
    while (u > cumulative && src < n - 1) cumulative += weights_(++src);
    resampled.col(i) = particles_.points().col(src);
  }
  particles_.points() = std::move(resampled);
  weights_.setConstant(1.0 / n);
}

// ---- Gaussian-mixture UKF (and plain UKF as its single-mode case) --------------------

GmUkfFilter::GmUkfFilter(std::string name, const models::StateSpaceModel& model,
                         GaussianMixture prior, UnscentedParams ut)
    : Filter(std::move(name)), model_(&model), ut_(ut), state_(std::move(prior)) {}

void GmUkfFilter::step(const std::optional<Eigen::VectorXd>& z, int k, StepTrace* trace) {
  const int m = state_.size();
  const VectorMap f = [this, k](const Eigen::VectorXd& x) {
    return model_->propagate_mean(x, k - 1);
  };
  const VectorMap h = measurement_map(*model_);

  bool repaired = false;
  std::vector<GaussianComponent> predicted;
  predicted.reserve(m);
  for (const auto& comp : state_.components()) {
    auto [pm, pc] = unscented_predict(comp.mean(), comp.cov(), f,
                                      model_->process_noise_cov(), ut_);
    predicted.push_back(
        component_with_repair(comp.weight(), std::move(pm), std::move(pc), &repaired));
  }

  if (trace != nullptr) trace->step = k;

  if (!z.has_value()) {
    // Prediction leaves the discrete weights unchanged.
    state_ = GaussianMixture(std::move(predicted));
  } else {
    Eigen::VectorXd prior_w(m), loglik(m);
    std::vector<GaussianComponent> updated;
    updated.reserve(m);
    for (int i = 0; i < m; ++i) {
      prior_w(i) = predicted[i].weight();
      const MeasurementStats stats =
          unscented_stats(predicted[i], h, model_->meas_noise_cov(), ut_);
      loglik(i) = gaussian_logpdf(*z, stats.z_hat, stats.p_zz);
      updated.push_back(kalman_component_update(predicted[i], stats, *z, &repaired));
    }
    bool underflow = false;
    const Eigen::VectorXd post_w = mode_weight_update(prior_w, loglik, &underflow);
    for (int i = 0; i < m; ++i) updated[i] = updated[i].with_weight(post_w(i));
    state_ = GaussianMixture(std::move(updated));
    if (trace != nullptr) trace->likelihood_underflow = underflow;
  }

  if (repaired) repair_count_ += 1;
  if (trace != nullptr) {
    trace->covariance_repaired = repaired;
    trace->weights.clear();
    for (const auto& c : state_.components()) trace->weights.push_back(c.weight());
  }
}

UkfFilter::UkfFilter(std::string name, const models::StateSpaceModel& model,
                     const GaussianMixture& prior, UnscentedParams ut)
    : GmUkfFilter(std::move(name), model, GaussianMixture(moment_match(prior)), ut) {}

// ---- Ensemble Kalman filter ------------------------------------------------------------

EnkfFilter::EnkfFilter(std::string name, const models::StateSpaceModel& model,
                       const GaussianMixture& prior, int n_members, std::uint64_t seed)
    : Filter(std::move(name)),
      model_(&model),
      rng_(seed),
      ensemble_(sample_mixture(prior, n_members, rng_)),
      r_sqrt_(CholeskyFactor::compute(model.meas_noise_cov()).lower()) {
  if (n_members < 2) throw InvalidArgument("EnkfFilter: need at least 2 members");
}

GaussianMixture EnkfFilter::posterior() const {
  return GaussianMixture(fit_gaussian(ensemble_));
}

void EnkfFilter::step(const std::optional<Eigen::VectorXd>& z, int k, StepTrace* trace) {
  propagate_particles(ensemble_, *model_, k - 1, rng_);
  if (trace != nullptr) {
    trace->step = k;
    trace->chosen_m = 0;
  }
  if (!z.has_value()) return;

  const int n = ensemble_.size();
  const int m = model_->meas_dim();
  const double bessel = 1.0 / static_cast<double>(n - 1);

  Eigen::MatrixXd z_clean(m, n);
  for (int j = 0; j < n; ++j) z_clean.col(j) = model_->measure_clean(ensemble_.points().col(j));

  const Eigen::VectorXd z_bar = z_clean.rowwise().mean();
  const Eigen::VectorXd x_bar = ensemble_.mean();
  const Eigen::MatrixXd dz = z_clean.colwise() - z_bar;
  const Eigen::MatrixXd dx = ensemble_.points().colwise() - x_bar;

  const Eigen::MatrixXd p_zz =
      symmetrized(dz * dz.transpose() * bessel + model_->meas_noise_cov());
  const Eigen::MatrixXd p_zx = dz * dx.transpose() * bessel;
  const Eigen::MatrixXd gain = CholeskyFactor::compute(p_zz).solve(p_zx).transpose();

  // Perturbed-observation update: every member sees the measurement plus its
  // own R-draw, which is what keeps the posterior ensemble spread honest.
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd innovation = *z + r_sqrt_ * rng_.gaussian_vector(m) - z_clean.col(j);
    ensemble_.points().col(j) += gain * innovation;
  }
}

}  // namespace filters
}  // namespace pgm
