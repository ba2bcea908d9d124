#include "pgm/models.hpp"

#include <cmath>

#include "pgm/errors.hpp"
#include "pgm/linalg.hpp"

namespace pgm {
namespace models {

// ---- Base model -------------------------------------------------------------

StateSpaceModel::StateSpaceModel(Eigen::MatrixXd q_step, Eigen::MatrixXd r, int meas_every,
                                 double dt)
    : q_step_(std::move(q_step)), r_(std::move(r)), meas_every_(meas_every), dt_(dt) {
  if (meas_every_ < 1) throw InvalidArgument("StateSpaceModel: meas_every must be >= 1");
  if (!(dt_ > 0.0)) throw InvalidArgument("StateSpaceModel: dt must be positive");
  if (!is_symmetric(q_step_)) throw InvalidArgument("StateSpaceModel: Q must be symmetric");
  if (!is_symmetric(r_)) throw InvalidArgument("StateSpaceModel: R must be symmetric");
  // Both may be PSD: Q when noise enters a subset of coordinates, R when a
  // noise-free measurement scenario is simulated (filters still need the
  // covariances they assemble from these to factor).
  q_sqrt_ = matrix_sqrt_psd(q_step_);
  r_sqrt_ = matrix_sqrt_psd(r_);
}

Eigen::VectorXd StateSpaceModel::propagate(const Eigen::VectorXd& x, int k,
                                           RandomSource& rng) const {
  return propagate_mean(x, k) + q_sqrt_ * rng.gaussian_vector(state_dim());
}

Eigen::VectorXd StateSpaceModel::measure(const Eigen::VectorXd& x, RandomSource& rng) const {
  return measure_clean(x) + r_sqrt_ * rng.gaussian_vector(meas_dim());
}

// ---- Drift functions -----------------------------------------------------------

double scalar_benchmark_step(double x, int k, double noise) {
  return 0.5 * x + 25.0 * x / (1.0 + x * x) + 8.0 * std::cos(1.2 * static_cast<double>(k)) +
         noise;
}

double scalar_benchmark_measure(double x) { return x * x / 20.0; }

Eigen::Vector3d lorenz63_drift(const Eigen::Vector3d& x) {
  constexpr double sigma = 10.0;
  constexpr double rho = 28.0;
  constexpr double gamma = 8.0 / 3.0;
  return {sigma * (-x(0) + x(1)), rho * x(0) - x(1) - x(0) * x(2), -gamma * x(2) + x(0) * x(1)};
}

Eigen::VectorXd lorenz96_drift(const Eigen::VectorXd& x, double forcing) {
  const int d = static_cast<int>(x.size());
  Eigen::VectorXd dx(d);
  for (int i = 0; i < d; ++i) {
    const int im1 = (i - 1 + d) % d;
    const int im2 = (i - 2 + d) % d;
    const int ip1 = (i + 1) % d;
    dx(i) = x(im1) * (x(ip1) - x(im2)) - x(i) + forcing;
  }
  return dx;
}

Eigen::Vector2d demo_bimodal_drift(const Eigen::Vector2d& x) {
  return {-0.5 * x(0), std::sin(0.5 * x(1))};
}

// ---- Continuous systems ----------------------------------------------------------

Eigen::VectorXd integrate_step(const ContinuousModelConfig& cfg, const Eigen::VectorXd& x,
                               RandomSource& rng) {
  if (!(cfg.dt > 0.0)) throw InvalidArgument("integrate_step: dt must be positive");
  Eigen::VectorXd next = x + cfg.drift(x) * cfg.dt;
  if (cfg.diffusion_cov.size() > 0 && cfg.diffusion_cov.cwiseAbs().maxCoeff() > 0.0)
    next += matrix_sqrt_psd(cfg.diffusion_cov * cfg.dt) * rng.gaussian_vector(x.size());
  return next;
}

ContinuousModel::ContinuousModel(ContinuousModelConfig cfg, Eigen::MatrixXd r,
                                 int meas_dim_check,
                                 std::function<Eigen::VectorXd(const Eigen::VectorXd&)> measure,
                                 NoiseMode noise_mode)
    : StateSpaceModel(noise_mode == NoiseMode::intensity
                          ? Eigen::MatrixXd(cfg.diffusion_cov * cfg.dt)
                          : cfg.diffusion_cov,
                      std::move(r), cfg.substeps_per_measurement, cfg.dt),
      cfg_(std::move(cfg)),
      measure_(std::move(measure)) {
  if (meas_dim() != meas_dim_check)
    throw DimensionError("ContinuousModel: R dimension does not match the measurement map");
}

Eigen::VectorXd ContinuousModel::propagate_mean(const Eigen::VectorXd& x, int /*k*/) const {
  return x + cfg_.drift(x) * cfg_.dt;
}

Eigen::VectorXd ContinuousModel::measure_clean(const Eigen::VectorXd& x) const {
  return measure_(x);
}

// ---- Concrete benchmark systems ----------------------------------------------------

namespace {
Eigen::MatrixXd scalar_matrix(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return m;
}
}  // namespace

ScalarGrowthModel::ScalarGrowthModel(double process_noise_var, double meas_noise_var,
                                     int meas_every)
    : StateSpaceModel(scalar_matrix(process_noise_var), scalar_matrix(meas_noise_var),
                      meas_every, 1.0) {}

Eigen::VectorXd ScalarGrowthModel::propagate_mean(const Eigen::VectorXd& x, int k) const {
  Eigen::VectorXd out(1);
  out(0) = scalar_benchmark_step(x(0), k, 0.0);
  return out;
}

Eigen::VectorXd ScalarGrowthModel::measure_clean(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(1);
  out(0) = scalar_benchmark_measure(x(0));
  return out;
}

namespace {
Eigen::MatrixXd l63_diffusion(double diffusion, bool all_coords) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
  if (all_coords) {
    g = diffusion * Eigen::MatrixXd::Identity(3, 3);
  } else {
    g(2, 2) = diffusion;  // noise drives the third state equation only
  }
  return g;
}
}  // namespace

Lorenz63Model::Lorenz63Model(double dt, double diffusion, double meas_noise_var, int meas_every,
                             NoiseMode noise_mode, bool noise_all_coords, int substeps)
    : StateSpaceModel(noise_mode == NoiseMode::intensity
                          ? Eigen::MatrixXd(l63_diffusion(diffusion, noise_all_coords) * dt)
                          : l63_diffusion(diffusion, noise_all_coords),
                      scalar_matrix(meas_noise_var), meas_every, dt),
      dt_step_(dt),
      substeps_(substeps) {
  if (substeps_ < 1) throw InvalidArgument("Lorenz63Model: substeps must be >= 1");
}

Eigen::VectorXd Lorenz63Model::propagate_mean(const Eigen::VectorXd& x, int /*k*/) const {
  const double h = dt_step_ / substeps_;
  Eigen::Vector3d y = x;
  for (int s = 0; s < substeps_; ++s) y += lorenz63_drift(y) * h;
  return y;
}

Eigen::VectorXd Lorenz63Model::measure_clean(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(1);
  out(0) = x.norm();  // range from the origin
  return out;
}

Lorenz96Model::Lorenz96Model(int dim, double forcing, double dt, double diffusion,
                             double meas_noise_var, int meas_every, NoiseMode noise_mode,
                             int substeps)
    : StateSpaceModel(
          (noise_mode == NoiseMode::intensity ? diffusion * dt : diffusion) *
              Eigen::MatrixXd::Identity(dim, dim),
          meas_noise_var * Eigen::MatrixXd::Identity(dim / 2, dim / 2), meas_every, dt),
      forcing_(forcing),
      dt_step_(dt),
      substeps_(substeps) {
  if (dim < 4 || dim % 2 != 0)
    throw InvalidArgument("Lorenz96Model: dimension must be even and >= 4");
  if (substeps_ < 1) throw InvalidArgument("Lorenz96Model: substeps must be >= 1");
}

Eigen::VectorXd Lorenz96Model::propagate_mean(const Eigen::VectorXd& x, int /*k*/) const {
  const double h = dt_step_ / substeps_;
  Eigen::VectorXd y = x;
  for (int s = 0; s < substeps_; ++s) y += lorenz96_drift(y, forcing_) * h;
  return y;
}

Eigen::VectorXd Lorenz96Model::measure_clean(const Eigen::VectorXd& x) const {
  const int m = meas_dim();
  Eigen::VectorXd z(m);
  for (int i = 0; i < m; ++i) z(i) = x(2 * i);  // odd coordinates, 1-based
  return z;
}

LinearGaussianModel::LinearGaussianModel(double process_noise_var, double meas_noise_var,
                                         int meas_every)
    : StateSpaceModel(process_noise_var * Eigen::MatrixXd::Identity(2, 2),
                      scalar_matrix(meas_noise_var), meas_every, 1.0) {
  a_ << 0.9, 0.1, -0.05, 0.8;  // spectral radius < 1: stationary filter exists
  h_ << 1.0, 0.0;
}

Eigen::VectorXd LinearGaussianModel::propagate_mean(const Eigen::VectorXd& x, int /*k*/) const {
  return a_ * x;
}

Eigen::VectorXd LinearGaussianModel::measure_clean(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z(1);
  z(0) = h_ * x;
  return z;
}

// ---- Truth simulation ---------------------------------------------------------------

TruthData simulate_truth(const StateSpaceModel& model, const Eigen::VectorXd& x0, int steps,
                         RandomSource& process_rng, RandomSource& meas_rng) {
  if (steps < 1) throw InvalidArgument("simulate_truth: need steps >= 1");
  if (x0.size() != model.state_dim())
    throw DimensionError("simulate_truth: x0 dimension does not match the model");

  TruthData data;
  data.states.reserve(steps + 1);
  data.measurements.assign(steps + 1, std::nullopt);
  data.states.push_back(x0);
  for (int k = 1; k <= steps; ++k) {
    data.states.push_back(model.propagate(data.states.back(), k - 1, process_rng));
    if (k % model.meas_every() == 0)
      data.measurements[k] = model.measure(data.states.back(), meas_rng);
  }
  return data;
}

}  // namespace models
}  // namespace pgm
