#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "pgm/errors.hpp"
#include "pgm/filters.hpp"
#include "pgm/linalg.hpp"
#include "pgm/models.hpp"
#include "pgm/random.hpp"
#include "support/oracles.hpp"

using namespace pgm;
using namespace pgm::filters;
using namespace pgm::models;

namespace {

/// Minimal model whose transition and measurement maps are injected, so a
/// test can pin the exact dynamics it needs.
class CallbackModel : public StateSpaceModel {
 public:
  using StepFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)>;
  using MeasFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  CallbackModel(Eigen::MatrixXd q, Eigen::MatrixXd r, int meas_every, StepFn f, MeasFn h)
      : StateSpaceModel(std::move(q), std::move(r), meas_every, 1.0),
        f_(std::move(f)),
        h_(std::move(h)) {}

  [[nodiscard]] Eigen::VectorXd propagate_mean(const Eigen::VectorXd& x, int k) const override {
    return f_(x, k);
  }
  [[nodiscard]] Eigen::VectorXd measure_clean(const Eigen::VectorXd& x) const override {
    return h_(x);
  }

 private:
  StepFn f_;
  MeasFn h_;
};

CallbackModel identity_model(int d, double q_var, double r_var, int meas_every = 1) {
  return CallbackModel(
      q_var * Eigen::MatrixXd::Identity(d, d), r_var * Eigen::MatrixXd::Identity(d, d),
      meas_every, [](const Eigen::VectorXd& x, int) { return x; },
      [](const Eigen::VectorXd& x) { return x; });
}

GaussianComponent scalar_comp(double w, double mu, double var) {
  return GaussianComponent(w, Eigen::VectorXd::Constant(1, mu),
                           Eigen::MatrixXd::Constant(1, 1, var));
}

GaussianMixture standard_prior(int d) {
  return GaussianMixture(
      GaussianComponent(1.0, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d)));
}

/// Time-averaged distance between a filter's mean and the analytic Kalman
/// mean on the linear benchmark, next to the Monte Carlo tolerance
/// 3·sqrt(trace(P)/d)/sqrt(N) the sampled filters are entitled to.
struct TrackResult {
  double mean_error = 0.0;  ///< avg over steps of ‖μ_f − μ_KF‖/√d
  double band = 0.0;        ///< avg over steps of 3·√(tr P_KF/d)/√N
};

TrackResult track_linear(const std::function<std::unique_ptr<Filter>(
                             const StateSpaceModel&, const GaussianMixture&, std::uint64_t)>& make,
                         int n_particles, int runs, int steps) {
  const LinearGaussianModel model(0.1, 0.5, 1);
  const GaussianMixture prior = standard_prior(2);

  double err_sum = 0.0, band_sum = 0.0;
  int n_terms = 0;
  for (int run = 0; run < runs; ++run) {
    RandomSource process(derive_seed(424242, run, 1));
    RandomSource meas(derive_seed(424242, run, 2));
    const TruthData truth =
        simulate_truth(model, Eigen::VectorXd::Zero(2), steps, process, meas);

    auto filter = make(model, prior, derive_seed(424242, run, 77));
    oracles::KalmanBelief belief{prior.mean(), prior.covariance()};
    const Eigen::MatrixXd a = model.transition();
    const Eigen::MatrixXd h = model.observation();

    for (int k = 1; k <= steps; ++k) {
      filter->step(truth.measurements[k], k);
      belief = oracles::kf_predict(belief, a, model.process_noise_cov());
      if (truth.measurements[k].has_value())
        belief = oracles::kf_update(belief, h, model.meas_noise_cov(), *truth.measurements[k]);

      const GaussianMixture post = filter->posterior();
      err_sum += (post.mean() - belief.mean).norm() / std::sqrt(2.0);
      band_sum += 3.0 * std::sqrt(belief.cov.trace() / 2.0 / n_particles);
      n_terms += 1;
    }
  }
  return {err_sum / n_terms, band_sum / n_terms};
}

}  // namespace

TEST_SUITE("filters") {

// ---- Sigma-point statistics -------------------------------------------------------

TEST_CASE("sigma points reproduce the input moments") {
  RandomSource rng(61);
  for (int d : {1, 3}) {
    const Eigen::VectorXd mu = rng.gaussian_vector(d);
    Eigen::MatrixXd a(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a(r, c) = rng.gaussian();
    const Eigen::MatrixXd p = a * a.transpose() + Eigen::MatrixXd::Identity(d, d);

    const SigmaPoints sp = make_sigma_points(mu, p, UnscentedParams{});
    REQUIRE(sp.points.cols() == 2 * d + 1);
    CHECK(sp.mean_weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((sp.points * sp.mean_weights - mu).norm() < 1e-12);

    Eigen::MatrixXd recon = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < sp.points.cols(); ++i) {
      const Eigen::VectorXd dx = sp.points.col(i) - mu;
      recon += sp.cov_weights(i) * dx * dx.transpose();
    }
    CHECK((recon - p).norm() < 1e-10);
  }
}

TEST_CASE("sigma-point weights follow the scaled construction") {
  const UnscentedParams ut{};  // alpha 1.3, beta 1.5, lambda 0.2
  const SigmaPoints sp = make_sigma_points(Eigen::VectorXd::Zero(1),
                                           Eigen::MatrixXd::Identity(1, 1), ut);
  const double scale = 1.0 + ut.lambda;
  CHECK(sp.mean_weights(0) == doctest::Approx(ut.lambda / scale).epsilon(1e-14));
  CHECK(sp.cov_weights(0) ==
        doctest::Approx(ut.lambda / scale + 1.0 - ut.alpha * ut.alpha + ut.beta)
            .epsilon(1e-14));
  CHECK(sp.mean_weights(1) == doctest::Approx(0.5 / scale).epsilon(1e-14));
  CHECK(sp.points(0, 1) == doctest::Approx(std::sqrt(scale)).epsilon(1e-14));
  CHECK(sp.points(0, 2) == doctest::Approx(-std::sqrt(scale)).epsilon(1e-14));
}

TEST_CASE("non-positive sigma scaling is rejected") {
  UnscentedParams ut;
  ut.lambda = -3.0;
  CHECK_THROWS_AS((void)make_sigma_points(Eigen::VectorXd::Zero(1),
                                          Eigen::MatrixXd::Identity(1, 1), ut),
                  InvalidArgument);
}

TEST_CASE("unscented statistics are exact for a linear measurement map") {
  RandomSource rng(62);
  for (int rep = 0; rep < 5; ++rep) {
    const int d = 2;
    const Eigen::VectorXd mu = rng.gaussian_vector(d);
    Eigen::MatrixXd a(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a(r, c) = rng.gaussian();
    const Eigen::MatrixXd p = a * a.transpose() + Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd h_mat(1, d);
    h_mat << rng.gaussian(), rng.gaussian();
    const Eigen::MatrixXd r_mat = Eigen::MatrixXd::Constant(1, 1, 0.3);

    const GaussianComponent comp(1.0, mu, p);
    const MeasurementStats stats = unscented_stats(
        comp, [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(h_mat * x); }, r_mat,
        UnscentedParams{});
    CHECK((stats.z_hat - h_mat * mu).norm() < 1e-10);
    CHECK((stats.p_zz - (h_mat * p * h_mat.transpose() + r_mat)).norm() < 1e-10);
    CHECK((stats.p_zx - h_mat * p).norm() < 1e-10);
  }
}

TEST_CASE("unscented statistics capture the quadratic moment") {
  // For x ~ N(0,1) and z = x², the sigma-point mean of z is E[x²] = 1.
  const GaussianComponent comp = scalar_comp(1.0, 0.0, 1.0);
  const MeasurementStats stats = unscented_stats(
      comp,
      [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, x(0) * x(0)); },
      Eigen::MatrixXd::Constant(1, 1, 1.0), UnscentedParams{});
  CHECK(stats.z_hat(0) == doctest::Approx(1.0).epsilon(1e-12));
}

// ---- Single-mode measurement update --------------------------------------------------

TEST_CASE("scalar update halves a unit prior against unit measurement noise") {
  const GaussianComponent comp = scalar_comp(0.6, 0.0, 1.0);
  MeasurementStats stats;
  stats.z_hat = Eigen::VectorXd::Zero(1);
  stats.p_zz = Eigen::MatrixXd::Constant(1, 1, 2.0);  // P + R
  stats.p_zx = Eigen::MatrixXd::Constant(1, 1, 1.0);  // P
  const GaussianComponent post =
      kalman_component_update(comp, stats, Eigen::VectorXd::Constant(1, 2.0));
  CHECK(post.weight() == doctest::Approx(0.6));  // passed through unchanged
  CHECK(post.mean()(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(post.cov()(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("an uninformative measurement leaves the mode untouched") {
  const GaussianComponent comp = scalar_comp(1.0, 3.0, 2.0);
  MeasurementStats stats;
  stats.z_hat = Eigen::VectorXd::Constant(1, 3.0);
  stats.p_zz = Eigen::MatrixXd::Constant(1, 1, 1e12 + 2.0);
  stats.p_zx = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const GaussianComponent post =
      kalman_component_update(comp, stats, Eigen::VectorXd::Constant(1, 100.0));
  CHECK(post.mean()(0) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(post.cov()(0, 0) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("mode update matches the reference recursion for linear statistics") {
  RandomSource rng(63);
  for (int rep = 0; rep < 10; ++rep) {
    const int d = 2;
    const Eigen::VectorXd mu = rng.gaussian_vector(d);
    Eigen::MatrixXd a(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a(r, c) = rng.gaussian();
    const Eigen::MatrixXd p = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd h_mat(1, d);
    h_mat << 1.0 + rng.gaussian(), rng.gaussian();
    const Eigen::MatrixXd r_mat = Eigen::MatrixXd::Constant(1, 1, 0.4);
    const Eigen::VectorXd z = Eigen::VectorXd::Constant(1, rng.gaussian());

    MeasurementStats stats;
    stats.z_hat = h_mat * mu;
    stats.p_zz = h_mat * p * h_mat.transpose() + r_mat;
    stats.p_zx = h_mat * p;
    const GaussianComponent post = kalman_component_update(GaussianComponent(1.0, mu, p),
                                                           stats, z);

    const oracles::KalmanBelief ref = oracles::kf_update({mu, p}, h_mat, r_mat, z);
    CHECK((post.mean() - ref.mean).norm() < 1e-10);
    CHECK((post.cov() - ref.cov).norm() < 1e-10);
  }
}

TEST_CASE("an indefinite innovation covariance is rejected") {
  MeasurementStats stats;
  stats.z_hat = Eigen::VectorXd::Zero(1);
  stats.p_zz = Eigen::MatrixXd::Constant(1, 1, -1.0);
  stats.p_zx = Eigen::MatrixXd::Constant(1, 1, 1.0);
  CHECK_THROWS_AS((void)kalman_component_update(scalar_comp(1.0, 0.0, 1.0), stats,
                                                Eigen::VectorXd::Zero(1)),
                  CholeskyFailure);
}

// ---- Cluster-particle measurement statistics ---------------------------------------

TEST_CASE("two-particle statistics use the unbiased normalization") {
  ParticleSet pts(1, 2);
  pts.points()(0, 0) = -1.0;
  pts.points()(0, 1) = 1.0;
  const GaussianComponent comp = scalar_comp(1.0, 0.0, 2.0);
  const double r = 0.7;
  bool fell_back = false;
  const MeasurementStats stats = particle_stats(
      pts, comp, [](const Eigen::VectorXd& x) { return x; },
      Eigen::MatrixXd::Constant(1, 1, r), UnscentedParams{}, &fell_back);
  CHECK(!fell_back);
  CHECK(stats.z_hat(0) == doctest::Approx(0.0));
  CHECK(stats.p_zz(0, 0) == doctest::Approx(2.0 + r).epsilon(1e-12));
  CHECK(stats.p_zx(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("noise-free statistics reduce to the plain sample covariance") {
  ParticleSet pts(1, 2);
  pts.points()(0, 0) = -1.0;
  pts.points()(0, 1) = 1.0;
  const MeasurementStats stats = particle_stats(
      pts, scalar_comp(1.0, 0.0, 2.0), [](const Eigen::VectorXd& x) { return x; },
      Eigen::MatrixXd::Zero(1, 1), UnscentedParams{});
  CHECK(stats.p_zz(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("a single-particle cluster falls back to sigma-point statistics") {
  ParticleSet pts(1, 1);
  pts.points()(0, 0) = 5.0;
  const GaussianComponent comp = scalar_comp(1.0, 0.5, 1.5);
  const Eigen::MatrixXd r = Eigen::MatrixXd::Constant(1, 1, 0.3);
  auto h = [](const Eigen::VectorXd& x) { return x; };
  bool fell_back = false;
  const MeasurementStats stats = particle_stats(pts, comp, h, r, UnscentedParams{}, &fell_back);
  CHECK(fell_back);
  const MeasurementStats ref = unscented_stats(comp, h, r, UnscentedParams{});
  CHECK(stats.z_hat(0) == doctest::Approx(ref.z_hat(0)).epsilon(1e-14));
  CHECK(stats.p_zz(0, 0) == doctest::Approx(ref.p_zz(0, 0)).epsilon(1e-14));
  CHECK(stats.p_zx(0, 0) == doctest::Approx(ref.p_zx(0, 0)).epsilon(1e-14));
}

// ---- Mode weight update ----------------------------------------------------------------

TEST_CASE("weights multiply by the mode likelihoods and renormalize") {
  Eigen::VectorXd prior(2), loglik(2);
  prior << 0.5, 0.5;
  loglik << std::log(3.0), std::log(1.0);
  const Eigen::VectorXd post = mode_weight_update(prior, loglik);
  CHECK(post(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(post(1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("the weight update is invariant to common likelihood scaling") {
  RandomSource rng(64);
  Eigen::VectorXd prior(3);
  prior << 0.2, 0.5, 0.3;
  Eigen::VectorXd loglik(3);
  loglik << rng.gaussian(), rng.gaussian(), rng.gaussian();
  const Eigen::VectorXd a = mode_weight_update(prior, loglik);
  const Eigen::VectorXd b = mode_weight_update(prior, loglik.array() - 700.0);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("total likelihood underflow keeps the prior weights and reports it") {
  Eigen::VectorXd prior(2);
  prior << 0.3, 0.7;
  Eigen::VectorXd loglik(2);
  loglik << -std::numeric_limits<double>::infinity(),
      -std::numeric_limits<double>::infinity();
  bool underflow = false;
  const Eigen::VectorXd post = mode_weight_update(prior, loglik, &underflow);
  CHECK(underflow);
  CHECK(post(0) == doctest::Approx(0.3));
  CHECK(post(1) == doctest::Approx(0.7));
}

TEST_CASE("zero prior weight stays zero through the update") {
  Eigen::VectorXd prior(2);
  prior << 1.0, 0.0;
  Eigen::VectorXd loglik(2);
  loglik << 0.0, 100.0;  // even a huge likelihood cannot revive a dead mode
  const Eigen::VectorXd post = mode_weight_update(prior, loglik);
  CHECK(post(0) == doctest::Approx(1.0));
  CHECK(post(1) == doctest::Approx(0.0));
}

TEST_CASE("mismatched weight and likelihood lengths are rejected") {
  CHECK_THROWS_AS((void)mode_weight_update(Eigen::VectorXd::Constant(2, 0.5),
                                           Eigen::VectorXd::Zero(3)),
                  DimensionError);
}

// ---- Sampled prediction -------------------------------------------------------------

TEST_CASE("sampled prediction needs at least two particles") {
  const CallbackModel model = identity_model(1, 0.0, 1.0);
  RandomSource rng(65);
  CHECK_THROWS_AS((void)pgm_predict(GaussianMixture(scalar_comp(1.0, 0.0, 1.0)), model, 1, 0, rng),
                  InvalidArgument);
}

TEST_CASE("sampled prediction reproduces the linear pushforward moments") {
  const LinearGaussianModel model(0.1, 0.5, 1);
  const GaussianMixture post(
      GaussianComponent(1.0, Eigen::Vector2d(1.0, -2.0), Eigen::Matrix2d::Identity()));
  RandomSource rng(66);
  const int n = 20000;
  const ParticleSet pred = pgm_predict(post, model, n, 0, rng);
  REQUIRE(pred.size() == n);

  const Eigen::MatrixXd a = model.transition();
  const Eigen::VectorXd mean_exact = a * post.mean();
  const Eigen::MatrixXd cov_exact =
      a * post.covariance() * a.transpose() + model.process_noise_cov();
  CHECK((pred.mean() - mean_exact).norm() <
        4.0 * std::sqrt(cov_exact.trace() / n));
  CHECK((pred.covariance() - cov_exact).norm() < 0.05 * cov_exact.norm());
}

TEST_CASE("particle propagation validates dimensions") {
  const CallbackModel model = identity_model(2, 0.0, 1.0);
  ParticleSet pts(1, 5);
  RandomSource rng(67);
  CHECK_THROWS_AS(propagate_particles(pts, model, 0, rng), DimensionError);
}

// ---- Mixture filter lifecycle ----------------------------------------------------------

TEST_CASE("mixture filter constructor validates its options") {
  const CallbackModel model = identity_model(1, 0.1, 1.0);
  const GaussianMixture prior = standard_prior(1);
  PgmOptions opts;
  opts.particle_count = 1;
  CHECK_THROWS_AS(PgmFilter("f", model, prior, opts, 1), InvalidArgument);
  opts.particle_count = 100;
  opts.m_max = 0;
  CHECK_THROWS_AS(PgmFilter("f", model, prior, opts, 1), InvalidArgument);
  opts.m_max = 2;
  opts.variant = 3;
  CHECK_THROWS_AS(PgmFilter("f", model, prior, opts, 1), InvalidArgument);
}

TEST_CASE("between measurements the state is the particle ensemble") {
  const CallbackModel model = identity_model(1, 0.1, 1.0, 4);
  const GaussianMixture prior({scalar_comp(0.4, -2.0, 1.0), scalar_comp(0.6, 2.0, 1.0)});
  PgmOptions opts;
  opts.particle_count = 300;
  opts.m_max = 2;
  PgmFilter f("pgm", model, prior, opts, 99);

  CHECK(!f.holds_particles());
  StepTrace trace;
  f.step(std::nullopt, 1, &trace);
  CHECK(f.holds_particles());
  CHECK(trace.chosen_m == 0);
  // Prediction leaves the discrete weights untouched.
  REQUIRE(trace.weights.size() == 2);
  CHECK(trace.weights[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(trace.weights[1] == doctest::Approx(0.6).epsilon(1e-12));

  // The ensemble still summarizes as a (single-mode) posterior on demand.
  const GaussianMixture summary = f.posterior();
  CHECK(summary.size() == 1);
  CHECK(std::isfinite(summary.mean()(0)));

  f.step(std::nullopt, 2, &trace);
  CHECK(f.holds_particles());
}

TEST_CASE("a measurement step rebuilds the mixture and reweights it") {
  const CallbackModel model = identity_model(1, 0.01, 1.0);
  const GaussianMixture prior({scalar_comp(0.5, -7.0, 1.0), scalar_comp(0.5, 7.0, 1.0)});
  PgmOptions opts;
  opts.particle_count = 400;
  opts.m_max = 2;
  PgmFilter f("pgm", model, prior, opts, 321);

  StepTrace trace;
  f.step(Eigen::VectorXd::Constant(1, 7.0), 1, &trace);
  CHECK(!f.holds_particles());
  CHECK(trace.chosen_m >= 1);
  CHECK(trace.chosen_m <= 2);

  const GaussianMixture post = f.posterior();
  double wsum = 0.0;
  for (const auto& c : post.components()) wsum += c.weight();
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));

  // The mode consistent with the measurement keeps almost all weight and
  // stays at z; the other mode's mean gets dragged toward z by its own
  // Kalman update (gain ≈ ½ here), which is why it cannot be identified by
  // sign — only by its collapsed weight.
  REQUIRE(post.size() == 2);
  const int hot = post.component(0).weight() > post.component(1).weight() ? 0 : 1;
  CHECK(post.component(hot).weight() > 0.95);
  CHECK(post.component(hot).mean()(0) == doctest::Approx(7.0).epsilon(0.1));
  CHECK(post.component(1 - hot).weight() < 1e-10);
  CHECK(f.mode_weights().size() == 2);
}

TEST_CASE("mixture filter runs are reproducible from the seed") {
  const ScalarGrowthModel model(10.0, 1.0, 2);
  const GaussianMixture prior(scalar_comp(1.0, 0.0, 2.0));
  PgmOptions opts;
  opts.particle_count = 50;
  opts.m_max = 2;

  RandomSource process(1001), meas(1002);
  const TruthData truth = simulate_truth(model, Eigen::VectorXd::Zero(1), 12, process, meas);

  PgmFilter a("a", model, prior, opts, 555);
  PgmFilter b("b", model, prior, opts, 555);
  for (int k = 1; k <= 12; ++k) {
    a.step(truth.measurements[k], k);
    b.step(truth.measurements[k], k);
  }
  CHECK((a.posterior().mean() - b.posterior().mean()).norm() == 0.0);
  CHECK((a.posterior().covariance() - b.posterior().covariance()).norm() == 0.0);
}

TEST_CASE("single-mode mixture filtering tracks the analytic recursion") {
  auto make = [](const StateSpaceModel& m, const GaussianMixture& p, std::uint64_t seed) {
    PgmOptions opts;
    opts.particle_count = 2000;
    opts.m_max = 1;
    return std::unique_ptr<Filter>(std::make_unique<PgmFilter>("pgm1", m, p, opts, seed));
  };
  const TrackResult r = track_linear(make, 2000, 5, 40);
  CHECK(r.mean_error < r.band);
}

TEST_CASE("cluster-statistics variant also tracks the analytic recursion") {
  auto make = [](const StateSpaceModel& m, const GaussianMixture& p, std::uint64_t seed) {
    PgmOptions opts;
    opts.particle_count = 2000;
    opts.m_max = 1;
    opts.variant = 2;
    return std::unique_ptr<Filter>(std::make_unique<PgmFilter>("pgm2", m, p, opts, seed));
  };
  const TrackResult r = track_linear(make, 2000, 5, 40);
  CHECK(r.mean_error < r.band);
}

// ---- Bootstrap particle filter -----------------------------------------------------------

TEST_CASE("bootstrap filter keeps uniform weights and a fixed ensemble size") {
  const ScalarGrowthModel model(10.0, 1.0, 2);
  SirFilter f("pf", model, standard_prior(1), 200, 777);
  RandomSource process(1), meas(2);
  const TruthData truth = simulate_truth(model, Eigen::VectorXd::Zero(1), 8, process, meas);
  for (int k = 1; k <= 8; ++k) {
    f.step(truth.measurements[k], k);
    CHECK(f.particles().size() == 200);
    CHECK(f.weights().minCoeff() == doctest::Approx(1.0 / 200).epsilon(1e-12));
    CHECK(f.weights().maxCoeff() == doctest::Approx(1.0 / 200).epsilon(1e-12));
  }
  CHECK_THROWS_AS(SirFilter("bad", model, standard_prior(1), 1, 7), InvalidArgument);
}

TEST_CASE("bootstrap filter tracks the analytic recursion") {
  auto make = [](const StateSpaceModel& m, const GaussianMixture& p, std::uint64_t seed) {
    return std::unique_ptr<Filter>(std::make_unique<SirFilter>("pf", m, p, 2000, seed));
  };
  const TrackResult r = track_linear(make, 2000, 5, 40);
  CHECK(r.mean_error < r.band);
}

TEST_CASE("total particle-likelihood underflow is flagged, not propagated") {
  const CallbackModel model = identity_model(1, 0.1, 1e-6);
  SirFilter f("pf", model, standard_prior(1), 100, 31);
  StepTrace trace;
  // (z − h)² / R overflows the exponent for every particle.
  f.step(Eigen::VectorXd::Constant(1, 1e200), 1, &trace);
  CHECK(trace.resample_degenerate);
  CHECK(std::isfinite(f.posterior().mean()(0)));
  CHECK(f.weights().maxCoeff() == doctest::Approx(0.01).epsilon(1e-12));
}

// ---- Unscented filters --------------------------------------------------------------------

TEST_CASE("unscented filter equals the analytic recursion on the linear benchmark") {
  const LinearGaussianModel model(0.1, 0.5, 1);
  const GaussianMixture prior = standard_prior(2);
  UkfFilter f("ukf", model, prior, UnscentedParams{});
  oracles::KalmanBelief belief{prior.mean(), prior.covariance()};

  RandomSource process(2001), meas(2002);
  const TruthData truth = simulate_truth(model, Eigen::VectorXd::Zero(2), 50, process, meas);
  const Eigen::MatrixXd a = model.transition();
  const Eigen::MatrixXd h = model.observation();

  for (int k = 1; k <= 50; ++k) {
    f.step(truth.measurements[k], k);
    belief = oracles::kf_predict(belief, a, model.process_noise_cov());
    if (truth.measurements[k].has_value())
      belief = oracles::kf_update(belief, h, model.meas_noise_cov(), *truth.measurements[k]);
    CHECK((f.mean() - belief.mean).norm() < 1e-8);
    CHECK((f.cov() - belief.cov).norm() < 1e-8);
  }
}

TEST_CASE("a single-mode bank is exactly the plain unscented filter") {
  const ScalarGrowthModel model(10.0, 1.0, 2);
  const GaussianMixture prior(scalar_comp(1.0, 0.5, 2.0));
  UkfFilter plain("ukf", model, prior, UnscentedParams{});
  GmUkfFilter bank("gmukf", model, prior, UnscentedParams{});

  RandomSource process(3001), meas(3002);
  const TruthData truth = simulate_truth(model, Eigen::VectorXd::Constant(1, 0.5), 20,
                                         process, meas);
  for (int k = 1; k <= 20; ++k) {
    plain.step(truth.measurements[k], k);
    bank.step(truth.measurements[k], k);
    CHECK((plain.posterior().mean() - bank.posterior().mean()).norm() == 0.0);
    CHECK((plain.posterior().covariance() - bank.posterior().covariance()).norm() == 0.0);
  }
}

TEST_CASE("a sharp measurement pins the unscented posterior onto it") {
  const CallbackModel model = identity_model(1, 1.0, 1e-12);
  UkfFilter f("ukf", model, GaussianMixture(scalar_comp(1.0, 5.0, 1.0)), UnscentedParams{});
  f.step(Eigen::VectorXd::Constant(1, 2.0), 1);
  CHECK(f.mean()(0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(f.cov()(0, 0) < 1e-6);
}

TEST_CASE("a mixture bank keeps its mode count and normalized weights") {
  const ScalarGrowthModel model(10.0, 1.0, 2);
  const GaussianMixture prior({scalar_comp(0.5, -5.0, 2.0), scalar_comp(0.5, 5.0, 2.0)});
  GmUkfFilter f("gmukf", model, prior, UnscentedParams{});
  RandomSource process(4001), meas(4002);
  const TruthData truth = simulate_truth(model, Eigen::VectorXd::Constant(1, 5.0), 16,
                                         process, meas);
  for (int k = 1; k <= 16; ++k) {
    f.step(truth.measurements[k], k);
    const GaussianMixture post = f.posterior();
    CHECK(post.size() == 2);  // fixed bank: no merging, no clustering
    double wsum = 0.0;
    for (const auto& c : post.components()) {
      wsum += c.weight();
      CHECK(std::isfinite(c.mean()(0)));
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(f.repair_count() >= 0);
}

// ---- Ensemble filter -------------------------------------------------------------------

TEST_CASE("ensemble filter needs at least two members") {
  const CallbackModel model = identity_model(1, 0.1, 1.0);
  CHECK_THROWS_AS(EnkfFilter("enkf", model, standard_prior(1), 1, 5), InvalidArgument);
}

TEST_CASE("ensemble filter tracks the analytic recursion") {
  auto make = [](const StateSpaceModel& m, const GaussianMixture& p, std::uint64_t seed) {
    return std::unique_ptr<Filter>(std::make_unique<EnkfFilter>("enkf", m, p, 2000, seed));
  };
  const TrackResult r = track_linear(make, 2000, 5, 40);
  CHECK(r.mean_error < r.band);
}

TEST_CASE("an uninformative measurement leaves the ensemble in place") {
  const CallbackModel model = identity_model(1, 0.0, 1e12);
  EnkfFilter f("enkf", model, standard_prior(1), 200, 41);
  const Eigen::MatrixXd before = f.ensemble().points();
  f.step(Eigen::VectorXd::Zero(1), 1);
  CHECK((f.ensemble().points() - before).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("ensemble runs are reproducible from the seed") {
  const ScalarGrowthModel model(10.0, 1.0, 2);
  RandomSource process(5001), meas(5002);
  const TruthData truth = simulate_truth(model, Eigen::VectorXd::Zero(1), 10, process, meas);
  EnkfFilter a("a", model, standard_prior(1), 100, 99);
  EnkfFilter b("b", model, standard_prior(1), 100, 99);
  for (int k = 1; k <= 10; ++k) {
    a.step(truth.measurements[k], k);
    b.step(truth.measurements[k], k);
  }
  CHECK((a.ensemble().points() - b.ensemble().points()).cwiseAbs().maxCoeff() == 0.0);
}

// ---- Cross-cutting robustness ----------------------------------------------------------

TEST_CASE("every filter survives the scalar benchmark with a factorizable posterior") {
  const ScalarGrowthModel model(10.0, 1.0, 2);
  const GaussianMixture prior(scalar_comp(1.0, 0.0, 2.0));

  for (std::uint64_t seed : {11u, 22u, 33u}) {
    RandomSource process(derive_seed(seed, 0, 1)), meas(derive_seed(seed, 0, 2));
    const TruthData truth = simulate_truth(model, Eigen::VectorXd::Zero(1), 52, process, meas);

    PgmOptions opts;
    opts.particle_count = 50;
    opts.m_max = 2;
    std::vector<std::unique_ptr<Filter>> bank;
    bank.push_back(std::make_unique<PgmFilter>("pgm1", model, prior, opts, seed + 1));
    PgmOptions opts2 = opts;
    opts2.variant = 2;
    bank.push_back(std::make_unique<PgmFilter>("pgm2", model, prior, opts2, seed + 2));
    bank.push_back(std::make_unique<SirFilter>("pf", model, prior, 50, seed + 3));
    bank.push_back(std::make_unique<UkfFilter>("ukf", model, prior, UnscentedParams{}));
    bank.push_back(std::make_unique<EnkfFilter>("enkf", model, prior, 50, seed + 4));

    for (auto& f : bank) {
      for (int k = 1; k <= 52; ++k) f->step(truth.measurements[k], k);
      const GaussianMixture post = f->posterior();
      CHECK(std::isfinite(post.mean()(0)));
      CHECK_NOTHROW((void)CholeskyFactor::compute(post.covariance()));
    }
  }
}

}  // TEST_SUITE
