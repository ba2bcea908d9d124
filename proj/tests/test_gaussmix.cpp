#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "pgm/errors.hpp"
#include "pgm/gaussian.hpp"
#include "pgm/mixture.hpp"
#include "pgm/random.hpp"
#include "support/oracles.hpp"

using namespace pgm;

namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v(0) = x;
  return v;
}

Eigen::MatrixXd mat1(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return m;
}

GaussianComponent comp1(double w, double mu, double var) {
  return GaussianComponent(w, vec1(mu), mat1(var));
}

/// Random mixture on [d, m] with overlapping modes, for property sweeps.
GaussianMixture random_mixture(int d, int m, RandomSource& rng, double mean_spread = 1.0) {
  std::vector<GaussianComponent> comps;
  comps.reserve(m);
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd mu = mean_spread * rng.gaussian_vector(d);
    Eigen::MatrixXd a(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a(r, c) = 0.4 * rng.gaussian();
    const Eigen::MatrixXd cov =
        a * a.transpose() + 0.3 * Eigen::MatrixXd::Identity(d, d);
    comps.emplace_back(0.2 + rng.uniform(), mu, cov);
  }
  return GaussianMixture(std::move(comps));
}

}  // namespace

TEST_SUITE("gaussmix") {

// ---- Density evaluation --------------------------------------------------------

TEST_CASE("log-density of the standard normal at its mean") {
  CHECK(gaussian_logpdf(vec1(0.0), vec1(0.0), mat1(1.0)) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-12));
}

TEST_CASE("log-density at the mean depends only on the normalizer") {
  for (int d : {1, 2, 3, 7}) {
    const Eigen::VectorXd mu = Eigen::VectorXd::Constant(d, 1.5);
    const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(d, d);
    CHECK(gaussian_logpdf(mu, mu, p) ==
          doctest::Approx(-0.5 * d * std::log(2.0 * M_PI)).epsilon(1e-12));
  }
}

TEST_CASE("scalar density two sigma out with variance four") {
  CHECK(gaussian_pdf(vec1(2.0), vec1(0.0), mat1(4.0)) ==
        doctest::Approx(0.12098536225957168).epsilon(1e-12));
}

TEST_CASE("non-positive-definite covariance reports dimension and pivot") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  try {
    (void)gaussian_logpdf(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), bad);
    FAIL("expected CholeskyFailure");
  } catch (const CholeskyFailure& e) {
    CHECK(e.dim() == 2);
    CHECK(e.pivot() == 1);
  }
}

// ---- Mixture density ------------------------------------------------------------

TEST_CASE("single-component mixture density equals the gaussian density") {
  const GaussianMixture gmm(comp1(1.0, 0.7, 2.3));
  for (double x : {-1.0, 0.0, 0.7, 3.1})
    CHECK(mixture_pdf(gmm, vec1(x)) ==
          doctest::Approx(gaussian_pdf(vec1(x), vec1(0.7), mat1(2.3))).epsilon(1e-14));
}

TEST_CASE("symmetric two-mode density at the midpoint") {
  const GaussianMixture gmm({comp1(0.5, -1.0, 1.0), comp1(0.5, 1.0, 1.0)});
  CHECK(mixture_pdf(gmm, vec1(0.0)) ==
        doctest::Approx(0.24197072451914337).epsilon(1e-12));
}

TEST_CASE("zero-weight component contributes nothing") {
  const GaussianMixture gmm({comp1(1.0, 0.0, 1.0), comp1(0.0, 50.0, 1.0)});
  CHECK(mixture_pdf(gmm, vec1(0.0)) ==
        doctest::Approx(gaussian_pdf(vec1(0.0), vec1(0.0), mat1(1.0))).epsilon(1e-14));
}

TEST_CASE("dimension mismatch is rejected") {
  const GaussianMixture gmm(comp1(1.0, 0.0, 1.0));
  CHECK_THROWS_AS((void)mixture_pdf(gmm, Eigen::VectorXd::Zero(2)), DimensionError);
}

TEST_CASE("scalar mixture density integrates to one") {
  RandomSource rng(41);
  for (int rep = 0; rep < 4; ++rep) {
    const GaussianMixture gmm = random_mixture(1, 2 + rep, rng, 2.0);
    double lo = 1e300, hi = -1e300;
    for (const auto& c : gmm.components()) {
      const double s = std::sqrt(c.cov()(0, 0));
      lo = std::min(lo, c.mean()(0) - 10.0 * s);
      hi = std::max(hi, c.mean()(0) + 10.0 * s);
    }
    const double mass = oracles::integrate_adaptive(
        [&](double x) { return mixture_pdf(gmm, vec1(x)); }, lo, hi, 1e-9);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  }
}

// ---- Construction invariants ------------------------------------------------------

TEST_CASE("weights are normalized on construction") {
  const GaussianMixture gmm({comp1(2.0, 0.0, 1.0), comp1(6.0, 1.0, 1.0)});
  CHECK(gmm.component(0).weight() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(gmm.component(1).weight() == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("degenerate weight mass is rejected instead of divided through") {
  CHECK_THROWS_AS(GaussianMixture({comp1(0.0, 0.0, 1.0), comp1(1e-13, 1.0, 1.0)}),
                  InvalidArgument);
}

TEST_CASE("empty component list is rejected") {
  CHECK_THROWS_AS(GaussianMixture(std::vector<GaussianComponent>{}), InvalidArgument);
}

TEST_CASE("negative weight is rejected") {
  CHECK_THROWS_AS(comp1(-0.1, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("mixed component dimensions are rejected") {
  const GaussianComponent a(0.5, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  const GaussianComponent b(0.5, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  CHECK_THROWS_AS(GaussianMixture({a, b}), DimensionError);
}

// ---- Sampling ---------------------------------------------------------------------

TEST_CASE("large-sample moments of a standard bivariate normal") {
  RandomSource rng(7);
  const GaussianMixture gmm(
      GaussianComponent(1.0, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)));
  const ParticleSet s = sample_mixture(gmm, 100000, rng);
  CHECK(s.mean().cwiseAbs().maxCoeff() < 0.02);
  CHECK((s.covariance() - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("zero-weight mode is never selected") {
  RandomSource rng(8);
  const GaussianMixture gmm({comp1(1.0, -100.0, 0.01), comp1(0.0, 100.0, 0.01)});
  const ParticleSet s = sample_mixture(gmm, 2000, rng);
  for (int i = 0; i < s.size(); ++i) CHECK(s.point(i)(0) < 0.0);
}

TEST_CASE("sampling is deterministic given the seed") {
  const GaussianMixture gmm({comp1(0.4, -1.0, 0.5), comp1(0.6, 2.0, 1.5)});
  RandomSource a(123), b(123);
  const ParticleSet sa = sample_mixture(gmm, 500, a);
  const ParticleSet sb = sample_mixture(gmm, 500, b);
  CHECK((sa.points() - sb.points()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample-mean error shrinks like the square root of the sample size") {
  const GaussianMixture gmm(comp1(1.0, 0.0, 1.0));
  auto mean_abs_error = [&](int n) {
    double total = 0.0;
    for (int seed = 0; seed < 30; ++seed) {
      RandomSource rng(1000 + seed);
      total += std::abs(sample_mixture(gmm, n, rng).mean()(0));
    }
    return total / 30.0;
  };
  const double e3 = mean_abs_error(1000);
  const double e4 = mean_abs_error(10000);
  const double e5 = mean_abs_error(100000);
  const double root10 = std::sqrt(10.0);
  CHECK(e3 / e4 > root10 / 2.0);
  CHECK(e3 / e4 < root10 * 2.0);
  CHECK(e4 / e5 > root10 / 2.0);
  CHECK(e4 / e5 < root10 * 2.0);
}

// ---- Mode similarity ----------------------------------------------------------------

TEST_CASE("identical modes have zero distance") {
  const GaussianComponent c = comp1(0.5, 1.3, 0.7);
  CHECK(similarity(c, c) <= 1e-12);
}

TEST_CASE("distance saturates at one for far-apart modes") {
  CHECK(similarity(comp1(0.5, 0.0, 1.0), comp1(0.5, 100.0, 1.0)) ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("hand-checked scalar mode distances") {
  // (mu_i, mu_j, P_i, P_j) -> D, frozen from hand evaluation of the closed form.
  CHECK(similarity(comp1(0.5, 0.0, 1.0), comp1(0.5, 2.0, 1.0)) ==
        doctest::Approx(0.6321205588285577).epsilon(1e-10));
  CHECK(similarity(comp1(0.5, 0.0, 1.0), comp1(0.5, 0.5, 2.0)) ==
        doctest::Approx(0.0824535163).epsilon(1e-7));
  CHECK(similarity(comp1(0.5, 1.0, 0.5), comp1(0.5, -1.0, 3.0)) ==
        doctest::Approx(0.5713049534).epsilon(1e-7));
}

TEST_CASE("mode distance is symmetric and within the unit interval") {
  RandomSource rng(55);
  for (int rep = 0; rep < 50; ++rep) {
    const GaussianMixture gmm = random_mixture(2, 2, rng, 2.0);
    const double d01 = similarity(gmm.component(0), gmm.component(1));
    const double d10 = similarity(gmm.component(1), gmm.component(0));
    CHECK(d01 == doctest::Approx(d10).epsilon(1e-12));
    CHECK(d01 >= 0.0);
    CHECK(d01 <= 1.0);
  }
}

TEST_CASE("closed-form mode distance matches its integral definition") {
  // D = integral (Ni - Nj)^2 / integral (Ni^2 + Nj^2): evaluate both integrals
  // by quadrature and compare against the closed form.
  RandomSource rng(77);
  for (int rep = 0; rep < 6; ++rep) {
    const double mi = 2.0 * rng.gaussian(), mj = 2.0 * rng.gaussian();
    const double pi = 0.3 + rng.uniform(), pj = 0.3 + rng.uniform();
    auto ni = [&](double x) { return gaussian_pdf(vec1(x), vec1(mi), mat1(pi)); };
    auto nj = [&](double x) { return gaussian_pdf(vec1(x), vec1(mj), mat1(pj)); };
    const double lo = std::min(mi, mj) - 12.0, hi = std::max(mi, mj) + 12.0;
    const double num = oracles::integrate_adaptive(
        [&](double x) { const double d = ni(x) - nj(x); return d * d; }, lo, hi, 1e-12);
    const double den = oracles::integrate_adaptive(
        [&](double x) { return ni(x) * ni(x) + nj(x) * nj(x); }, lo, hi, 1e-12);
    CHECK(similarity(comp1(0.5, mi, pi), comp1(0.5, mj, pj)) ==
          doctest::Approx(num / den).epsilon(1e-8));
  }
}

// ---- Merging -------------------------------------------------------------------------

TEST_CASE("merging a single mode returns it unchanged") {
  const GaussianMixture gmm({comp1(0.3, -1.0, 0.5), comp1(0.7, 2.0, 1.5)});
  const GaussianComponent merged = merge_components(gmm, {1});
  CHECK(merged.weight() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(merged.mean()(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(merged.cov()(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("merging symmetric unit modes doubles the spread") {
  const GaussianMixture gmm({comp1(0.5, -1.0, 1.0), comp1(0.5, 1.0, 1.0)});
  const GaussianComponent merged = merge_components(gmm, {0, 1});
  CHECK(merged.weight() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(merged.mean()(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(merged.cov()(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("merged moments equal the exact sub-mixture moments by quadrature") {
  RandomSource rng(91);
  for (int rep = 0; rep < 4; ++rep) {
    const GaussianMixture gmm = random_mixture(1, 3, rng, 1.5);
    const GaussianComponent merged = merge_components(gmm, {0, 1, 2});
    // Renormalized sub-mixture density (all three components, so the sub-
    // mixture is the whole mixture).
    auto pdf = [&](double x) { return mixture_pdf(gmm, vec1(x)); };
    double lo = 1e300, hi = -1e300;
    for (const auto& c : gmm.components()) {
      const double s = std::sqrt(c.cov()(0, 0));
      lo = std::min(lo, c.mean()(0) - 12.0 * s);
      hi = std::max(hi, c.mean()(0) + 12.0 * s);
    }
    const double mean =
        oracles::integrate_adaptive([&](double x) { return x * pdf(x); }, lo, hi, 1e-10);
    const double var = oracles::integrate_adaptive(
        [&](double x) { return (x - mean) * (x - mean) * pdf(x); }, lo, hi, 1e-10);
    CHECK(merged.mean()(0) == doctest::Approx(mean).epsilon(1e-6));
    CHECK(merged.cov()(0, 0) == doctest::Approx(var).epsilon(1e-6));
  }
}

TEST_CASE("empty merge index set is rejected") {
  const GaussianMixture gmm(comp1(1.0, 0.0, 1.0));
  CHECK_THROWS_AS((void)merge_components(gmm, {}), InvalidArgument);
}

TEST_CASE("duplicate and out-of-range merge indices are rejected") {
  const GaussianMixture gmm({comp1(0.5, 0.0, 1.0), comp1(0.5, 1.0, 1.0)});
  CHECK_THROWS_AS((void)merge_components(gmm, {0, 0}), InvalidArgument);
  CHECK_THROWS_AS((void)merge_components(gmm, {2}), InvalidArgument);
}

// ---- Merge pass -----------------------------------------------------------------------

TEST_CASE("well-separated modes pass through the merge untouched") {
  const GaussianMixture gmm({comp1(0.4, -10.0, 1.0), comp1(0.6, 10.0, 1.0)});
  const GaussianMixture out = merge_pass(gmm, 0.01);
  REQUIRE(out.size() == 2);
  CHECK(out.component(0).mean()(0) == doctest::Approx(-10.0).epsilon(1e-12));
  CHECK(out.component(1).mean()(0) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("identical modes collapse to one with the summed weight") {
  const GaussianMixture gmm({comp1(0.3, 1.0, 1.0), comp1(0.7, 1.0, 1.0)});
  const GaussianMixture out = merge_pass(gmm, 0.01);
  REQUIRE(out.size() == 1);
  CHECK(out.component(0).weight() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("chained closeness merges transitively") {
  // D for unit variances is 1 - exp(-delta^2/4): 0.19 apart is inside
  // tol=0.01, 0.38 apart is outside — the chain must still merge as one.
  const GaussianMixture gmm(
      {comp1(0.3, 0.0, 1.0), comp1(0.3, 0.19, 1.0), comp1(0.4, 0.38, 1.0)});
  CHECK(similarity(gmm.component(0), gmm.component(1)) < 0.01);
  CHECK(similarity(gmm.component(1), gmm.component(2)) < 0.01);
  CHECK(similarity(gmm.component(0), gmm.component(2)) >= 0.01);
  const GaussianMixture out = merge_pass(gmm, 0.01);
  CHECK(out.size() == 1);
}

TEST_CASE("merge pass preserves total moments and separates survivors") {
  RandomSource rng(2024);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 1 + rep % 3;
    const int m = 2 + rep % 5;
    const GaussianMixture gmm = random_mixture(d, m, rng, 0.6);
    const double tol = 0.01 + 0.29 * rng.uniform();
    const GaussianMixture out = merge_pass(gmm, tol);

    double wsum = 0.0;
    for (const auto& c : out.components()) wsum += c.weight();
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));

    const Eigen::VectorXd mean_in = gmm.mean(), mean_out = out.mean();
    const Eigen::MatrixXd cov_in = gmm.covariance(), cov_out = out.covariance();
    CHECK((mean_in - mean_out).norm() <= 1e-9 * std::max(1.0, mean_in.norm()));
    CHECK((cov_in - cov_out).norm() <= 1e-9 * std::max(1.0, cov_in.norm()));

    for (int i = 0; i < out.size(); ++i)
      for (int j = i + 1; j < out.size(); ++j)
        CHECK(similarity(out.component(i), out.component(j)) >= tol);
  }
}

// ---- Moment matching and serialization ---------------------------------------------------

TEST_CASE("moment matching equals merging all modes") {
  RandomSource rng(13);
  const GaussianMixture gmm = random_mixture(2, 3, rng, 1.0);
  const GaussianComponent mm = moment_match(gmm);
  CHECK((mm.mean() - gmm.mean()).norm() < 1e-12);
  CHECK((mm.cov() - gmm.covariance()).norm() < 1e-12);
}

TEST_CASE("json round trip preserves the mixture exactly") {
  RandomSource rng(17);
  const GaussianMixture gmm = random_mixture(3, 2, rng, 1.0);
  const GaussianMixture back = mixture_from_json(to_json(gmm));
  REQUIRE(back.dim() == gmm.dim());
  REQUIRE(back.size() == gmm.size());
  for (int i = 0; i < gmm.size(); ++i) {
    // Weights may be renormalized on reconstruction; means and covariances
    // survive the text round trip bit-exactly.
    CHECK(back.component(i).weight() ==
          doctest::Approx(gmm.component(i).weight()).epsilon(1e-14));
    CHECK((back.component(i).mean() - gmm.component(i).mean()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.component(i).cov() - gmm.component(i).cov()).cwiseAbs().maxCoeff() == 0.0);
  }
}

}  // TEST_SUITE
