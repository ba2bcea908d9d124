#include "pgm/chi2.hpp"

#include <cmath>
#include <limits>

#include "pgm/errors.hpp"

namespace pgm {
namespace metrics {

namespace {

/// γ(a,x)/Γ(a) by its power series; converges fast for x < a+1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/// Q(a,x) = Γ(a,x)/Γ(a) by modified Lentz continued fraction; for x ≥ a+1.
double gamma_q_continued_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw InvalidArgument("regularized_gamma_p: a must be positive");
  if (x < 0.0) throw InvalidArgument("regularized_gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  return (x < a + 1.0) ? gamma_p_series(a, x) : 1.0 - gamma_q_continued_fraction(a, x);
}

double chi2_cdf(double df, double x) {
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * df, 0.5 * x);
}

double chi2_quantile(double df, double p) {
  if (!(df > 0.0)) throw InvalidArgument("chi2_quantile: df must be positive");
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("chi2_quantile: p must lie in (0,1)");

  // Bracket: the mean is df and the upper tail thins quickly, so doubling
  // from max(df, 1) finds a cover within a few steps.
  double hi = std::max(df, 1.0);
  while (chi2_cdf(df, hi) < p) hi *= 2.0;
  double lo = 0.0;

  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(df, mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace metrics
}  // namespace pgm
