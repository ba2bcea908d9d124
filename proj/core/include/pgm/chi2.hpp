#pragma once

namespace pgm {
namespace metrics {

/// Regularized lower incomplete gamma P(a, x) = γ(a,x)/Γ(a), a > 0, x ≥ 0.
/// Series expansion for x < a+1, Lentz continued fraction otherwise —
/// accurate to ~1e-14 across the χ² range used here.
[[nodiscard]] double regularized_gamma_p(double a, double x);

/// χ² CDF with (possibly non-integer) df degrees of freedom.
[[nodiscard]] double chi2_cdf(double df, double x);

/// χ² quantile via monotone bisection on the CDF (the CDF is cheap, so ~200
/// halvings beat a guarded Newton for robustness at df up to thousands).
[[nodiscard]] double chi2_quantile(double df, double p);

}  // namespace metrics
}  // namespace pgm
