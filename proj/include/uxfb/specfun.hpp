#pragma once

#include <cstdint>

// Special functions behind the test statistics.

namespace uxfb::specfun {

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
/// Series for x < a + 1, Lentz continued fraction otherwise.
double gamma_q(double a, double x);
double gamma_p(double a, double x);

/// Upper tail of the chi-squared distribution with df degrees of freedom.
double chi_squared_sf(double statistic, int df);

/// Inverse standard normal CDF (Wichura's AS 241, ~1e-16 relative).
double normal_quantile(double p);

/// log P(X = k) for X ~ Binomial(n, p).
double binomial_log_pmf(std::int64_t k, std::int64_t n, double p);

/// P(X >= k) for X ~ Binomial(n, p), by exact summation of the pmf.
double binomial_upper_tail(std::int64_t k, std::int64_t n, double p);

}  // namespace uxfb::specfun
