#pragma once

#include <cstddef>

namespace rnne::stats {

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
double incomplete_beta(double a, double b, double x);

/// Student-t cumulative distribution with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

/// Upper-tail quantile: the t with P(T > t) = p. Solved by bisection on the
/// CDF to an absolute tolerance of 1e-10.
double student_t_upper_quantile(double p, double dof);

/// Critical value of the Grubbs statistic for a sample of size m at
/// significance alpha, using the t quantile at alpha / (2m) with m - 2
/// degrees of freedom. Requires m >= 3.
double grubbs_critical(std::size_t m, double alpha);

}  // namespace rnne::stats
