#include "rnne/stats.hpp"

#include "rnne/error.hpp"

#include <cmath>
#include <limits>

namespace rnne::stats {

namespace {

// Continued fraction for I_x(a, b), modified Lentz's method.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int max_iter = 500;
    constexpr double eps = 1e-16;
    constexpr double tiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("incomplete_beta: x must lie in [0, 1]");
    if (x == 0.0 || x == 1.0) return x;

    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    // The continued fraction converges fastest below the mean; use symmetry above it.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
    if (!(dof > 0.0)) throw ValidationError("student_t_cdf: degrees of freedom must be positive");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double x = dof / (dof + t * t);
    const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_upper_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("student_t_upper_quantile: p must lie in (0, 1)");
    const double target = 1.0 - p;

    double lo = -1.0;
    double hi = 1.0;
    while (student_t_cdf(lo, dof) > target) lo *= 2.0;
    while (student_t_cdf(hi, dof) < target) hi *= 2.0;

    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, dof) < target)
            lo = mid;
        else
            hi = mid;
        if (mid == lo && mid == hi) break;
    }
    return 0.5 * (lo + hi);
}

double grubbs_critical(std::size_t m, double alpha) {
    if (m < 3) throw ValidationError("grubbs_critical: needs at least 3 samples");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("grubbs_critical: alpha must lie in (0, 1)");
    const double n = static_cast<double>(m);
    const double t = student_t_upper_quantile(alpha / (2.0 * n), n - 2.0);
    const double t2 = t * t;
    return (n - 1.0) / std::sqrt(n) * std::sqrt(t2 / (n - 2.0 + t2));
}

}  // namespace rnne::stats
