#pragma once
// Student's t quantiles via the regularized incomplete beta function.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "errors.hpp"

namespace elf::stats {

namespace detail {

// Continued fraction for I_x(a, b) (modified Lentz), valid for x < (a+1)/(a+b+2).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int max_iter = 10000;
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
    throw NumericError("incomplete beta continued fraction did not converge");
}

inline double log_beta_prefactor(double a, double b, double x) {
    return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("incomplete_beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front = std::exp(detail::log_beta_prefactor(a, b, x));
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Upper tail Pr(T > t) for t >= 0, computed without cancellation.
inline double student_t_upper_tail(double t, double dof) {
    if (!(dof > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
    if (t < 0.0) return 1.0 - student_t_upper_tail(-t, dof);
    const double x = dof / (dof + t * t);
    // Direct route when x is small; complementary route keeps precision near t = 0.
    if (x < (dof / 2.0 + 1.0) / (dof / 2.0 + 2.5)) {
        return 0.5 * incomplete_beta(dof / 2.0, 0.5, x);
    }
    const double y = t * t / (dof + t * t);
    return 0.5 - 0.5 * incomplete_beta(0.5, dof / 2.0, y);
}

inline double student_t_pdf(double t, double dof) {
    const double log_norm = std::lgamma((dof + 1.0) / 2.0) - std::lgamma(dof / 2.0) - 0.5 * std::log(dof * M_PI);
    return std::exp(log_norm - (dof + 1.0) / 2.0 * std::log1p(t * t / dof));
}

/// The p-quantile of Student's t with `dof` degrees of freedom.
/// Newton iteration on the upper tail, safeguarded by a bracket.
inline double student_t_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile probability must lie in (0, 1)");
    if (!(dof > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -student_t_quantile(1.0 - p, dof);

    const double tail = 1.0 - p;
    if (dof == 1.0) return std::tan(M_PI * (p - 0.5));
    if (dof == 2.0) return (2.0 * p - 1.0) / std::sqrt(2.0 * p * (1.0 - p));

    // Bracket [lo, hi] with tail(lo) >= target >= tail(hi).
    double lo = 0.0;
    double hi = 1.0;
    while (student_t_upper_tail(hi, dof) > tail) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw NumericError("t quantile bracket overflow");
    }
    double t = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = student_t_upper_tail(t, dof) - tail;
        if (f > 0.0) lo = t; else hi = t;
        double next = t + f / student_t_pdf(t, dof);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - t) <= 1e-15 * std::max(1.0, std::fabs(t))) return next;
        t = next;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) return t;
    }
    return t;
}

}  // namespace elf::stats
