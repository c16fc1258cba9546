// Scalar numerics shared across the library: stable normal log-CDF,
// Mills ratio, adaptive quadrature, and distribution tail probabilities.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace sfa {

inline constexpr double kLogTwoPi = 1.8378770664093454836;
inline constexpr double kSqrtTwoOverPi = 0.79788456080286535588;

inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x - 0.5 * kLogTwoPi);
}

inline double log_norm_pdf(double x) {
    return -0.5 * x * x - 0.5 * kLogTwoPi;
}

// log Phi(x), accurate for arguments down to at least -1e8.
// erfc carries us to about -30; past that an asymptotic expansion of the
// Mills ratio takes over (naive log(Phi) underflows near -37).
inline double log_norm_cdf(double x) {
    if (x > -30.0) {
        return std::log(0.5 * std::erfc(-x * (1.0 / std::numbers::sqrt2)));
    }
    const double x2 = x * x;
    // Phi(x) = phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - ...)
    double series = -1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2) +
                    105.0 / (x2 * x2 * x2 * x2);
    return -0.5 * x2 - 0.5 * kLogTwoPi - std::log(-x) + std::log1p(series);
}

// phi(x) / Phi(x), stable for large negative x (tends to -x).
inline double inverse_mills(double x) {
    return std::exp(log_norm_pdf(x) - log_norm_cdf(x));
}

inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * (1.0 / std::numbers::sqrt2));
}

inline double normal_pvalue_two_sided(double z) {
    return 2.0 * norm_cdf(-std::fabs(z));
}

inline double student_t_pvalue_two_sided(double t, double df) {
    if (!(df > 0)) throw std::invalid_argument("t test requires df > 0");
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(dist, -std::fabs(t));
}

inline double student_t_critical(double level_two_sided, double df) {
    boost::math::students_t dist(df);
    return boost::math::quantile(dist, 1.0 - level_two_sided / 2.0);
}

inline double f_pvalue_upper(double f, double df1, double df2) {
    if (!(df1 > 0) || !(df2 > 0)) throw std::invalid_argument("F test requires positive df");
    if (f <= 0.0) return 1.0;
    boost::math::fisher_f dist(df1, df2);
    return boost::math::cdf(boost::math::complement(dist, f));
}

namespace detail {

struct SimpsonCell {
    double a, b, fa, fm, fb, whole;
};

inline double simpson(double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(fa, flm, fm, m - a);
    const double right = simpson(fm, frm, fb, b - m);
    const double delta = left + right - whole;
    if (depth <= 0) throw std::runtime_error("adaptive quadrature: recursion limit reached");
    if (std::fabs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive Simpson quadrature on [a, b] with absolute tolerance.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth = 60) {
    if (!(b > a)) return 0.0;
    const double fa = f(a);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = detail::simpson(fa, fm, fb, b - a);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

// Order-independent sum (pairwise) so parallel partial sums stay reproducible.
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    const std::size_t n = hi - lo;
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v, 0, v.size());
}

} // namespace sfa
