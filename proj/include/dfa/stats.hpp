#pragma once

// Scalar distribution functions used throughout the library: standard normal
// CDF/quantile (including log-space variants that stay accurate deep in the
// tails), log-gamma helpers, harmonic numbers, and the regularized incomplete
// gamma functions backing chi-square tail probabilities.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dfa {

inline constexpr double kSqrt2 = 1.4142135623730950488016887242097;
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// standard normal pdf
inline double norm_pdf(double x) { return std::exp(-0.5 * x * x - 0.5 * kLog2Pi); }

inline double log_norm_pdf(double x) { return -0.5 * x * x - 0.5 * kLog2Pi; }

// Phi(x) via erfc; accurate to a few ulp over the full double range.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// log Phi(x). For x >= -36 erfc does not underflow and the direct form is
// exact enough; further out we switch to the Mills-ratio asymptotic series,
// which converges rapidly there.
inline double log_norm_cdf(double x) {
    if (x >= -36.0) {
        double p = norm_cdf(x);
        if (p > 1e-12) {
            if (x > 6.0) return std::log1p(-norm_cdf(-x));
            return std::log(p);
        }
        return std::log(0.5) + std::log(std::erfc(-x / kSqrt2));
    }
    const double t = -x;  // t > 36
    const double t2 = t * t;
    // Phi(-t) = phi(t)/t * (1 - 1/t^2 + 3/t^4 - 15/t^6 + 105/t^8 - ...)
    double series = 1.0, term = 1.0;
    for (int j = 1; j <= 7; ++j) {
        term *= -(2.0 * j - 1.0) / t2;
        series += term;
    }
    return log_norm_pdf(t) - std::log(t) + std::log(series);
}

namespace detail {

// Acklam's rational approximation to the normal quantile, parameterized by
// log(p) in the lower tail so that p values below DBL_MIN remain usable.
inline double norm_ppf_lower_tail_from_log(double lp) {
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double q = std::sqrt(-2.0 * lp);
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

inline double norm_ppf_central(double p) {
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

// Inverse of log_norm_cdf. Accepts any lp <= 0 (lp = log of a probability).
inline double norm_ppf_from_log(double lp) {
    if (!(lp <= 0.0)) throw std::domain_error("norm_ppf_from_log: log-probability must be <= 0");
    if (lp == 0.0) return kInf;
    if (lp == -kInf) return -kInf;
    double x;
    const double p = std::exp(lp);
    if (p > 0.02425 && p < 0.97575) {
        x = detail::norm_ppf_central(p);
    } else if (p >= 0.97575) {
        // upper tail: reflect
        return -norm_ppf_from_log(std::log1p(-p));
    } else {
        x = detail::norm_ppf_lower_tail_from_log(lp);
    }
    // Newton polish on f(x) = log Phi(x) - lp; f'(x) = phi/Phi.
    for (int it = 0; it < 3; ++it) {
        const double f = log_norm_cdf(x) - lp;
        const double dlog = log_norm_pdf(x) - log_norm_cdf(x);
        x -= f * std::exp(-dlog);
    }
    return x;
}

// Inverse normal CDF.
inline double norm_ppf(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("norm_ppf: p outside [0,1]");
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    if (p > 0.5) return -norm_ppf_from_log(std::log1p(-p));
    return norm_ppf_from_log(std::log(p));
}

// H_m = sum_{u=1}^m 1/u
inline double harmonic_number(long m) {
    double h = 0.0;
    for (long u = 1; u <= m; ++u) h += 1.0 / static_cast<double>(u);
    return h;
}

// log Gamma with the sign dropped; thin wrapper so call sites read uniformly.
inline double log_gamma(double x) { return std::lgamma(x); }

namespace detail {

inline double gamma_p_series(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_contfrac(a, x);
}

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_contfrac(a, x);
}

// Upper tail of the chi-square distribution with df degrees of freedom.
inline double chi2_sf(double stat, double df) { return gamma_q(0.5 * df, 0.5 * stat); }

}  // namespace dfa
