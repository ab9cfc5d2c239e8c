#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "calib/error.hpp"

namespace calib {

enum class TTestVariant { welch_unpaired, paired };

struct TTestResult {
    double t_statistic = 0.0;
    double degrees_of_freedom = 1.0;
    double p_value = 1.0;
    TTestVariant variant = TTestVariant::welch_unpaired;
    /// Set when the inputs make the statistic undefined (constant nonzero
    /// differences in the paired test, or two distinct constant samples);
    /// t is then +-inf and p is 0 by convention.
    bool degenerate = false;
};

namespace detail {

/// Continued-fraction evaluation of the regularized incomplete beta
/// (modified Lentz), good to ~1e-15 relative for the arguments used here.
inline double betacf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 3e-16;
    constexpr double fpmin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw Error("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(x >= 0.0 && x <= 1.0))
        throw Error("regularized_incomplete_beta: x out of [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                            std::lgamma(b) + a * std::log(x) +
                            b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::betacf(a, b, x) / a;
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

/// CDF of Student's t with (possibly fractional) df degrees of freedom.
inline double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw Error("student_t_cdf: df must be positive");
    if (t == 0.0) return 0.5;
    const double x = df / (df + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

/// Two-sided p-value for a t statistic: 2 * (1 - F(|t|)), evaluated directly
/// through the incomplete beta for accuracy in the far tail.
inline double two_sided_t_p_value(double t, double df) {
    if (!(df > 0.0)) throw Error("two_sided_t_p_value: df must be positive");
    if (std::isinf(t)) return 0.0;
    const double x = df / (df + t * t);
    return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

namespace detail {
inline void sample_moments(const std::vector<double>& v, double& mean,
                           double& var) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size() - 1);
}
}  // namespace detail

/// Two-sample t-test without the equal-variance assumption; degrees of
/// freedom from the Welch-Satterthwaite approximation.
inline TTestResult welch_t_test(const std::vector<double>& a,
                                const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw Error("welch_t_test: each sample needs at least 2 values");
    TTestResult res;
    res.variant = TTestVariant::welch_unpaired;
    double ma, va, mb, vb;
    detail::sample_moments(a, ma, va);
    detail::sample_moments(b, mb, vb);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;
    if (se2 <= 0.0) {
        // two constant samples
        if (ma == mb) {
            res.t_statistic = 0.0;
            res.degrees_of_freedom = na + nb - 2.0;
            res.p_value = 1.0;
        } else {
            res.t_statistic = ma > mb ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
            res.degrees_of_freedom = na + nb - 2.0;
            res.p_value = 0.0;
            res.degenerate = true;
        }
        return res;
    }
    res.t_statistic = (ma - mb) / std::sqrt(se2);
    res.degrees_of_freedom =
        se2 * se2 /
        (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
    res.p_value = two_sided_t_p_value(res.t_statistic, res.degrees_of_freedom);
    return res;
}

/// One-sample t-test on paired differences, df = n - 1.
inline TTestResult paired_t_test(const std::vector<double>& a,
                                 const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error("paired_t_test: length mismatch");
    if (a.size() < 2)
        throw Error("paired_t_test: need at least 2 pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    double md, vd;
    detail::sample_moments(d, md, vd);
    TTestResult res;
    res.variant = TTestVariant::paired;
    res.degrees_of_freedom = static_cast<double>(a.size() - 1);
    // constant differences make the statistic undefined; the relative bound
    // absorbs the roundoff left behind by a constant shift of finite doubles
    const bool constant_diffs =
        vd <= 0.0 || (md != 0.0 && vd <= 1e-24 * md * md);
    if (constant_diffs) {
        if (md == 0.0) {
            res.t_statistic = 0.0;
            res.p_value = 1.0;
        } else {
            res.t_statistic = md > 0.0 ? std::numeric_limits<double>::infinity()
                                       : -std::numeric_limits<double>::infinity();
            res.p_value = 0.0;
            res.degenerate = true;
        }
        return res;
    }
    res.t_statistic = md / std::sqrt(vd / static_cast<double>(a.size()));
    res.p_value = two_sided_t_p_value(res.t_statistic, res.degrees_of_freedom);
    return res;
}

}  // namespace calib
