#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "calib/calibration_point.hpp"
#include "calib/error.hpp"
#include "calib/isotonic.hpp"

namespace calib {

/// Solution path of the near-isotonic regression problem
///
///   minimize  1/2 sum_i w_i (y_i - b_i)^2  +  lambda sum_i (b_i - b_{i+1})_+
///
/// over the penalty weight lambda. The path is piecewise linear in lambda:
/// each group of pooled points moves at a constant slope until two adjacent
/// groups collide and merge, which defines the next knot. Groups only ever
/// merge, and the terminal fit is fully monotone (the PAVA solution).
struct NirPath {
    std::vector<double> knots;              // lambda values, increasing from 0
    std::vector<std::vector<double>> fits;  // per knot: value per merged point
    std::vector<std::size_t> group_counts;  // per knot: groups = model df
    MergedPoints points;                    // tie-merged training data
};

namespace detail {

struct NirState {
    // one entry per live group, left to right
    std::vector<double> mean;    // weighted mean of member targets
    std::vector<double> weight;  // summed member weight
    std::vector<std::size_t> last;  // inclusive end of member index range
    std::vector<double> value;   // current fitted value

    std::size_t groups() const { return value.size(); }

    /// dv/dlambda per group: (above - below)/W where above/below flag active
    /// violations with the neighbors.
    std::vector<double> slopes() const {
        std::vector<double> s(groups());
        for (std::size_t g = 0; g < groups(); ++g) {
            const bool above = g > 0 && value[g - 1] > value[g];
            const bool below = g + 1 < groups() && value[g] > value[g + 1];
            s[g] = ((above ? 1.0 : 0.0) - (below ? 1.0 : 0.0)) / weight[g];
        }
        return s;
    }

    void merge_into_left(std::size_t g) {
        const double w = weight[g] + weight[g + 1];
        mean[g] = (mean[g] * weight[g] + mean[g + 1] * weight[g + 1]) / w;
        weight[g] = w;
        last[g] = last[g + 1];
        value[g] = 0.5 * (value[g] + value[g + 1]);  // equal up to roundoff
        mean.erase(mean.begin() + g + 1);
        weight.erase(weight.begin() + g + 1);
        last.erase(last.begin() + g + 1);
        value.erase(value.begin() + g + 1);
    }

    /// Merges every adjacent pair whose values already coincide while their
    /// slopes strictly approach; such pairs have collision time zero and
    /// must move together from the current lambda on. Loops because merges
    /// can cascade.
    void settle_zero_collisions() {
        for (;;) {
            const auto s = slopes();
            bool merged = false;
            for (std::size_t g = 0; g + 1 < groups(); ++g) {
                const double tol =
                    1e-12 * std::max({1.0, std::fabs(value[g]),
                                      std::fabs(value[g + 1])});
                if (s[g] > s[g + 1] &&
                    std::fabs(value[g] - value[g + 1]) <= tol) {
                    merge_into_left(g);
                    merged = true;
                    break;
                }
            }
            if (!merged) return;
        }
    }

    bool has_violation() const {
        for (std::size_t g = 0; g + 1 < groups(); ++g)
            if (value[g] > value[g + 1]) return true;
        return false;
    }

    std::vector<double> expand(std::size_t n) const {
        std::vector<double> fit(n);
        std::size_t i = 0;
        for (std::size_t g = 0; g < groups(); ++g)
            for (; i <= last[g]; ++i) fit[i] = value[g];
        return fit;
    }
};

}  // namespace detail

/// Computes the full near-isotonic path by the modified pool-adjacent-
/// violators scheme. Tied scores are pooled before fitting.
inline NirPath nir_path(const std::vector<CalibrationPoint>& points) {
    if (points.size() < 2)
        throw Error("nir_path: need at least 2 calibration points");
    NirPath path;
    path.points = merge_tied_scores(points);
    const std::size_t n = path.points.size();

    detail::NirState st;
    st.mean = path.points.targets;
    st.weight = path.points.weights;
    st.value = path.points.targets;
    st.last.resize(n);
    for (std::size_t i = 0; i < n; ++i) st.last[i] = i;

    double lambda = 0.0;
    auto record = [&]() {
        path.knots.push_back(lambda);
        path.fits.push_back(st.expand(n));
        path.group_counts.push_back(st.groups());
    };

    st.settle_zero_collisions();
    record();

    while (st.has_violation()) {
        const auto s = st.slopes();
        // pair (g, g+1) collides after d = (v_{g+1} - v_g)/(s_g - s_{g+1});
        // it approaches exactly when that ratio is positive
        auto collision = [&](std::size_t g) {
            const double num = st.value[g + 1] - st.value[g];
            const double den = s[g] - s[g + 1];
            if (num == 0.0 || den == 0.0 || std::signbit(num) != std::signbit(den))
                return std::numeric_limits<double>::infinity();
            return num / den;
        };
        double step = std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g + 1 < st.groups(); ++g)
            step = std::min(step, collision(g));
        if (!std::isfinite(step) || step <= 0.0)
            throw Error("nir_path: stalled while violations remain");

        // advance to the collision, merge every pair that reached it, then
        // settle any cascade before recording the knot
        const double step_tol = step * (1.0 + 1e-12) + 1e-300;
        std::vector<bool> collide(st.groups(), false);
        for (std::size_t g = 0; g + 1 < st.groups(); ++g)
            if (collision(g) <= step_tol) collide[g] = true;
        for (std::size_t g = 0; g < st.groups(); ++g)
            st.value[g] += s[g] * step;
        lambda += step;
        for (std::size_t g = st.groups(); g-- > 0;)
            if (collide[g]) st.merge_into_left(g);
        st.settle_zero_collisions();
        record();
    }
    return path;
}

/// Isotonic projection of the merged data; the path's terminal fit equals
/// this (used as a cross-check and as the ENIR fallback member).
inline std::vector<double> pava_fit_values(const MergedPoints& m) {
    return detail::pava(m.targets, m.weights);
}

}  // namespace calib
