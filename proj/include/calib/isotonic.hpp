#pragma once

#include <vector>

#include "calib/calibration_point.hpp"
#include "calib/error.hpp"

namespace calib {

/// Weighted least-squares monotone (non-decreasing) step fit. Blocks are
/// runs of pooled points; upper_boundaries[i] is the midpoint between the
/// last score of block i and the first score of block i+1.
struct IsotonicModel {
    std::vector<double> upper_boundaries;  // size = blocks - 1, increasing
    std::vector<double> block_values;      // non-decreasing

    double predict(double score) const {
        return block_values[step_segment(upper_boundaries, score)];
    }
};

namespace detail {

/// Pool-adjacent-violators on pre-merged, score-sorted data. Merges only
/// strict violations, so runs of equal values keep their own blocks (this
/// matches the terminal grouping of the near-isotonic path). Returns the
/// fitted value per input position.
inline std::vector<double> pava(const std::vector<double>& targets,
                                const std::vector<double>& weights) {
    const std::size_t n = targets.size();
    std::vector<double> value(n), weight(n);
    std::vector<std::size_t> size(n);
    std::size_t blocks = 0;
    for (std::size_t i = 0; i < n; ++i) {
        value[blocks] = targets[i];
        weight[blocks] = weights[i];
        size[blocks] = 1;
        ++blocks;
        while (blocks >= 2 && value[blocks - 2] > value[blocks - 1]) {
            const double w = weight[blocks - 2] + weight[blocks - 1];
            value[blocks - 2] +=
                (value[blocks - 1] - value[blocks - 2]) * weight[blocks - 1] / w;
            weight[blocks - 2] = w;
            size[blocks - 2] += size[blocks - 1];
            --blocks;
        }
    }
    std::vector<double> fit;
    fit.reserve(n);
    for (std::size_t b = 0; b < blocks; ++b)
        fit.insert(fit.end(), size[b], value[b]);
    return fit;
}

}  // namespace detail

/// Isotonic regression of target on score: the unique weighted projection
/// onto the monotone cone. Tied scores are pooled first.
inline IsotonicModel pava_fit(const std::vector<CalibrationPoint>& points) {
    if (points.size() < 2)
        throw Error("pava_fit: need at least 2 calibration points");
    const MergedPoints m = merge_tied_scores(points);
    const std::vector<double> fit = detail::pava(m.targets, m.weights);

    IsotonicModel model;
    for (std::size_t i = 0; i < fit.size(); ++i) {
        if (i + 1 < fit.size() && fit[i + 1] == fit[i]) continue;  // same block
        model.block_values.push_back(fit[i]);
        if (i + 1 < fit.size())
            model.upper_boundaries.push_back(0.5 * (m.scores[i] + m.scores[i + 1]));
    }
    return model;
}

}  // namespace calib
