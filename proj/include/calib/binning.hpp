#pragma once

#include <algorithm>
#include <vector>

#include "calib/calibration_point.hpp"
#include "calib/error.hpp"

namespace calib {

/// Equal-frequency histogram binning: sorted scores are cut into bins of
/// (as close as possible) equal occupancy and each bin maps to its weighted
/// mean target.
struct BinningModel {
    std::vector<double> edges;   // size = bins - 1, increasing score cuts
    std::vector<double> values;  // weighted mean target per bin

    double predict(double score) const {
        return values[step_segment(edges, score)];
    }
};

/// Builds n_bins equal-frequency bins over the sorted points. When the count
/// does not divide evenly the remainder is spread one extra point per bin
/// starting from the lowest bin.
inline BinningModel binning_fit(const std::vector<CalibrationPoint>& points,
                                std::size_t n_bins) {
    validate_points(points);
    if (n_bins < 1) throw Error("binning_fit: need at least one bin");
    if (points.size() < n_bins)
        throw Error("binning_fit: fewer points than bins");

    std::vector<CalibrationPoint> sorted = points;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const CalibrationPoint& a, const CalibrationPoint& b) {
                         return a.score < b.score;
                     });

    const std::size_t base = sorted.size() / n_bins;
    const std::size_t extra = sorted.size() % n_bins;
    BinningModel model;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        const std::size_t count = base + (b < extra ? 1 : 0);
        double w = 0.0, wy = 0.0;
        for (std::size_t i = 0; i < count; ++i, ++pos) {
            w += sorted[pos].weight;
            wy += sorted[pos].weight * sorted[pos].target;
        }
        model.values.push_back(wy / w);
        if (b + 1 < n_bins)
            model.edges.push_back(
                0.5 * (sorted[pos - 1].score + sorted[pos].score));
    }
    return model;
}

}  // namespace calib
