#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "calib/error.hpp"

namespace calib {

/// One calibration observation: a classifier score, a target in [0,1]
/// (a 0/1 label or a DGG group fraction), and a positive weight.
struct CalibrationPoint {
    double score = 0.0;
    double target = 0.0;
    double weight = 1.0;
};

inline void validate_points(const std::vector<CalibrationPoint>& points) {
    for (const auto& p : points) {
        if (!std::isfinite(p.score))
            throw Error("calibration point has non-finite score");
        if (!(p.target >= 0.0 && p.target <= 1.0))
            throw Error("calibration point target out of [0,1]");
        if (!(p.weight > 0.0))
            throw Error("calibration point weight must be positive");
    }
}

/// Points with tied scores collapsed to one point per distinct score
/// (weighted mean target, summed weight), sorted ascending. Fits operate on
/// this representation so block structure is well defined.
struct MergedPoints {
    std::vector<double> scores;   // strictly increasing
    std::vector<double> targets;  // weighted mean per distinct score
    std::vector<double> weights;  // summed weight per distinct score
    /// Residual sum of squares lost in the merge: sum_j w_j (y_j - ybar)^2
    /// over tied groups. RSS against the original points is the RSS against
    /// the merged points plus this constant.
    double tie_rss = 0.0;
    /// Number of original points.
    std::size_t n_original = 0;

    std::size_t size() const { return scores.size(); }
};

inline MergedPoints merge_tied_scores(std::vector<CalibrationPoint> points) {
    validate_points(points);
    std::stable_sort(points.begin(), points.end(),
                     [](const CalibrationPoint& a, const CalibrationPoint& b) {
                         return a.score < b.score;
                     });
    MergedPoints m;
    m.n_original = points.size();
    std::size_t i = 0;
    while (i < points.size()) {
        std::size_t j = i;
        double w = 0.0, wy = 0.0;
        while (j < points.size() && points[j].score == points[i].score) {
            w += points[j].weight;
            wy += points[j].weight * points[j].target;
            ++j;
        }
        const double ybar = wy / w;
        for (std::size_t k = i; k < j; ++k) {
            const double d = points[k].target - ybar;
            m.tie_rss += points[k].weight * d * d;
        }
        m.scores.push_back(points[i].score);
        m.targets.push_back(ybar);
        m.weights.push_back(w);
        i = j;
    }
    return m;
}

/// Midpoints between adjacent distinct training scores; these are the step
/// boundaries every piecewise-constant calibrator uses for prediction.
inline std::vector<double> step_boundaries(const std::vector<double>& scores) {
    std::vector<double> b;
    b.reserve(scores.size() > 0 ? scores.size() - 1 : 0);
    for (std::size_t i = 0; i + 1 < scores.size(); ++i)
        b.push_back(0.5 * (scores[i] + scores[i + 1]));
    return b;
}

/// Index of the step segment containing `score` (clamps outside the range).
inline std::size_t step_segment(const std::vector<double>& boundaries,
                                double score) {
    return static_cast<std::size_t>(
        std::upper_bound(boundaries.begin(), boundaries.end(), score) -
        boundaries.begin());
}

inline void write_points_csv(const std::vector<CalibrationPoint>& points,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "score,target,weight\n";
    out.precision(17);
    for (const auto& p : points)
        out << p.score << ',' << p.target << ',' << p.weight << '\n';
    if (!out) throw DataError("write failed: " + path);
}

inline std::vector<CalibrationPoint> load_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    std::vector<CalibrationPoint> points;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        CalibrationPoint p;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &p.score, &p.target,
                        &p.weight) != 3)
            throw DataError("bad calibration point line: " + line);
        points.push_back(p);
    }
    validate_points(points);
    return points;
}

}  // namespace calib
