#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "calib/calibration_point.hpp"
#include "calib/classifier.hpp"
#include "calib/dataset.hpp"
#include "calib/error.hpp"
#include "calib/parallel.hpp"

namespace calib {

/// Monte Carlo cross-validation data generation: how many (score, label)
/// pairs to produce and how much of the training set each iteration holds
/// out for scoring.
struct DgConfig {
    std::size_t n_points = 2000;
    double holdout_fraction = 0.1;
    std::uint64_t seed = 0;
    ClassifierSpec classifier;
};

struct DggConfig {
    std::size_t group_size = 20;
};

/// Generates calibration points by repeated stratified holdout: fit the
/// classifier on the large part, score the holdout, emit one (score, label,
/// weight 1) pair per holdout row. Iterations are independent (per-iteration
/// seed streams) and the output is truncated to exactly n_points, ordered by
/// iteration then holdout row.
inline std::vector<CalibrationPoint> dg_generate(const Dataset& train,
                                                 const DgConfig& cfg) {
    if (cfg.n_points < 1) throw ConfigError("dg_generate: n_points must be >= 1");
    if (!(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0))
        throw ConfigError("dg_generate: holdout_fraction must be in (0, 1)");

    const std::size_t per_iter = static_cast<std::size_t>(std::floor(
        cfg.holdout_fraction * static_cast<double>(train.n_samples())));
    if (per_iter == 0)
        throw DataError("dg_generate: holdout would be empty");
    const std::size_t iterations =
        (cfg.n_points + per_iter - 1) / per_iter;

    std::vector<std::vector<CalibrationPoint>> chunks(iterations);
    parallel_for(iterations, [&](std::size_t it) {
        const std::uint64_t it_seed =
            derive_seed(cfg.seed, hash_tag("dg-iter"), static_cast<std::uint64_t>(it));
        Dataset model_part, holdout;
        try {
            std::tie(model_part, holdout) =
                split_calibration(train, cfg.holdout_fraction, it_seed);
        } catch (const Error& e) {
            throw Error("dg_generate: iteration " + std::to_string(it) + ": " +
                        e.what());
        }
        ClassifierSpec spec = cfg.classifier;
        spec.seed = derive_seed(it_seed, hash_tag("dg-fit"));
        TrainedClassifier clf;
        try {
            clf = fit_classifier(model_part, spec).first;
        } catch (const Error& e) {
            throw Error("dg_generate: classifier fit failed at iteration " +
                        std::to_string(it) + ": " + e.what());
        }
        auto& out = chunks[it];
        out.reserve(holdout.n_samples());
        for (std::size_t i = 0; i < holdout.n_samples(); ++i)
            out.push_back({predict_score(clf, holdout.row(i)),
                           static_cast<double>(holdout.labels()[i]), 1.0});
    });

    std::vector<CalibrationPoint> points;
    points.reserve(cfg.n_points);
    for (const auto& chunk : chunks)
        for (const auto& p : chunk) {
            if (points.size() == cfg.n_points) break;
            points.push_back(p);
        }
    return points;
}

/// Groups score-sorted points into consecutive runs of group_size and emits
/// one point per group: (mean score, positive fraction, weight = group
/// cardinality). A final remainder shorter than half a group merges into the
/// previous group, otherwise it stands alone. The positive-fraction target
/// is what smooths DGG's labels implicitly.
inline std::vector<CalibrationPoint> dgg_group(
    std::vector<CalibrationPoint> points, const DggConfig& cfg) {
    validate_points(points);
    if (cfg.group_size < 1) throw ConfigError("dgg_group: group_size must be >= 1");
    if (points.size() < cfg.group_size)
        throw DataError("dgg_group: fewer points (" +
                        std::to_string(points.size()) + ") than group_size (" +
                        std::to_string(cfg.group_size) + ")");

    std::stable_sort(points.begin(), points.end(),
                     [](const CalibrationPoint& a, const CalibrationPoint& b) {
                         return a.score < b.score;
                     });

    const std::size_t g = cfg.group_size;
    std::size_t n_groups = points.size() / g;
    const std::size_t remainder = points.size() % g;
    const bool own_group = remainder * 2 >= g && remainder > 0;
    if (own_group) ++n_groups;

    std::vector<CalibrationPoint> grouped;
    grouped.reserve(n_groups);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < n_groups; ++k) {
        std::size_t count = (k == n_groups - 1) ? points.size() - pos : g;
        double score_sum = 0.0, w = 0.0, wy = 0.0;
        for (std::size_t i = 0; i < count; ++i, ++pos) {
            score_sum += points[pos].score;
            w += points[pos].weight;
            wy += points[pos].weight * points[pos].target;
        }
        grouped.push_back({score_sum / static_cast<double>(count), wy / w, w});
    }
    return grouped;
}

}  // namespace calib
