#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "calib/calibration_point.hpp"
#include "calib/error.hpp"
#include "calib/near_isotonic.hpp"

namespace calib {

/// BIC-weighted ensemble of the near-isotonic path members. Every member is
/// a step function over the same training-score boundaries; the ensemble
/// prediction is the weight-blended member value of the matching segment.
struct EnirModel {
    struct Member {
        std::vector<double> values;  // fitted value per distinct training score
        double lambda = 0.0;
        std::size_t df = 0;  // group count of the path member
        double bic = 0.0;
        double weight = 0.0;
    };

    std::vector<double> boundaries;  // midpoints between distinct scores
    std::vector<Member> members;
    std::vector<double> blended;  // cached sum of weight * member values

    double predict(double score) const {
        return blended[step_segment(boundaries, score)];
    }
};

inline constexpr double kEnirRssFloor = 1e-12;

/// Fits the near-isotonic path and combines its members with BIC scores:
/// BIC = n ln(RSS/n) + df ln(n), weights proportional to exp(-dBIC/2).
/// n counts the original calibration points and RSS is measured against
/// them, so pooled tied scores contribute their within-tie scatter. The
/// saturated lambda=0 member is dropped when it interpolates the data
/// (RSS below 1e-12, BIC degenerate); if nothing remains, the ensemble
/// falls back to the single isotonic (PAVA) fit with weight 1.
inline EnirModel enir_fit(const std::vector<CalibrationPoint>& points) {
    if (points.size() < 2)
        throw Error("enir_fit: need at least 2 calibration points");
    const NirPath path = nir_path(points);
    const MergedPoints& m = path.points;
    const double n = static_cast<double>(m.n_original);

    EnirModel model;
    model.boundaries = step_boundaries(m.scores);

    auto rss_of = [&](const std::vector<double>& fit) {
        double rss = m.tie_rss;
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double d = m.targets[i] - fit[i];
            rss += m.weights[i] * d * d;
        }
        return rss;
    };

    for (std::size_t k = 0; k < path.knots.size(); ++k) {
        const double rss = rss_of(path.fits[k]);
        if (k == 0 && rss < kEnirRssFloor) continue;  // saturated interpolant
        EnirModel::Member mem;
        mem.values = path.fits[k];
        mem.lambda = path.knots[k];
        mem.df = path.group_counts[k];
        mem.bic = n * std::log(std::max(rss, kEnirRssFloor) / n) +
                  static_cast<double>(mem.df) * std::log(n);
        model.members.push_back(std::move(mem));
    }

    if (model.members.empty()) {
        EnirModel::Member mem;
        mem.values = pava_fit_values(m);
        mem.lambda = path.knots.back();
        mem.df = path.group_counts.back();
        mem.bic = 0.0;
        mem.weight = 1.0;
        model.members.push_back(std::move(mem));
    } else {
        double best = model.members.front().bic;
        for (const auto& mem : model.members) best = std::min(best, mem.bic);
        double total = 0.0;
        for (auto& mem : model.members) {
            mem.weight = std::exp(-0.5 * (mem.bic - best));
            total += mem.weight;
        }
        for (auto& mem : model.members) mem.weight /= total;
    }

    // fits live in the convex hull of the targets; clamp away the ulp-level
    // drift so predictions are valid probabilities
    for (auto& mem : model.members)
        for (double& v : mem.values) v = std::clamp(v, 0.0, 1.0);
    model.blended.assign(m.size(), 0.0);
    for (const auto& mem : model.members)
        for (std::size_t i = 0; i < m.size(); ++i)
            model.blended[i] += mem.weight * mem.values[i];
    for (double& v : model.blended) v = std::clamp(v, 0.0, 1.0);
    return model;
}

}  // namespace calib
