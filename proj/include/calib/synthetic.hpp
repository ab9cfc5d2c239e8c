#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "calib/dataset.hpp"
#include "calib/error.hpp"
#include "calib/rng.hpp"

namespace calib {

/// Ground truth for the synthetic two-Gaussian problem: the generating
/// distributions, the raw 2-D coordinates, and the exact posterior of the
/// positive class at every sample.
struct SyntheticTruth {
    std::array<double, 2> positive_mean{};
    std::array<double, 2> negative_mean{};
    double covariance_scale = 1.0;  // shared covariance = scale^2 * I
    std::vector<std::array<double, 2>> raw_points;
    std::vector<double> true_probs;
};

namespace detail {
inline double log_gauss2(const std::array<double, 2>& x,
                         const std::array<double, 2>& mu, double sigma) {
    const double dx = (x[0] - mu[0]) / sigma;
    const double dy = (x[1] - mu[1]) / sigma;
    return -0.5 * (dx * dx + dy * dy) - std::log(2.0 * 3.141592653589793238462643383279502884 * sigma * sigma);
}
}  // namespace detail

/// Samples n_per_class points from each of two unit-covariance Gaussians
/// (positive at the origin, negative at (1.5, 1.5)) and returns a dataset of
/// engineered derivative features [x1+x2, x1-x2, x1*x2, x1^2, x2^2]; the raw
/// coordinates go only into the truth record. True posteriors are the
/// density ratio f+/(f+ + f-), exact because priors are equal.
inline std::pair<Dataset, SyntheticTruth> make_synthetic(std::size_t n_per_class,
                                                         std::uint64_t seed) {
    if (n_per_class < 2)
        throw ConfigError("make_synthetic: n_per_class must be >= 2");

    SyntheticTruth truth;
    truth.positive_mean = {0.0, 0.0};
    truth.negative_mean = {1.5, 1.5};
    truth.covariance_scale = 1.0;

    const std::size_t n = 2 * n_per_class;
    std::vector<std::array<double, 2>> pts(n);
    std::vector<int> labels(n);
    Rng rng(derive_seed(seed, hash_tag("synthetic-sample")));
    for (std::size_t i = 0; i < n; ++i) {
        const bool positive = i < n_per_class;
        const auto& mu = positive ? truth.positive_mean : truth.negative_mean;
        pts[i] = {mu[0] + rng.next_normal(), mu[1] + rng.next_normal()};
        labels[i] = positive ? 1 : 0;
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng order_rng(derive_seed(seed, hash_tag("synthetic-order")));
    order_rng.shuffle(order);

    std::vector<double> features;
    features.reserve(n * 5);
    std::vector<int> out_labels(n);
    truth.raw_points.resize(n);
    truth.true_probs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = pts[order[i]];
        features.insert(features.end(),
                        {p[0] + p[1], p[0] - p[1], p[0] * p[1], p[0] * p[0],
                         p[1] * p[1]});
        out_labels[i] = labels[order[i]];
        truth.raw_points[i] = p;
        const double lp = detail::log_gauss2(p, truth.positive_mean,
                                             truth.covariance_scale);
        const double ln = detail::log_gauss2(p, truth.negative_mean,
                                             truth.covariance_scale);
        truth.true_probs[i] = 1.0 / (1.0 + std::exp(ln - lp));
    }
    Dataset ds(std::move(features), std::move(out_labels),
               {"x1_plus_x2", "x1_minus_x2", "x1_times_x2", "x1_sq", "x2_sq"},
               "synthetic");
    return {std::move(ds), std::move(truth)};
}

/// Audit export: one line per row with the exact positive-class posterior.
inline void write_truth_csv(const SyntheticTruth& truth, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "row_id,true_prob\n";
    out.precision(17);
    for (std::size_t i = 0; i < truth.true_probs.size(); ++i)
        out << i << ',' << truth.true_probs[i] << '\n';
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace calib
