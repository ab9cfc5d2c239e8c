#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "calib/error.hpp"

namespace calib {

/// Per-fold evaluation bundle for one calibration scenario.
struct MetricReport {
    double logloss = 0.0;
    double mse = 0.0;
    double classification_rate = 0.0;
    std::optional<double> mse_vs_truth;
    double threshold = 0.5;
    double clip_epsilon = 1e-6;
};

inline constexpr double kDefaultClipEpsilon = 1e-6;

namespace detail {
inline void check_probs_labels(const std::vector<double>& probs,
                               const std::vector<int>& labels) {
    if (probs.size() != labels.size())
        throw Error("metrics: probs/labels length mismatch");
    if (probs.empty()) throw Error("metrics: empty input");
    for (double p : probs)
        if (!(p >= 0.0 && p <= 1.0))
            throw Error("metrics: probability out of [0,1]");
}
}  // namespace detail

/// Mean negative log-likelihood of the labels, with probabilities clipped
/// into [eps, 1-eps] so a confidently wrong prediction costs -ln(eps) at
/// worst. The clip makes the otherwise unbounded loss reportable.
inline double logloss(const std::vector<double>& probs,
                      const std::vector<int>& labels,
                      double clip_epsilon = kDefaultClipEpsilon) {
    detail::check_probs_labels(probs, labels);
    if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5))
        throw Error("logloss: clip_epsilon must be in (0, 0.5)");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p =
            std::clamp(probs[i], clip_epsilon, 1.0 - clip_epsilon);
        sum += labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return -sum / static_cast<double>(probs.size());
}

/// Mean squared difference between predicted probability and the 0/1 label.
inline double mse(const std::vector<double>& probs,
                  const std::vector<int>& labels) {
    detail::check_probs_labels(probs, labels);
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double d = probs[i] - static_cast<double>(labels[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(probs.size());
}

/// Mean squared difference against known true posteriors (synthetic data).
inline double mse_vs_truth(const std::vector<double>& probs,
                           const std::vector<double>& true_probs) {
    if (probs.size() != true_probs.size())
        throw Error("mse_vs_truth: length mismatch");
    if (probs.empty()) throw Error("mse_vs_truth: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double d = probs[i] - true_probs[i];
        sum += d * d;
    }
    return sum / static_cast<double>(probs.size());
}

/// Fraction of samples where (p >= threshold) agrees with the label.
inline double classification_rate(const std::vector<double>& probs,
                                  const std::vector<int>& labels,
                                  double threshold) {
    detail::check_probs_labels(probs, labels);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if ((probs[i] >= threshold) == (labels[i] == 1)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(probs.size());
}

/// Expected classification rate for weighted fractional targets; reduces to
/// classification_rate when targets are 0/1 with unit weights.
inline double expected_classification_rate(const std::vector<double>& probs,
                                           const std::vector<double>& targets,
                                           const std::vector<double>& weights,
                                           double threshold) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        num += weights[i] *
               (probs[i] >= threshold ? targets[i] : 1.0 - targets[i]);
        den += weights[i];
    }
    return den > 0.0 ? num / den : 0.0;
}

namespace detail {
inline std::vector<double> threshold_candidates(std::vector<double> probs) {
    std::sort(probs.begin(), probs.end());
    probs.erase(std::unique(probs.begin(), probs.end()), probs.end());
    std::vector<double> cands{0.0};
    for (std::size_t i = 0; i + 1 < probs.size(); ++i)
        cands.push_back(0.5 * (probs[i] + probs[i + 1]));
    cands.push_back(1.0);
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    return cands;
}
}  // namespace detail

/// Picks the threshold maximizing the classification rate over candidates
/// {0, 1} plus all midpoints of adjacent distinct probabilities. Decision
/// rule is "predict positive iff p >= t"; ties go to the smallest threshold.
inline double select_threshold(const std::vector<double>& probs,
                               const std::vector<int>& labels) {
    detail::check_probs_labels(probs, labels);
    double best_t = 0.0, best_cr = -1.0;
    for (double t : detail::threshold_candidates(probs)) {
        const double cr = classification_rate(probs, labels, t);
        if (cr > best_cr + 1e-15) {
            best_cr = cr;
            best_t = t;
        }
    }
    return best_t;
}

/// Threshold selection over weighted fractional targets (DGG groups carry a
/// positive fraction, not a label); same candidate set and tie rule.
inline double select_threshold_weighted(const std::vector<double>& probs,
                                        const std::vector<double>& targets,
                                        const std::vector<double>& weights) {
    if (probs.empty()) throw Error("select_threshold_weighted: empty input");
    double best_t = 0.0, best_cr = -1.0;
    for (double t : detail::threshold_candidates(probs)) {
        const double cr = expected_classification_rate(probs, targets, weights, t);
        if (cr > best_cr + 1e-15) {
            best_cr = cr;
            best_t = t;
        }
    }
    return best_t;
}

}  // namespace calib
