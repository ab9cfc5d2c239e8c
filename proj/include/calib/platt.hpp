#pragma once

#include <cmath>
#include <vector>

#include "calib/calibration_point.hpp"
#include "calib/error.hpp"

namespace calib {

/// Two-parameter sigmoid p(s) = 1 / (1 + exp(A*s + B)). A is negative when
/// higher scores mean the positive class.
struct PlattModel {
    double a = 0.0;
    double b = 0.0;

    double predict(double score) const {
        const double z = a * score + b;
        // logistic of -z, stable on both sides
        if (z >= 0.0) {
            const double e = std::exp(-z);
            return e / (1.0 + e);
        }
        return 1.0 / (1.0 + std::exp(z));
    }
};

/// The standard sigmoid-fit target smoothing: 0/1 labels become
/// t+ = (N+ + 1)/(N+ + 2) and t- = 1/(N- + 2) (counts by weight), which
/// keeps the optimum finite. Inputs that already carry fractional targets
/// (DGG group fractions) pass through unchanged.
inline std::vector<double> platt_smoothed_targets(
    const std::vector<CalibrationPoint>& points) {
    bool all_binary = true;
    for (const auto& p : points)
        if (p.target != 0.0 && p.target != 1.0) all_binary = false;
    std::vector<double> targets;
    targets.reserve(points.size());
    if (!all_binary) {
        for (const auto& p : points) targets.push_back(p.target);
        return targets;
    }
    double n_pos = 0.0, n_neg = 0.0;
    for (const auto& p : points) (p.target == 1.0 ? n_pos : n_neg) += p.weight;
    const double t_pos = (n_pos + 1.0) / (n_pos + 2.0);
    const double t_neg = 1.0 / (n_neg + 2.0);
    for (const auto& p : points)
        targets.push_back(p.target == 1.0 ? t_pos : t_neg);
    return targets;
}

/// Fits (A, B) by minimizing the weighted cross-entropy with damped Newton
/// steps (backtracking halving), starting from the best constant model.
/// Converges when the gradient norm drops below 1e-10, errors out after 200
/// iterations.
inline PlattModel platt_fit(const std::vector<CalibrationPoint>& points) {
    validate_points(points);
    if (points.size() < 2)
        throw Error("platt_fit: need at least 2 calibration points");

    double tmin = 1.0, tmax = 0.0;
    for (const auto& p : points) {
        tmin = std::min(tmin, p.target);
        tmax = std::max(tmax, p.target);
    }
    if (!(tmax > tmin))
        throw Error("platt_fit: targets span no range, sigmoid orientation undefined");

    std::vector<double> scores, weights;
    scores.reserve(points.size());
    weights.reserve(points.size());
    for (const auto& p : points) {
        scores.push_back(p.score);
        weights.push_back(p.weight);
    }
    const std::vector<double> targets = platt_smoothed_targets(points);

    auto nll = [&](double a, double b) {
        double sum = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double z = a * scores[i] + b;
            // -[t ln p + (1-t) ln(1-p)] with p = sigma(-z), written via
            // log1p(exp(.)) for stability
            const double softplus =
                z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
            sum += weights[i] * (targets[i] * softplus + (1.0 - targets[i]) * (softplus - z));
        }
        return sum;
    };

    // start at the best constant model: A = 0, p = weighted mean target
    double wsum = 0.0, wt = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        wsum += weights[i];
        wt += weights[i] * targets[i];
    }
    const double base = wt / wsum;
    double a = 0.0;
    double b = std::log((1.0 - base) / base);

    double f = nll(a, b);
    for (int iter = 0; iter < 200; ++iter) {
        double ga = 0.0, gb = 0.0, haa = 0.0, hab = 0.0, hbb = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double s = scores[i];
            const double z = a * s + b;
            const double p = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z))
                                      : 1.0 / (1.0 + std::exp(z));
            const double r = weights[i] * (targets[i] - p);  // dNLL/dz
            ga += r * s;
            gb += r;
            const double h = weights[i] * std::max(p * (1.0 - p), 1e-12);
            haa += h * s * s;
            hab += h * s;
            hbb += h;
        }
        const double gnorm = std::sqrt(ga * ga + gb * gb);
        if (gnorm < 1e-10) {
            PlattModel model{a, b};
            return model;
        }
        const double det = haa * hbb - hab * hab;
        double da, db;
        if (det > 1e-300) {
            da = -(hbb * ga - hab * gb) / det;
            db = -(haa * gb - hab * ga) / det;
        } else {
            da = -ga;
            db = -gb;
        }
        double stepsize = 1.0;
        for (int half = 0; half < 60; ++half) {
            const double fa = nll(a + stepsize * da, b + stepsize * db);
            if (fa < f) {
                a += stepsize * da;
                b += stepsize * db;
                f = fa;
                break;
            }
            stepsize *= 0.5;
            if (half == 59) {
                // no descent direction left; gradient is numerically flat
                PlattModel model{a, b};
                return model;
            }
        }
    }
    throw ConvergenceError("platt_fit: Newton iteration did not converge", a, b);
}

}  // namespace calib
