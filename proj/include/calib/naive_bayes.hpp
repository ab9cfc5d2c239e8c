#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "calib/dataset.hpp"
#include "calib/error.hpp"

namespace calib {

/// Gaussian naive Bayes. Class-conditional densities are independent
/// normals with maximum-likelihood moments; the positive-class score is the
/// posterior under class-frequency priors. Variances are floored at
/// 1e-9 * (overall feature variance), minimum 1e-12, to keep degenerate
/// columns from blowing up the likelihood ratio.
struct NaiveBayesModel {
    double log_prior_pos = 0.0;
    double log_prior_neg = 0.0;
    std::vector<double> mean_pos, var_pos;
    std::vector<double> mean_neg, var_neg;

    std::size_t n_features() const { return mean_pos.size(); }

    double score(std::span<const double> x) const {
        if (x.size() != n_features())
            throw Error("naive bayes: feature count mismatch");
        double d = log_prior_pos - log_prior_neg;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double zp = x[j] - mean_pos[j];
            const double zn = x[j] - mean_neg[j];
            d += -0.5 * (std::log(var_pos[j]) + zp * zp / var_pos[j]) +
                 0.5 * (std::log(var_neg[j]) + zn * zn / var_neg[j]);
        }
        if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
        const double e = std::exp(d);
        return e / (1.0 + e);
    }
};

inline NaiveBayesModel fit_naive_bayes(const Dataset& ds) {
    const std::size_t n_pos = ds.count_label(1);
    const std::size_t n_neg = ds.n_samples() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("fit_naive_bayes: training data must contain both classes");

    const std::size_t p = ds.n_features();
    NaiveBayesModel model;
    model.log_prior_pos = std::log(static_cast<double>(n_pos) / ds.n_samples());
    model.log_prior_neg = std::log(static_cast<double>(n_neg) / ds.n_samples());
    model.mean_pos.assign(p, 0.0);
    model.mean_neg.assign(p, 0.0);
    model.var_pos.assign(p, 0.0);
    model.var_neg.assign(p, 0.0);

    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        auto& mean = ds.labels()[i] == 1 ? model.mean_pos : model.mean_neg;
        for (std::size_t j = 0; j < p; ++j) mean[j] += ds.at(i, j);
    }
    for (std::size_t j = 0; j < p; ++j) {
        model.mean_pos[j] /= static_cast<double>(n_pos);
        model.mean_neg[j] /= static_cast<double>(n_neg);
    }
    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        const bool pos = ds.labels()[i] == 1;
        const auto& mean = pos ? model.mean_pos : model.mean_neg;
        auto& var = pos ? model.var_pos : model.var_neg;
        for (std::size_t j = 0; j < p; ++j) {
            const double d = ds.at(i, j) - mean[j];
            var[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        double overall_mean, overall_var;
        detail::column_moments(ds, j, overall_mean, overall_var);
        const double floor = std::max(1e-9 * overall_var, 1e-12);
        model.var_pos[j] = std::max(model.var_pos[j] / n_pos, floor);
        model.var_neg[j] = std::max(model.var_neg[j] / n_neg, floor);
    }
    return model;
}

}  // namespace calib
