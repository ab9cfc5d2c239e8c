#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "calib/error.hpp"
#include "calib/rng.hpp"

namespace calib {

/// Immutable feature matrix + binary labels. Label 1 is the positive class.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::vector<double> features, std::vector<int> labels,
            std::vector<std::string> feature_names, std::string source = {})
        : features_(std::move(features)),
          labels_(std::move(labels)),
          feature_names_(std::move(feature_names)),
          source_(std::move(source)) {
        n_features_ = feature_names_.size();
        if (n_features_ == 0)
            throw DataError("dataset has no feature columns");
        if (features_.size() != labels_.size() * n_features_)
            throw DataError("feature matrix size does not match label count");
        n_samples_ = labels_.size();
        for (int y : labels_)
            if (y != 0 && y != 1)
                throw DataError("labels must be exactly 0 or 1");
    }

    std::size_t n_samples() const { return n_samples_; }
    std::size_t n_features() const { return n_features_; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::string& source() const { return source_; }
    const std::vector<double>& raw_features() const { return features_; }

    std::span<const double> row(std::size_t i) const {
        return {features_.data() + i * n_features_, n_features_};
    }
    double at(std::size_t i, std::size_t j) const {
        return features_[i * n_features_ + j];
    }

    std::size_t count_label(int y) const {
        return static_cast<std::size_t>(
            std::count(labels_.begin(), labels_.end(), y));
    }
    double positive_fraction() const {
        return n_samples_ == 0
                   ? 0.0
                   : static_cast<double>(count_label(1)) / n_samples_;
    }

    /// New dataset holding the given rows, in the given order.
    Dataset subset(const std::vector<std::size_t>& rows) const {
        std::vector<double> f;
        f.reserve(rows.size() * n_features_);
        std::vector<int> y;
        y.reserve(rows.size());
        for (std::size_t r : rows) {
            auto rr = row(r);
            f.insert(f.end(), rr.begin(), rr.end());
            y.push_back(labels_[r]);
        }
        return Dataset(std::move(f), std::move(y), feature_names_, source_);
    }

private:
    std::vector<double> features_;  // row-major
    std::vector<int> labels_;
    std::vector<std::string> feature_names_;
    std::string source_;
    std::size_t n_samples_ = 0;
    std::size_t n_features_ = 0;
};

/// Per-feature centering/scaling fitted on a training set. kept_columns are
/// indices into the ORIGINAL feature set, strictly increasing.
struct StandardizationParams {
    std::vector<double> means;
    std::vector<double> std_devs;
    std::vector<std::size_t> kept_columns;
};

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;  // per-sample fold index in [0, k)
    std::uint64_t seed = 0;

    std::vector<std::size_t> test_rows(std::size_t fold) const {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] == fold) rows.push_back(i);
        return rows;
    }
    std::vector<std::size_t> train_rows(std::size_t fold) const {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] != fold) rows.push_back(i);
        return rows;
    }
};

namespace detail {
/// Sample variance (n-1 convention); 0 for fewer than two values.
inline void column_moments(const Dataset& ds, std::size_t col, double& mean,
                           double& var) {
    const std::size_t n = ds.n_samples();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += ds.at(i, col);
    mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = ds.at(i, col) - mean;
        ss += d * d;
    }
    var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
}

inline std::vector<std::size_t> indices_of_label(const Dataset& ds, int y) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.n_samples(); ++i)
        if (ds.labels()[i] == y) idx.push_back(i);
    return idx;
}
}  // namespace detail

/// Threshold below which a training-set column counts as near-zero-variance
/// and is deleted before modelling.
inline constexpr double kNearZeroVarianceThreshold = 1e-8;

/// Fits zero-mean/unit-variance scaling on `train` only (sample variance,
/// n-1), drops near-zero-variance columns everywhere, and applies the
/// transform to `train` and each dataset in `apply_to`.
inline std::tuple<Dataset, std::vector<Dataset>, StandardizationParams>
standardize(const Dataset& train, const std::vector<Dataset>& apply_to) {
    if (train.n_samples() == 0) throw DataError("standardize: empty training set");
    for (const Dataset& d : apply_to)
        if (d.n_features() != train.n_features())
            throw DataError("standardize: column count mismatch");

    StandardizationParams params;
    for (std::size_t j = 0; j < train.n_features(); ++j) {
        double mean, var;
        detail::column_moments(train, j, mean, var);
        if (var < kNearZeroVarianceThreshold) continue;
        params.kept_columns.push_back(j);
        params.means.push_back(mean);
        params.std_devs.push_back(std::sqrt(var));
    }
    if (params.kept_columns.empty())
        throw DataError("standardize: all feature columns have near-zero variance");

    auto transform = [&params](const Dataset& ds) {
        std::vector<double> f;
        f.reserve(ds.n_samples() * params.kept_columns.size());
        std::vector<std::string> names;
        for (std::size_t j : params.kept_columns)
            names.push_back(ds.feature_names()[j]);
        for (std::size_t i = 0; i < ds.n_samples(); ++i)
            for (std::size_t c = 0; c < params.kept_columns.size(); ++c)
                f.push_back((ds.at(i, params.kept_columns[c]) - params.means[c]) /
                            params.std_devs[c]);
        return Dataset(std::move(f), ds.labels(), std::move(names), ds.source());
    };

    std::vector<Dataset> transformed;
    transformed.reserve(apply_to.size());
    for (const Dataset& d : apply_to) transformed.push_back(transform(d));
    return {transform(train), std::move(transformed), std::move(params)};
}

/// Stratified k-fold assignment: shuffle within each class, deal round-robin
/// starting at fold 0, so remainder samples land in the lowest-index folds.
inline FoldPlan stratified_k_fold(const Dataset& ds, std::size_t k,
                                  std::uint64_t seed) {
    if (k < 2) throw ConfigError("stratified_k_fold: k must be >= 2");
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(ds.n_samples(), 0);
    for (int y : {0, 1}) {
        auto idx = detail::indices_of_label(ds, y);
        if (idx.size() < k)
            throw DataError("stratified_k_fold: class " + std::to_string(y) +
                            " has fewer than k members (" +
                            std::to_string(idx.size()) + " < " +
                            std::to_string(k) + ")");
        Rng rng(derive_seed(seed, hash_tag("fold-shuffle"),
                            static_cast<std::uint64_t>(y)));
        rng.shuffle(idx);
        for (std::size_t i = 0; i < idx.size(); ++i)
            plan.assignments[idx[i]] = i % k;
    }
    return plan;
}

/// Stratified split of `train` into (model_train, calibration) where the
/// calibration part holds exactly floor(fraction * n) rows. Per-class counts
/// follow largest-remainder apportionment so the split stays stratified.
inline std::pair<Dataset, Dataset> split_calibration(const Dataset& train,
                                                     double fraction,
                                                     std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ConfigError("split_calibration: fraction must be in (0, 1)");
    const std::size_t n = train.n_samples();
    const std::size_t n_pos = train.count_label(1);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("split_calibration: training set must contain both classes");

    const std::size_t total =
        static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    if (total == 0)
        throw DataError("split_calibration: calibration set would be empty");

    // largest-remainder apportionment over the two classes; ties favor the
    // positive class
    const double exact_pos = static_cast<double>(total) * n_pos / n;
    const double exact_neg = static_cast<double>(total) * n_neg / n;
    std::size_t take_pos = static_cast<std::size_t>(std::floor(exact_pos));
    std::size_t take_neg = static_cast<std::size_t>(std::floor(exact_neg));
    if (take_pos + take_neg < total) {
        if (exact_pos - std::floor(exact_pos) >= exact_neg - std::floor(exact_neg))
            ++take_pos;
        else
            ++take_neg;
    }
    if (take_neg > n_neg) {
        take_pos += take_neg - n_neg;
        take_neg = n_neg;
    }
    if (take_pos == 0 || take_neg == 0)
        throw DataError("split_calibration: calibration set would be single-class");
    if (take_pos > n_pos)
        throw DataError("split_calibration: not enough positive samples");

    std::vector<bool> in_cal(n, false);
    for (int y : {0, 1}) {
        auto idx = detail::indices_of_label(train, y);
        Rng rng(derive_seed(seed, hash_tag("cal-split"),
                            static_cast<std::uint64_t>(y)));
        rng.shuffle(idx);
        const std::size_t take = (y == 1) ? take_pos : take_neg;
        for (std::size_t i = 0; i < take; ++i) in_cal[idx[i]] = true;
    }
    std::vector<std::size_t> cal_rows, model_rows;
    for (std::size_t i = 0; i < n; ++i)
        (in_cal[i] ? cal_rows : model_rows).push_back(i);
    return {train.subset(model_rows), train.subset(cal_rows)};
}

/// Downsamples `target_class` to exactly n_keep members (uniform, without
/// replacement); the other class is kept intact. Row order of the result is
/// reshuffled deterministically from the seed.
inline Dataset subsample_class(const Dataset& ds, int target_class,
                               std::size_t n_keep, std::uint64_t seed,
                               std::vector<std::size_t>* kept_rows = nullptr) {
    auto idx = detail::indices_of_label(ds, target_class);
    if (n_keep > idx.size())
        throw DataError("subsample_class: n_keep (" + std::to_string(n_keep) +
                        ") exceeds class size (" + std::to_string(idx.size()) +
                        ")");
    Rng rng(derive_seed(seed, hash_tag("subsample-pick")));
    rng.shuffle(idx);
    idx.resize(n_keep);

    std::vector<std::size_t> rows = detail::indices_of_label(ds, 1 - target_class);
    rows.insert(rows.end(), idx.begin(), idx.end());
    Rng order_rng(derive_seed(seed, hash_tag("subsample-order")));
    order_rng.shuffle(rows);
    if (kept_rows) *kept_rows = rows;
    return ds.subset(rows);
}

}  // namespace calib
