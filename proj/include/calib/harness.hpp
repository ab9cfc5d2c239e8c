#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "calib/calibrator.hpp"
#include "calib/classifier.hpp"
#include "calib/csv.hpp"
#include "calib/datagen.hpp"
#include "calib/dataset.hpp"
#include "calib/error.hpp"
#include "calib/metrics.hpp"
#include "calib/parallel.hpp"
#include "calib/stats.hpp"
#include "calib/synthetic.hpp"

namespace calib {

enum class ScenarioKind {
    raw,
    enir,
    enir_full,
    dg_enir,
    dgg_enir,
    enir_oob,
    platt,
    platt_full,
};

inline const std::vector<std::pair<ScenarioKind, std::string>>& scenario_names() {
    static const std::vector<std::pair<ScenarioKind, std::string>> names = {
        {ScenarioKind::raw, "raw"},
        {ScenarioKind::enir, "enir"},
        {ScenarioKind::enir_full, "enir-full"},
        {ScenarioKind::dg_enir, "dg"},
        {ScenarioKind::dgg_enir, "dgg"},
        {ScenarioKind::enir_oob, "oob"},
        {ScenarioKind::platt, "platt"},
        {ScenarioKind::platt_full, "platt-full"},
    };
    return names;
}

inline std::string to_string(ScenarioKind s) {
    for (const auto& [kind, name] : scenario_names())
        if (kind == s) return name;
    return "?";
}

inline ScenarioKind scenario_from_string(const std::string& s) {
    for (const auto& [kind, name] : scenario_names())
        if (name == s) return kind;
    throw ConfigError("unknown scenario '" + s + "'");
}

/// Human-readable scenario labels matching the result tables.
inline std::string scenario_label(ScenarioKind s) {
    switch (s) {
        case ScenarioKind::raw: return "Raw";
        case ScenarioKind::enir: return "ENIR";
        case ScenarioKind::enir_full: return "ENIR full";
        case ScenarioKind::dg_enir: return "DG + ENIR";
        case ScenarioKind::dgg_enir: return "DGG + ENIR";
        case ScenarioKind::enir_oob: return "ENIR OOB";
        case ScenarioKind::platt: return "Platt";
        case ScenarioKind::platt_full: return "Platt full";
    }
    return "?";
}

/// Which points feed threshold selection: the calibrator's own fitting
/// points (default) or the classifier's calibrated training-set scores.
enum class ThresholdData { fit_points, train_scores };

struct DataSource {
    enum class Kind { csv, synthetic, imbalance } kind = Kind::csv;
    std::string path;          // csv / imbalance
    std::string label_column = "label";
    std::string positive_label = "1";
    std::size_t n_per_class = 100;           // synthetic
    std::vector<std::size_t> levels = {100, 50, 25};  // imbalance
};

struct ExperimentConfig {
    DataSource source;
    ClassifierSpec classifier;
    std::vector<ScenarioKind> scenarios = {ScenarioKind::raw};
    std::size_t folds = 10;
    double cal_fraction = 0.10;
    std::size_t dg_points = 2000;
    double dg_holdout_fraction = 0.10;
    std::size_t dgg_group_size = 20;
    double clip_epsilon = kDefaultClipEpsilon;
    std::uint64_t seed = 0;
    std::string out_dir;
    TTestVariant test_variant = TTestVariant::welch_unpaired;
    ThresholdData threshold_data = ThresholdData::fit_points;
};

struct ResultRecord {
    std::string dataset_id;
    ClassifierKind classifier = ClassifierKind::naive_bayes;
    ScenarioKind scenario = ScenarioKind::raw;
    std::size_t fold = 0;
    MetricReport metrics;
    double train_calibrate_seconds = 0.0;
};

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.folds < 2) throw ConfigError("folds must be >= 2");
    if (!(cfg.cal_fraction > 0.0 && cfg.cal_fraction < 1.0))
        throw ConfigError("cal-fraction must be in (0, 1)");
    if (!(cfg.dg_holdout_fraction > 0.0 && cfg.dg_holdout_fraction < 1.0))
        throw ConfigError("dg holdout fraction must be in (0, 1)");
    if (!(cfg.clip_epsilon > 0.0 && cfg.clip_epsilon < 0.5))
        throw ConfigError("clip epsilon must be in (0, 0.5)");
    if (cfg.scenarios.empty()) throw ConfigError("no scenarios selected");
    if (cfg.dg_points < 1) throw ConfigError("dg-points must be >= 1");
    if (cfg.dgg_group_size < 1) throw ConfigError("dgg-group must be >= 1");
    std::set<ScenarioKind> seen;
    for (ScenarioKind s : cfg.scenarios) {
        if (!seen.insert(s).second)
            throw ConfigError("scenario '" + to_string(s) + "' listed twice");
        if (s == ScenarioKind::enir_oob &&
            cfg.classifier.kind != ClassifierKind::random_forest)
            throw ConfigError(
                "scenario 'oob' requires the random forest classifier");
    }
}

/// Optional per-fold internals captured for auditing (leakage checks, split
/// sizes). Filled only when a sink is passed to run_on_dataset.
struct FoldDiagnostics {
    std::size_t fold = 0;
    StandardizationParams standardization;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    std::map<ScenarioKind, std::size_t> classifier_train_sizes;
};

namespace detail {

struct FitPoints {
    std::vector<double> scores;   // calibrator input scores
    std::vector<double> targets;  // labels or group fractions
    std::vector<double> weights;
};

inline FitPoints to_fit_points(const std::vector<CalibrationPoint>& pts) {
    FitPoints fp;
    fp.scores.reserve(pts.size());
    for (const auto& p : pts) {
        fp.scores.push_back(p.score);
        fp.targets.push_back(p.target);
        fp.weights.push_back(p.weight);
    }
    return fp;
}

inline std::vector<CalibrationPoint> score_label_points(
    const TrainedClassifier& clf, const Dataset& ds) {
    std::vector<CalibrationPoint> pts;
    pts.reserve(ds.n_samples());
    for (std::size_t i = 0; i < ds.n_samples(); ++i)
        pts.push_back({predict_score(clf, ds.row(i)),
                       static_cast<double>(ds.labels()[i]), 1.0});
    return pts;
}

/// Lazily tuned mtry per training set, shared by every scenario that trains
/// on the same rows. Tuning time is accounted to each scenario that uses the
/// result, mirroring per-scenario timing.
class MtryCache {
public:
    MtryCache(const ClassifierSpec& spec, std::uint64_t seed_base)
        : spec_(spec), seed_base_(seed_base) {}

    std::pair<std::size_t, double> get(const Dataset& ds, std::string_view tag) {
        if (spec_.kind != ClassifierKind::random_forest || spec_.rf_mtry != 0)
            return {spec_.rf_mtry, 0.0};
        auto it = cache_.find(std::string(tag));
        if (it != cache_.end()) return it->second;
        ForestSpec fs = forest_spec(spec_);
        fs.seed = derive_seed(seed_base_, hash_tag("tune"), hash_tag(tag));
        const auto t0 = std::chrono::steady_clock::now();
        const std::size_t mtry = tune_mtry(ds, fs);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        auto res = std::make_pair(mtry, secs);
        cache_.emplace(std::string(tag), res);
        return res;
    }

private:
    ClassifierSpec spec_;
    std::uint64_t seed_base_;
    std::map<std::string, std::pair<std::size_t, double>> cache_;
};

}  // namespace detail

/// Runs the full scenario grid for one dataset under stratified k-fold CV.
/// `truth` supplies exact posteriors (synthetic data) for the MSE-vs-truth
/// metric. Every random decision derives from (cfg.seed, dataset_id, fold,
/// scenario, purpose), so adding a scenario or reordering the list never
/// changes another scenario's numbers.
inline std::vector<ResultRecord> run_on_dataset(
    const Dataset& ds, const std::vector<double>* truth,
    const std::string& dataset_id, const ExperimentConfig& cfg,
    std::vector<FoldDiagnostics>* diagnostics = nullptr) {
    validate_config(cfg);
    if (truth && truth->size() != ds.n_samples())
        throw ConfigError("truth vector length does not match dataset");

    const std::uint64_t base = derive_seed(cfg.seed, hash_tag(dataset_id));
    const FoldPlan plan =
        stratified_k_fold(ds, cfg.folds, derive_seed(base, hash_tag("folds")));

    std::vector<std::vector<ResultRecord>> per_fold(cfg.folds);
    if (diagnostics) diagnostics->resize(cfg.folds);

    parallel_for(cfg.folds, [&](std::size_t fold) {
        const auto train_rows = plan.train_rows(fold);
        const auto test_rows = plan.test_rows(fold);
        const Dataset train_raw = ds.subset(train_rows);
        const Dataset test_raw = ds.subset(test_rows);
        auto [train, applied, params] = standardize(train_raw, {test_raw});
        const Dataset& test = applied.front();

        std::vector<double> test_truth;
        if (truth)
            for (std::size_t r : test_rows) test_truth.push_back((*truth)[r]);

        const std::uint64_t fold_seed =
            derive_seed(base, hash_tag("fold"), static_cast<std::uint64_t>(fold));
        detail::MtryCache mtry_cache(cfg.classifier, fold_seed);

        // one calibration split per fold, shared by the enir and platt
        // scenarios (they model the same protocol)
        Dataset split_model, split_cal;
        bool have_split = false;
        auto ensure_split = [&]() {
            if (have_split) return;
            std::tie(split_model, split_cal) = split_calibration(
                train, cfg.cal_fraction, derive_seed(fold_seed, hash_tag("calsplit")));
            have_split = true;
        };

        FoldDiagnostics diag;
        diag.fold = fold;
        diag.standardization = params;
        diag.train_rows = train_rows;
        diag.test_rows = test_rows;

        for (ScenarioKind scenario : cfg.scenarios) {
            const std::uint64_t sseed =
                derive_seed(fold_seed, hash_tag(to_string(scenario)));

            ClassifierSpec spec = cfg.classifier;
            spec.seed = derive_seed(sseed, hash_tag("train"));

            const bool needs_split = scenario == ScenarioKind::enir ||
                                     scenario == ScenarioKind::platt;
            if (needs_split) ensure_split();
            const Dataset& fit_set = needs_split ? split_model : train;

            auto [tuned_mtry, tune_secs] =
                mtry_cache.get(fit_set, needs_split ? "sub" : "full");
            spec.rf_mtry = tuned_mtry;

            const auto t0 = std::chrono::steady_clock::now();
            TrainedClassifier clf;
            std::optional<OobScores> oob;
            std::tie(clf, oob) = fit_classifier(fit_set, spec);

            std::vector<CalibrationPoint> pts;
            Calibrator cal = IdentityModel{};
            switch (scenario) {
                case ScenarioKind::raw:
                    pts = detail::score_label_points(clf, train);
                    break;
                case ScenarioKind::enir:
                    pts = detail::score_label_points(clf, split_cal);
                    cal = enir_fit(pts);
                    break;
                case ScenarioKind::platt:
                    pts = detail::score_label_points(clf, split_cal);
                    cal = platt_fit(pts);
                    break;
                case ScenarioKind::enir_full:
                    pts = detail::score_label_points(clf, train);
                    cal = enir_fit(pts);
                    break;
                case ScenarioKind::platt_full:
                    pts = detail::score_label_points(clf, train);
                    cal = platt_fit(pts);
                    break;
                case ScenarioKind::dg_enir:
                case ScenarioKind::dgg_enir: {
                    DgConfig dg;
                    dg.n_points = cfg.dg_points;
                    dg.holdout_fraction = cfg.dg_holdout_fraction;
                    dg.seed = derive_seed(sseed, hash_tag("dg"));
                    dg.classifier = cfg.classifier;
                    dg.classifier.rf_mtry = tuned_mtry;
                    pts = dg_generate(train, dg);
                    if (scenario == ScenarioKind::dgg_enir)
                        pts = dgg_group(std::move(pts), DggConfig{cfg.dgg_group_size});
                    cal = enir_fit(pts);
                    break;
                }
                case ScenarioKind::enir_oob: {
                    pts.clear();
                    for (std::size_t i = 0; i < train.n_samples(); ++i)
                        if (oob->defined(i))
                            pts.push_back({oob->scores[i],
                                           static_cast<double>(train.labels()[i]),
                                           1.0});
                    cal = enir_fit(pts);
                    break;
                }
            }
            const double fit_secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();

            // threshold from the calibrated fitting points (or, optionally,
            // the calibrated training-set scores)
            detail::FitPoints fp;
            if (cfg.threshold_data == ThresholdData::fit_points) {
                fp = detail::to_fit_points(pts);
            } else {
                fp = detail::to_fit_points(detail::score_label_points(clf, fit_set));
            }
            const std::vector<double> fit_probs = calibrate_all(cal, fp.scores);
            const double threshold =
                select_threshold_weighted(fit_probs, fp.targets, fp.weights);

            const std::vector<double> probs =
                calibrate_all(cal, predict_scores(clf, test));

            ResultRecord rec;
            rec.dataset_id = dataset_id;
            rec.classifier = cfg.classifier.kind;
            rec.scenario = scenario;
            rec.fold = fold;
            rec.train_calibrate_seconds = fit_secs + tune_secs;
            rec.metrics.logloss = logloss(probs, test.labels(), cfg.clip_epsilon);
            rec.metrics.mse = mse(probs, test.labels());
            rec.metrics.threshold = threshold;
            rec.metrics.clip_epsilon = cfg.clip_epsilon;
            rec.metrics.classification_rate =
                classification_rate(probs, test.labels(), threshold);
            if (truth) rec.metrics.mse_vs_truth = mse_vs_truth(probs, test_truth);
            per_fold[fold].push_back(std::move(rec));

            diag.classifier_train_sizes[scenario] = fit_set.n_samples();
        }
        if (diagnostics) (*diagnostics)[fold] = std::move(diag);
    });

    std::vector<ResultRecord> records;
    for (auto& fr : per_fold)
        for (auto& r : fr) records.push_back(std::move(r));
    return records;
}

/// Imbalance study: downsample each class in turn to every level, then run
/// the full scenario grid on each derived dataset.
inline std::vector<ResultRecord> run_imbalance_study(
    const Dataset& base, const std::string& base_id,
    const ExperimentConfig& cfg) {
    validate_config(cfg);
    std::size_t max_level = 0;
    for (std::size_t level : cfg.source.levels)
        max_level = std::max(max_level, level);
    for (int cls : {0, 1})
        if (base.count_label(cls) <= max_level)
            throw ConfigError("imbalance study: class " + std::to_string(cls) +
                              " must be larger than the largest level");

    std::vector<ResultRecord> all;
    for (int cls : {1, 0}) {
        for (std::size_t level : cfg.source.levels) {
            const std::string id = base_id + (cls == 1 ? "_pos" : "_neg") +
                                   std::to_string(level);
            const Dataset derived = subsample_class(
                base, cls, level,
                derive_seed(cfg.seed, hash_tag("imbalance"),
                            static_cast<std::uint64_t>(cls),
                            static_cast<std::uint64_t>(level)));
            auto records = run_on_dataset(derived, nullptr, id, cfg);
            all.insert(all.end(), records.begin(), records.end());
        }
    }
    return all;
}

}  // namespace calib
