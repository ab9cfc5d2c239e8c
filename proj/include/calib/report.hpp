#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "calib/error.hpp"
#include "calib/harness.hpp"
#include "calib/stats.hpp"

namespace calib {

inline constexpr double kSignificanceLevel = 0.05;

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0;
    bool sig_vs_raw = false;
    bool sig_vs_enir_full = false;
    bool sig_vs_classifier_specific = false;
};

struct ScenarioSummary {
    ScenarioKind scenario = ScenarioKind::raw;
    MetricSummary cr, mse, logloss;
    std::optional<MetricSummary> mse_vs_truth;
    double mean_seconds = 0.0;
};

/// Per-scenario means and standard deviations over the CV folds for one
/// (dataset, classifier) pair, with significance flags against the Raw and
/// ENIR-full baselines and the classifier-specific scenario (OOB for RF).
struct SummaryTable {
    std::string dataset_id;
    ClassifierKind classifier = ClassifierKind::naive_bayes;
    std::size_t folds = 0;
    TTestVariant test_variant = TTestVariant::welch_unpaired;
    std::vector<ScenarioSummary> rows;
};

namespace detail {

inline void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

inline bool significant(const std::vector<double>& a,
                        const std::vector<double>& b, TTestVariant variant) {
    const TTestResult res = variant == TTestVariant::paired
                                ? paired_t_test(a, b)
                                : welch_t_test(a, b);
    return !res.degenerate ? res.p_value < kSignificanceLevel : true;
}

struct MetricColumns {
    std::vector<double> cr, mse, logloss, mse_vs_truth;
};

}  // namespace detail

/// Collapses a complete (scenario x fold) record grid for a single dataset
/// and classifier into a SummaryTable. Errors if records mix datasets or
/// classifiers or if any (scenario, fold) cell is missing.
inline SummaryTable summarize(const std::vector<ResultRecord>& records,
                              TTestVariant variant = TTestVariant::welch_unpaired) {
    if (records.empty()) throw Error("summarize: no records");
    SummaryTable table;
    table.dataset_id = records.front().dataset_id;
    table.classifier = records.front().classifier;
    table.test_variant = variant;

    std::size_t max_fold = 0;
    for (const auto& r : records) {
        if (r.dataset_id != table.dataset_id || r.classifier != table.classifier)
            throw Error("summarize: records mix datasets or classifiers");
        max_fold = std::max(max_fold, r.fold);
    }
    table.folds = max_fold + 1;

    // scenario -> fold -> record, in first-seen scenario order
    std::vector<ScenarioKind> order;
    std::map<ScenarioKind, std::map<std::size_t, const ResultRecord*>> grid;
    for (const auto& r : records) {
        if (!grid.count(r.scenario)) order.push_back(r.scenario);
        auto& cell = grid[r.scenario][r.fold];
        if (cell) throw Error("summarize: duplicate record for scenario " +
                              to_string(r.scenario) + " fold " +
                              std::to_string(r.fold));
        cell = &r;
    }
    std::string missing;
    for (ScenarioKind s : order)
        for (std::size_t f = 0; f < table.folds; ++f)
            if (!grid[s].count(f))
                missing += " (" + to_string(s) + ", fold " + std::to_string(f) + ")";
    if (!missing.empty())
        throw Error("summarize: incomplete record grid; missing cells:" + missing);

    std::map<ScenarioKind, detail::MetricColumns> columns;
    std::map<ScenarioKind, double> seconds;
    bool have_truth = true;
    for (ScenarioKind s : order) {
        auto& col = columns[s];
        double secs = 0.0;
        for (std::size_t f = 0; f < table.folds; ++f) {
            const ResultRecord* r = grid[s][f];
            col.cr.push_back(r->metrics.classification_rate);
            col.mse.push_back(r->metrics.mse);
            col.logloss.push_back(r->metrics.logloss);
            if (r->metrics.mse_vs_truth)
                col.mse_vs_truth.push_back(*r->metrics.mse_vs_truth);
            else
                have_truth = false;
            secs += r->train_calibrate_seconds;
        }
        seconds[s] = secs / static_cast<double>(table.folds);
    }

    const bool have_raw = grid.count(ScenarioKind::raw) > 0;
    const bool have_full = grid.count(ScenarioKind::enir_full) > 0;
    const ScenarioKind cs_scenario = ScenarioKind::enir_oob;  // RF-specific
    const bool have_cs = table.classifier == ClassifierKind::random_forest &&
                         grid.count(cs_scenario) > 0;

    auto summarize_metric = [&](ScenarioKind s,
                                std::vector<double> detail::MetricColumns::*member)
        -> MetricSummary {
        MetricSummary ms;
        const auto& own = columns[s].*member;
        detail::mean_sd(own, ms.mean, ms.sd);
        if (have_raw && s != ScenarioKind::raw)
            ms.sig_vs_raw =
                detail::significant(own, columns[ScenarioKind::raw].*member, variant);
        if (have_full && s != ScenarioKind::enir_full)
            ms.sig_vs_enir_full = detail::significant(
                own, columns[ScenarioKind::enir_full].*member, variant);
        if (have_cs && s != cs_scenario)
            ms.sig_vs_classifier_specific =
                detail::significant(own, columns[cs_scenario].*member, variant);
        return ms;
    };

    for (ScenarioKind s : order) {
        ScenarioSummary row;
        row.scenario = s;
        row.cr = summarize_metric(s, &detail::MetricColumns::cr);
        row.mse = summarize_metric(s, &detail::MetricColumns::mse);
        row.logloss = summarize_metric(s, &detail::MetricColumns::logloss);
        if (have_truth && !columns[s].mse_vs_truth.empty())
            row.mse_vs_truth =
                summarize_metric(s, &detail::MetricColumns::mse_vs_truth);
        row.mean_seconds = seconds[s];
        table.rows.push_back(std::move(row));
    }
    return table;
}

/// Groups mixed-dataset records and summarizes each group, ordered by
/// (dataset, classifier).
inline std::vector<SummaryTable> summarize_all(
    const std::vector<ResultRecord>& records,
    TTestVariant variant = TTestVariant::welch_unpaired) {
    std::map<std::pair<std::string, ClassifierKind>, std::vector<ResultRecord>>
        groups;
    for (const auto& r : records)
        groups[{r.dataset_id, r.classifier}].push_back(r);
    std::vector<SummaryTable> tables;
    for (const auto& [key, group] : groups)
        tables.push_back(summarize(group, variant));
    return tables;
}

// --- persistence ----------------------------------------------------------

/// Records serialize without wall-clock timings: timings vary run to run and
/// live in timings.csv, while results.json stays byte-identical for a fixed
/// seed.
inline nlohmann::ordered_json record_to_json(const ResultRecord& r) {
    nlohmann::ordered_json j;
    j["dataset"] = r.dataset_id;
    j["classifier"] = to_string(r.classifier);
    j["scenario"] = to_string(r.scenario);
    j["fold"] = r.fold;
    nlohmann::ordered_json m;
    m["classification_rate"] = r.metrics.classification_rate;
    m["mse"] = r.metrics.mse;
    m["logloss"] = r.metrics.logloss;
    if (r.metrics.mse_vs_truth)
        m["mse_vs_truth"] = *r.metrics.mse_vs_truth;
    m["threshold"] = r.metrics.threshold;
    m["clip_epsilon"] = r.metrics.clip_epsilon;
    j["metrics"] = std::move(m);
    return j;
}

inline ResultRecord record_from_json(const nlohmann::json& j) {
    ResultRecord r;
    r.dataset_id = j.at("dataset").get<std::string>();
    r.classifier = classifier_kind_from_string(j.at("classifier").get<std::string>());
    r.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    r.fold = j.at("fold").get<std::size_t>();
    const auto& m = j.at("metrics");
    r.metrics.classification_rate = m.at("classification_rate").get<double>();
    r.metrics.mse = m.at("mse").get<double>();
    r.metrics.logloss = m.at("logloss").get<double>();
    if (m.contains("mse_vs_truth"))
        r.metrics.mse_vs_truth = m.at("mse_vs_truth").get<double>();
    r.metrics.threshold = m.at("threshold").get<double>();
    r.metrics.clip_epsilon = m.at("clip_epsilon").get<double>();
    return r;
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["classifier"] = to_string(cfg.classifier.kind);
    j["rf_ntree"] = cfg.classifier.rf_ntree;
    j["rf_mtry"] = cfg.classifier.rf_mtry;
    nlohmann::ordered_json scen = nlohmann::ordered_json::array();
    for (ScenarioKind s : cfg.scenarios) scen.push_back(to_string(s));
    j["scenarios"] = std::move(scen);
    j["folds"] = cfg.folds;
    j["cal_fraction"] = cfg.cal_fraction;
    j["dg_points"] = cfg.dg_points;
    j["dg_holdout_fraction"] = cfg.dg_holdout_fraction;
    j["dgg_group_size"] = cfg.dgg_group_size;
    j["clip_epsilon"] = cfg.clip_epsilon;
    j["seed"] = cfg.seed;
    j["significance_test"] =
        cfg.test_variant == TTestVariant::paired ? "paired" : "welch";
    j["threshold_data"] = cfg.threshold_data == ThresholdData::fit_points
                              ? "fit-points"
                              : "train-scores";
    return j;
}

namespace detail {

inline std::string format_pm(double mean, double sd, int precision,
                             double scale, const std::string& marks) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(precision);
    os << mean * scale << marks << " ± " << sd * scale;
    return os.str();
}

inline std::string marks_of(const MetricSummary& m) {
    std::string s;
    if (m.sig_vs_raw) s += '*';
    if (m.sig_vs_enir_full) s += "†";
    if (m.sig_vs_classifier_specific) s += '#';
    return s;
}

}  // namespace detail

/// Writes results.json (deterministic full records), summary.csv,
/// summary.md, and timings.csv into out_dir.
inline void emit_reports(const std::vector<SummaryTable>& tables,
                         const std::vector<ResultRecord>& records,
                         const ExperimentConfig& cfg,
                         const std::string& out_dir) {
    if (records.empty()) throw Error("emit_reports: no records to write");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory " + out_dir + ": " +
                            ec.message());
    auto open = [&](const std::string& name) {
        std::ofstream out(fs::path(out_dir) / name);
        if (!out) throw DataError("cannot write " + (fs::path(out_dir) / name).string());
        return out;
    };

    // stable record order for emission
    std::vector<const ResultRecord*> sorted;
    for (const auto& r : records) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const ResultRecord* a, const ResultRecord* b) {
                         if (a->dataset_id != b->dataset_id)
                             return a->dataset_id < b->dataset_id;
                         if (a->scenario != b->scenario)
                             return a->scenario < b->scenario;
                         return a->fold < b->fold;
                     });

    {
        nlohmann::ordered_json j;
        j["schema"] = "calib-results-v1";
        j["config"] = config_to_json(cfg);
        nlohmann::ordered_json recs = nlohmann::ordered_json::array();
        for (const ResultRecord* r : sorted) recs.push_back(record_to_json(*r));
        j["records"] = std::move(recs);
        auto out = open("results.json");
        out << j.dump(2) << '\n';
        if (!out) throw DataError("write failed: results.json");
    }

    {
        auto out = open("summary.csv");
        out << "dataset,classifier,scenario,metric,mean,sd,sig_vs_raw,"
               "sig_vs_enir_full,sig_vs_classifier_specific\n";
        out.precision(12);
        for (const auto& table : tables) {
            for (const auto& row : table.rows) {
                auto line = [&](const std::string& metric, const MetricSummary& m) {
                    out << table.dataset_id << ',' << to_string(table.classifier)
                        << ',' << to_string(row.scenario) << ',' << metric << ','
                        << m.mean << ',' << m.sd << ',' << m.sig_vs_raw << ','
                        << m.sig_vs_enir_full << ','
                        << m.sig_vs_classifier_specific << '\n';
                };
                line("cr", row.cr);
                line("mse", row.mse);
                line("logloss", row.logloss);
                if (row.mse_vs_truth) line("mse_vs_truth", *row.mse_vs_truth);
            }
        }
        if (!out) throw DataError("write failed: summary.csv");
    }

    {
        auto out = open("summary.md");
        for (const auto& table : tables) {
            out << "## " << table.dataset_id << " ("
                << to_string(table.classifier) << ")\n\n";
            const bool truth_col =
                !table.rows.empty() && table.rows.front().mse_vs_truth.has_value();
            out << "| Scenario | CR | MSE | Logloss |";
            if (truth_col) out << " MSE vs truth |";
            out << "\n|---|---|---|---|";
            if (truth_col) out << "---|";
            out << '\n';
            for (const auto& row : table.rows) {
                out << "| " << scenario_label(row.scenario) << " | "
                    << detail::format_pm(row.cr.mean, row.cr.sd, 2, 100.0,
                                         detail::marks_of(row.cr))
                    << " | "
                    << detail::format_pm(row.mse.mean, row.mse.sd, 3, 1.0,
                                         detail::marks_of(row.mse))
                    << " | "
                    << detail::format_pm(row.logloss.mean, row.logloss.sd, 3, 1.0,
                                         detail::marks_of(row.logloss))
                    << " |";
                if (row.mse_vs_truth)
                    out << ' '
                        << detail::format_pm(row.mse_vs_truth->mean,
                                             row.mse_vs_truth->sd, 3, 1.0,
                                             detail::marks_of(*row.mse_vs_truth))
                        << " |";
                out << '\n';
            }
            out << "\nMean ± SD over " << table.folds
                << "-fold cross validation. * differs from Raw, † differs "
                   "from ENIR full, # differs from the classifier-specific "
                   "scenario (p < "
                << kSignificanceLevel << ", "
                << (table.test_variant == TTestVariant::paired ? "paired"
                                                               : "Welch")
                << " t-test).\n\n";
        }
        if (!out) throw DataError("write failed: summary.md");
    }

    {
        auto out = open("timings.csv");
        out << "dataset,classifier";
        for (const auto& [kind, name] : scenario_names()) out << ',' << name;
        out << '\n';
        out.precision(6);
        for (const auto& table : tables) {
            out << table.dataset_id << ',' << to_string(table.classifier);
            for (const auto& [kind, name] : scenario_names()) {
                out << ',';
                for (const auto& row : table.rows)
                    if (row.scenario == kind) out << std::fixed << row.mean_seconds;
            }
            out << '\n';
        }
        if (!out) throw DataError("write failed: timings.csv");
    }
}

inline std::vector<ResultRecord> load_records_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    nlohmann::json j;
    in >> j;
    std::vector<ResultRecord> records;
    for (const auto& jr : j.at("records")) records.push_back(record_from_json(jr));
    return records;
}

}  // namespace calib
