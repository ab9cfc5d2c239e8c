// calib: calibration experiment runner and calibrator fitting tool.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "calib/calibrator.hpp"
#include "calib/csv.hpp"
#include "calib/datagen.hpp"
#include "calib/harness.hpp"
#include "calib/report.hpp"
#include "calib/synthetic.hpp"

namespace {

struct RunOptions {
    std::string data_csv;
    bool synthetic = false;
    std::string imbalance_csv;
    std::string label_col = "label";
    std::string positive = "1";
    std::size_t n_per_class = 100;
    std::vector<std::size_t> levels = {100, 50, 25};
    std::string classifier = "nb";
    std::string scenarios = "raw";
    std::size_t folds = 10;
    double cal_fraction = 0.10;
    std::size_t dg_points = 2000;
    double dg_holdout = 0.10;
    std::size_t dgg_group = 20;
    double clip = calib::kDefaultClipEpsilon;
    std::uint64_t seed = 0;
    std::string out_dir = "results";
    std::string test = "welch";
    std::string threshold_data = "fit-points";
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    return parts;
}

std::string dataset_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

calib::ExperimentConfig build_config(const RunOptions& opt) {
    calib::ExperimentConfig cfg;
    cfg.classifier.kind = calib::classifier_kind_from_string(opt.classifier);
    cfg.scenarios.clear();
    for (const auto& name : split_list(opt.scenarios))
        cfg.scenarios.push_back(calib::scenario_from_string(name));
    cfg.folds = opt.folds;
    cfg.cal_fraction = opt.cal_fraction;
    cfg.dg_points = opt.dg_points;
    cfg.dg_holdout_fraction = opt.dg_holdout;
    cfg.dgg_group_size = opt.dgg_group;
    cfg.clip_epsilon = opt.clip;
    cfg.seed = opt.seed;
    cfg.out_dir = opt.out_dir;
    if (opt.test == "welch")
        cfg.test_variant = calib::TTestVariant::welch_unpaired;
    else if (opt.test == "paired")
        cfg.test_variant = calib::TTestVariant::paired;
    else
        throw calib::ConfigError("--test must be welch or paired");
    if (opt.threshold_data == "fit-points")
        cfg.threshold_data = calib::ThresholdData::fit_points;
    else if (opt.threshold_data == "train-scores")
        cfg.threshold_data = calib::ThresholdData::train_scores;
    else
        throw calib::ConfigError("--threshold-data must be fit-points or train-scores");
    return cfg;
}

int cmd_run(const RunOptions& opt) {
    const int sources = (opt.data_csv.empty() ? 0 : 1) + (opt.synthetic ? 1 : 0) +
                        (opt.imbalance_csv.empty() ? 0 : 1);
    if (sources != 1)
        throw calib::ConfigError(
            "exactly one of --data, --synthetic, --imbalance must be given");

    calib::ExperimentConfig cfg = build_config(opt);
    std::vector<calib::ResultRecord> records;

    if (opt.synthetic) {
        cfg.source.kind = calib::DataSource::Kind::synthetic;
        cfg.source.n_per_class = opt.n_per_class;
        auto [ds, truth] = calib::make_synthetic(opt.n_per_class, opt.seed);
        calib::validate_config(cfg);
        std::filesystem::create_directories(cfg.out_dir);
        calib::write_truth_csv(
            truth, (std::filesystem::path(cfg.out_dir) / "truth.csv").string());
        records = calib::run_on_dataset(ds, &truth.true_probs, "synthetic", cfg);
    } else if (!opt.data_csv.empty()) {
        cfg.source.kind = calib::DataSource::Kind::csv;
        cfg.source.path = opt.data_csv;
        cfg.source.label_column = opt.label_col;
        cfg.source.positive_label = opt.positive;
        calib::validate_config(cfg);
        const calib::Dataset ds =
            calib::load_csv(opt.data_csv, opt.label_col, opt.positive);
        records = calib::run_on_dataset(ds, nullptr, dataset_stem(opt.data_csv), cfg);
    } else {
        cfg.source.kind = calib::DataSource::Kind::imbalance;
        cfg.source.path = opt.imbalance_csv;
        cfg.source.label_column = opt.label_col;
        cfg.source.positive_label = opt.positive;
        cfg.source.levels = opt.levels;
        calib::validate_config(cfg);
        const calib::Dataset base =
            calib::load_csv(opt.imbalance_csv, opt.label_col, opt.positive);
        records = calib::run_imbalance_study(base, dataset_stem(opt.imbalance_csv), cfg);
    }

    const auto tables = calib::summarize_all(records, cfg.test_variant);
    calib::emit_reports(tables, records, cfg, cfg.out_dir);

    for (const auto& table : tables) {
        std::printf("%s (%s), %zu folds:\n", table.dataset_id.c_str(),
                    calib::to_string(table.classifier).c_str(), table.folds);
        for (const auto& row : table.rows) {
            std::string truth_part;
            if (row.mse_vs_truth)
                truth_part = "  MSEvT " + std::to_string(row.mse_vs_truth->mean);
            std::printf("  %-11s CR %6.2f%%  MSE %.4f  logloss %.4f%s\n",
                        calib::scenario_label(row.scenario).c_str(),
                        row.cr.mean * 100.0, row.mse.mean, row.logloss.mean,
                        truth_part.c_str());
        }
    }
    std::printf("reports written to %s\n", cfg.out_dir.c_str());
    return 0;
}

struct DatagenOptions {
    std::string data_csv;
    std::string label_col = "label";
    std::string positive = "1";
    std::string classifier = "nb";
    std::size_t n_points = 2000;
    double holdout = 0.10;
    std::size_t group = 0;  // 0 = raw DG points
    std::uint64_t seed = 0;
    std::string out = "points.csv";
};

int cmd_datagen(const DatagenOptions& opt) {
    const calib::Dataset raw = calib::load_csv(opt.data_csv, opt.label_col, opt.positive);
    auto [ds, rest, params] = calib::standardize(raw, {});
    calib::DgConfig cfg;
    cfg.n_points = opt.n_points;
    cfg.holdout_fraction = opt.holdout;
    cfg.seed = opt.seed;
    cfg.classifier.kind = calib::classifier_kind_from_string(opt.classifier);
    cfg.classifier.seed = opt.seed;
    if (cfg.classifier.kind == calib::ClassifierKind::random_forest)
        cfg.classifier.rf_mtry = calib::tune_mtry(ds, calib::forest_spec(cfg.classifier));
    auto points = calib::dg_generate(ds, cfg);
    if (opt.group > 0)
        points = calib::dgg_group(std::move(points), calib::DggConfig{opt.group});
    calib::write_points_csv(points, opt.out);
    std::printf("%zu calibration points written to %s\n", points.size(),
                opt.out.c_str());
    return 0;
}

struct SynthOptions {
    std::size_t n_per_class = 100;
    std::uint64_t seed = 0;
    std::string out = "synthetic.csv";
    std::string truth_out;
};

int cmd_synth(const SynthOptions& opt) {
    auto [ds, truth] = calib::make_synthetic(opt.n_per_class, opt.seed);
    calib::write_dataset_csv(ds, opt.out);
    if (!opt.truth_out.empty()) calib::write_truth_csv(truth, opt.truth_out);
    std::printf("%zu rows written to %s\n", ds.n_samples(), opt.out.c_str());
    return 0;
}

struct FitOptions {
    std::string points_csv;
    std::string calibrator = "enir";
    std::size_t bins = 10;
    std::string out = "model.json";
};

int cmd_fit(const FitOptions& opt) {
    const auto points = calib::load_points_csv(opt.points_csv);
    calib::Calibrator model;
    if (opt.calibrator == "enir")
        model = calib::enir_fit(points);
    else if (opt.calibrator == "isotonic")
        model = calib::pava_fit(points);
    else if (opt.calibrator == "platt")
        model = calib::platt_fit(points);
    else if (opt.calibrator == "binning")
        model = calib::binning_fit(points, opt.bins);
    else if (opt.calibrator == "identity")
        model = calib::IdentityModel{};
    else
        throw calib::ConfigError("unknown calibrator '" + opt.calibrator + "'");
    calib::save_calibrator(model, opt.out);
    std::printf("%s model written to %s\n", opt.calibrator.c_str(), opt.out.c_str());
    return 0;
}

struct ApplyOptions {
    std::string model_json;
    std::string scores_csv;
    std::string out = "probs.csv";
};

int cmd_apply(const ApplyOptions& opt) {
    const calib::Calibrator model = calib::load_calibrator(opt.model_json);
    std::ifstream in(opt.scores_csv);
    if (!in) throw calib::DataError("cannot open file: " + opt.scores_csv);
    std::ofstream out(opt.out);
    if (!out) throw calib::DataError("cannot write file: " + opt.out);
    out << "score,prob\n";
    out.precision(17);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double s = 0.0;
        if (std::sscanf(line.c_str(), "%lf", &s) != 1)
            throw calib::DataError("bad score line: " + line);
        out << s << ',' << calib::calibrate(model, s) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"classifier calibration toolkit"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand(
        "run", "run a scenario grid under stratified k-fold cross validation");
    run_cmd->add_option("--data", run.data_csv, "CSV dataset path");
    run_cmd->add_flag("--synthetic", run.synthetic,
                      "two-Gaussian synthetic data with exact posteriors");
    run_cmd->add_option("--imbalance", run.imbalance_csv,
                        "CSV dataset for the class-imbalance study");
    run_cmd->add_option("--label-col", run.label_col, "label column name");
    run_cmd->add_option("--positive", run.positive, "positive label value");
    run_cmd->add_option("--n-per-class", run.n_per_class,
                        "synthetic samples per class");
    run_cmd->add_option("--levels", run.levels,
                        "imbalance downsampling levels")
        ->delimiter(',');
    run_cmd->add_option("--classifier", run.classifier, "nb or rf");
    run_cmd->add_option("--scenarios", run.scenarios,
                        "comma list: raw,enir,enir-full,dg,dgg,oob,platt,platt-full");
    run_cmd->add_option("--folds", run.folds, "cross-validation folds");
    run_cmd->add_option("--cal-fraction", run.cal_fraction,
                        "calibration split fraction for enir/platt");
    run_cmd->add_option("--dg-points", run.dg_points, "DG generated point count");
    run_cmd->add_option("--dg-holdout", run.dg_holdout,
                        "DG per-iteration holdout fraction");
    run_cmd->add_option("--dgg-group", run.dgg_group, "DGG group size");
    run_cmd->add_option("--clip", run.clip, "logloss probability clip epsilon");
    run_cmd->add_option("--seed", run.seed, "master RNG seed");
    run_cmd->add_option("--out", run.out_dir, "output directory");
    run_cmd->add_option("--test", run.test,
                        "significance test for summaries: welch or paired");
    run_cmd->add_option("--threshold-data", run.threshold_data,
                        "threshold selection data: fit-points or train-scores");

    DatagenOptions dg;
    auto* dg_cmd = app.add_subcommand("datagen",
                                      "export DG/DGG calibration points as CSV");
    dg_cmd->add_option("--data", dg.data_csv, "CSV dataset path")->required();
    dg_cmd->add_option("--label-col", dg.label_col, "label column name");
    dg_cmd->add_option("--positive", dg.positive, "positive label value");
    dg_cmd->add_option("--classifier", dg.classifier, "nb or rf");
    dg_cmd->add_option("--dg-points", dg.n_points, "generated point count");
    dg_cmd->add_option("--dg-holdout", dg.holdout, "holdout fraction");
    dg_cmd->add_option("--dgg-group", dg.group,
                       "group size (0 = ungrouped DG points)");
    dg_cmd->add_option("--seed", dg.seed, "RNG seed");
    dg_cmd->add_option("--out", dg.out, "output CSV path");

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand(
        "synth", "export the two-Gaussian synthetic dataset as CSV");
    synth_cmd->add_option("--n-per-class", synth.n_per_class, "samples per class");
    synth_cmd->add_option("--seed", synth.seed, "RNG seed");
    synth_cmd->add_option("--out", synth.out, "dataset CSV path");
    synth_cmd->add_option("--truth-out", synth.truth_out,
                          "optional truth CSV path (row_id,true_prob)");

    FitOptions fit;
    auto* fit_cmd = app.add_subcommand(
        "fit", "fit a calibrator on a points CSV and save it as JSON");
    fit_cmd->add_option("--points", fit.points_csv, "points CSV (score,target,weight)")
        ->required();
    fit_cmd->add_option("--calibrator", fit.calibrator,
                        "enir, isotonic, platt, binning, or identity");
    fit_cmd->add_option("--bins", fit.bins, "bin count for binning");
    fit_cmd->add_option("--out", fit.out, "output model JSON path");

    ApplyOptions apply;
    auto* apply_cmd = app.add_subcommand(
        "apply", "apply a saved calibrator to a CSV of scores");
    apply_cmd->add_option("--model", apply.model_json, "model JSON path")->required();
    apply_cmd->add_option("--scores", apply.scores_csv, "scores CSV path")->required();
    apply_cmd->add_option("--out", apply.out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(run);
        if (dg_cmd->parsed()) return cmd_datagen(dg);
        if (synth_cmd->parsed()) return cmd_synth(synth);
        if (fit_cmd->parsed()) return cmd_fit(fit);
        if (apply_cmd->parsed()) return cmd_apply(apply);
    } catch (const calib::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
