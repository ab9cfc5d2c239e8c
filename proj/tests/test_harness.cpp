#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "calib/harness.hpp"
#include "calib/parallel.hpp"
#include "calib/report.hpp"
#include "calib/synthetic.hpp"

using namespace calib;

namespace {

ExperimentConfig quick_config() {
    ExperimentConfig cfg;
    cfg.classifier.kind = ClassifierKind::naive_bayes;
    cfg.folds = 10;
    cfg.dg_points = 200;
    cfg.dgg_group_size = 10;
    cfg.seed = 99;
    return cfg;
}

bool records_equal(const std::vector<ResultRecord>& a,
                   const std::vector<ResultRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a[i];
        const auto& y = b[i];
        if (x.dataset_id != y.dataset_id || x.scenario != y.scenario ||
            x.fold != y.fold || x.metrics.logloss != y.metrics.logloss ||
            x.metrics.mse != y.metrics.mse ||
            x.metrics.classification_rate != y.metrics.classification_rate ||
            x.metrics.threshold != y.metrics.threshold ||
            x.metrics.mse_vs_truth != y.metrics.mse_vs_truth)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("six scenarios over ten folds yield sixty records") {
    auto [ds, truth] = make_synthetic(100, 5);
    ExperimentConfig cfg = quick_config();
    cfg.scenarios = {ScenarioKind::raw,       ScenarioKind::enir,
                     ScenarioKind::enir_full, ScenarioKind::platt,
                     ScenarioKind::platt_full, ScenarioKind::dgg_enir};
    const auto records = run_on_dataset(ds, &truth.true_probs, "synthetic", cfg);
    CHECK(records.size() == 60);
    std::set<std::pair<std::string, std::size_t>> cells;
    for (const auto& r : records) {
        cells.insert({to_string(r.scenario), r.fold});
        CHECK(r.metrics.logloss <= -std::log(cfg.clip_epsilon) + 1e-9);
        CHECK(r.metrics.mse >= 0.0);
        CHECK(r.metrics.mse <= 1.0);
        REQUIRE(r.metrics.mse_vs_truth.has_value());
        CHECK(r.train_calibrate_seconds >= 0.0);
    }
    CHECK(cells.size() == 60);
}

TEST_CASE("the raw scenario's probabilities are the classifier scores") {
    // rebuild the raw pipeline with the library's own derivation scheme and
    // compare metrics bit for bit
    auto [ds, truth] = make_synthetic(60, 11);
    ExperimentConfig cfg = quick_config();
    cfg.folds = 4;
    cfg.scenarios = {ScenarioKind::raw};
    const auto records = run_on_dataset(ds, nullptr, "synthetic", cfg);
    REQUIRE(records.size() == 4);

    const std::uint64_t base = derive_seed(cfg.seed, hash_tag("synthetic"));
    const FoldPlan plan =
        stratified_k_fold(ds, cfg.folds, derive_seed(base, hash_tag("folds")));
    for (const auto& rec : records) {
        const Dataset train_raw = ds.subset(plan.train_rows(rec.fold));
        const Dataset test_raw = ds.subset(plan.test_rows(rec.fold));
        auto [train, applied, params] = standardize(train_raw, {test_raw});
        const NaiveBayesModel nb = fit_naive_bayes(train);
        std::vector<double> probs;
        for (std::size_t i = 0; i < applied[0].n_samples(); ++i)
            probs.push_back(nb.score(applied[0].row(i)));
        CHECK(rec.metrics.logloss ==
              logloss(probs, applied[0].labels(), cfg.clip_epsilon));
        CHECK(rec.metrics.mse == mse(probs, applied[0].labels()));
    }
}

TEST_CASE("scenario training sizes follow the split protocol") {
    auto [ds, truth] = make_synthetic(100, 7);  // 200 rows, folds of 20
    ExperimentConfig cfg = quick_config();
    cfg.scenarios = {ScenarioKind::raw, ScenarioKind::enir,
                     ScenarioKind::enir_full};
    std::vector<FoldDiagnostics> diag;
    run_on_dataset(ds, nullptr, "synthetic", cfg, &diag);
    REQUIRE(diag.size() == 10);
    for (const auto& d : diag) {
        const std::size_t train_n = d.train_rows.size();
        CHECK(train_n == 180);
        CHECK(d.classifier_train_sizes.at(ScenarioKind::raw) == train_n);
        CHECK(d.classifier_train_sizes.at(ScenarioKind::enir_full) == train_n);
        // enir trains on n - floor(0.1 n) rows
        const std::size_t cal = static_cast<std::size_t>(
            std::floor(cfg.cal_fraction * static_cast<double>(train_n)));
        CHECK(d.classifier_train_sizes.at(ScenarioKind::enir) == train_n - cal);
    }
}

TEST_CASE("preprocessing never sees test-fold rows") {
    auto [ds, truth] = make_synthetic(50, 13);
    ExperimentConfig cfg = quick_config();
    cfg.folds = 5;
    cfg.scenarios = {ScenarioKind::raw};
    std::vector<FoldDiagnostics> diag;
    run_on_dataset(ds, nullptr, "synthetic", cfg, &diag);
    for (const auto& d : diag) {
        auto [strain, rest, params] = standardize(ds.subset(d.train_rows), {});
        REQUIRE(params.kept_columns == d.standardization.kept_columns);
        for (std::size_t c = 0; c < params.means.size(); ++c) {
            CHECK(params.means[c] == d.standardization.means[c]);
            CHECK(params.std_devs[c] == d.standardization.std_devs[c]);
        }
    }
}

TEST_CASE("oob scenario with naive bayes is rejected before any work") {
    ExperimentConfig cfg = quick_config();
    cfg.scenarios = {ScenarioKind::raw, ScenarioKind::enir_oob};
    auto [ds, truth] = make_synthetic(30, 3);
    CHECK_THROWS_AS(run_on_dataset(ds, nullptr, "x", cfg), ConfigError);
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("runs are deterministic and thread-count invariant") {
    auto [ds, truth] = make_synthetic(60, 17);
    ExperimentConfig cfg = quick_config();
    cfg.folds = 3;
    cfg.classifier.kind = ClassifierKind::random_forest;
    cfg.classifier.rf_ntree = 30;
    cfg.scenarios = {ScenarioKind::raw, ScenarioKind::enir_oob,
                     ScenarioKind::dgg_enir};
    cfg.dg_points = 60;
    const unsigned before = max_threads();
    set_max_threads(1);
    const auto a = run_on_dataset(ds, &truth.true_probs, "synthetic", cfg);
    set_max_threads(4);
    const auto b = run_on_dataset(ds, &truth.true_probs, "synthetic", cfg);
    set_max_threads(before);
    CHECK(records_equal(a, b));
    const auto c = run_on_dataset(ds, &truth.true_probs, "synthetic", cfg);
    CHECK(records_equal(a, c));
}

TEST_CASE("summarize averages a hand-built record grid") {
    std::vector<ResultRecord> records;
    for (std::size_t fold = 0; fold < 3; ++fold) {
        ResultRecord r;
        r.dataset_id = "toy";
        r.scenario = ScenarioKind::raw;
        r.fold = fold;
        r.metrics.classification_rate = 0.5 + 0.1 * fold;  // mean 0.6
        r.metrics.mse = 0.2;
        r.metrics.logloss = 1.0 + fold;  // mean 2.0
        records.push_back(r);
    }
    const SummaryTable table = summarize(records);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].cr.mean == Catch::Approx(0.6).margin(1e-15));
    CHECK(table.rows[0].cr.sd == Catch::Approx(0.1).margin(1e-12));
    CHECK(table.rows[0].mse.mean == Catch::Approx(0.2));
    CHECK(table.rows[0].logloss.mean == Catch::Approx(2.0));
    CHECK_FALSE(table.rows[0].logloss.sig_vs_raw);
}

TEST_CASE("summarize reports missing grid cells") {
    std::vector<ResultRecord> records;
    for (std::size_t fold = 0; fold < 3; ++fold)
        for (ScenarioKind s : {ScenarioKind::raw, ScenarioKind::enir_full}) {
            ResultRecord r;
            r.dataset_id = "toy";
            r.scenario = s;
            r.fold = fold;
            records.push_back(r);
        }
    records.pop_back();  // drop (enir_full, fold 2)
    CHECK_THROWS_WITH(summarize(records),
                      Catch::Matchers::ContainsSubstring("enir-full, fold 2"));
}

TEST_CASE("identical scenarios carry no significance flags") {
    std::vector<ResultRecord> records;
    for (ScenarioKind s : {ScenarioKind::raw, ScenarioKind::enir_full})
        for (std::size_t fold = 0; fold < 5; ++fold) {
            ResultRecord r;
            r.dataset_id = "toy";
            r.scenario = s;
            r.fold = fold;
            r.metrics.classification_rate = 0.7 + 0.01 * fold;
            r.metrics.mse = 0.1 + 0.01 * fold;
            r.metrics.logloss = 0.5 + 0.02 * fold;
            records.push_back(r);
        }
    for (const auto& row : summarize(records).rows) {
        CHECK_FALSE(row.mse.sig_vs_raw);
        CHECK_FALSE(row.logloss.sig_vs_raw);
        CHECK_FALSE(row.mse.sig_vs_enir_full);
    }
}

TEST_CASE("emit_reports writes the four files and round-trips records") {
    auto [ds, truth] = make_synthetic(60, 29);
    ExperimentConfig cfg = quick_config();
    cfg.folds = 3;
    cfg.scenarios = {ScenarioKind::raw, ScenarioKind::enir_full};
    const auto records = run_on_dataset(ds, &truth.true_probs, "synthetic", cfg);
    const auto tables = summarize_all(records, cfg.test_variant);

    const auto dir = std::filesystem::temp_directory_path() / "calib_report_test";
    std::filesystem::remove_all(dir);
    emit_reports(tables, records, cfg, dir.string());
    for (const char* name :
         {"results.json", "summary.csv", "summary.md", "timings.csv"})
        CHECK(std::filesystem::exists(dir / name));

    const auto loaded = load_records_json((dir / "results.json").string());
    REQUIRE(loaded.size() == records.size());
    // emission sorts by (dataset, scenario, fold); compare as sets of tuples
    std::multiset<std::string> want, got;
    for (const auto& r : records)
        want.insert(to_string(r.scenario) + "/" + std::to_string(r.fold) + "/" +
                    std::to_string(r.metrics.logloss) + "/" +
                    std::to_string(r.metrics.mse_vs_truth.value()));
    for (const auto& r : loaded)
        got.insert(to_string(r.scenario) + "/" + std::to_string(r.fold) + "/" +
                   std::to_string(r.metrics.logloss) + "/" +
                   std::to_string(r.metrics.mse_vs_truth.value()));
    CHECK(want == got);

    std::ifstream md(dir / "summary.md");
    std::string line, all;
    bool header_ok = false;
    while (std::getline(md, line)) {
        if (line.rfind("| Scenario | CR | MSE | Logloss |", 0) == 0)
            header_ok = true;
        all += line + "\n";
    }
    CHECK(header_ok);
    CHECK(all.find("| Raw |") != std::string::npos);
    CHECK(all.find("| ENIR full |") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("emit_reports refuses an empty record list") {
    ExperimentConfig cfg = quick_config();
    CHECK_THROWS_AS(emit_reports({}, {}, cfg, "/tmp/calib_empty_report"), Error);
    CHECK_FALSE(std::filesystem::exists("/tmp/calib_empty_report/results.json"));
}

TEST_CASE("imbalance study derives six datasets with exact minority counts") {
    auto [base, truth] = make_synthetic(120, 31);  // 120 per class
    ExperimentConfig cfg = quick_config();
    cfg.folds = 3;
    cfg.scenarios = {ScenarioKind::raw};
    cfg.source.levels = {40, 20, 10};
    const auto records = run_imbalance_study(base, "synth", cfg);
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.dataset_id);
    CHECK(ids == std::set<std::string>{"synth_pos40", "synth_pos20", "synth_pos10",
                                       "synth_neg40", "synth_neg20",
                                       "synth_neg10"});
    CHECK(records.size() == 6 * 3);

    ExperimentConfig bad = cfg;
    bad.source.levels = {200};
    CHECK_THROWS_AS(run_imbalance_study(base, "synth", bad), ConfigError);
}

TEST_CASE("duplicate scenarios are rejected") {
    ExperimentConfig cfg = quick_config();
    cfg.scenarios = {ScenarioKind::raw, ScenarioKind::raw};
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}
