#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "calib/datagen.hpp"
#include "calib/enir.hpp"
#include "calib/synthetic.hpp"

using namespace calib;

namespace {

DgConfig nb_config(std::size_t n_points, std::uint64_t seed) {
    DgConfig cfg;
    cfg.n_points = n_points;
    cfg.holdout_fraction = 0.1;
    cfg.seed = seed;
    cfg.classifier.kind = ClassifierKind::naive_bayes;
    return cfg;
}

}  // namespace

TEST_CASE("dg returns exactly the requested number of points") {
    auto [ds, truth] = make_synthetic(60, 5);
    for (std::size_t n : {1, 7, 120, 500}) {
        const auto pts = dg_generate(ds, nb_config(n, 11));
        CHECK(pts.size() == n);
        for (const auto& p : pts) {
            CHECK(p.weight == 1.0);
            CHECK((p.target == 0.0 || p.target == 1.0));
            CHECK(p.score >= 0.0);
            CHECK(p.score <= 1.0);
        }
    }
}

TEST_CASE("dg stratification keeps the positive share close to the data") {
    auto [ds, truth] = make_synthetic(80, 7);  // 50% positive
    const auto pts = dg_generate(ds, nb_config(500, 13));
    double pos = 0;
    for (const auto& p : pts) pos += p.target;
    CHECK(std::fabs(pos / 500.0 - ds.positive_fraction()) <= 0.05);
}

TEST_CASE("dg is a pure function of (train, config)") {
    auto [ds, truth] = make_synthetic(40, 9);
    const auto a = dg_generate(ds, nb_config(150, 17));
    const auto b = dg_generate(ds, nb_config(150, 17));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].score == b[i].score);
        CHECK(a[i].target == b[i].target);
    }
}

TEST_CASE("dgg hand aggregation of six points in groups of three") {
    const std::vector<CalibrationPoint> pts{{0.1, 0, 1}, {0.2, 0, 1},
                                            {0.3, 1, 1}, {0.5, 1, 1},
                                            {0.6, 0, 1}, {0.9, 1, 1}};
    const auto grouped = dgg_group(pts, DggConfig{3});
    REQUIRE(grouped.size() == 2);
    CHECK(grouped[0].score == Catch::Approx(0.2).margin(1e-12));
    CHECK(grouped[0].target == Catch::Approx(1.0 / 3.0).margin(1e-12));
    CHECK(grouped[0].weight == 3.0);
    CHECK(grouped[1].score == Catch::Approx(0.6667).margin(1e-4));
    CHECK(grouped[1].target == Catch::Approx(2.0 / 3.0).margin(1e-12));
    CHECK(grouped[1].weight == 3.0);
}

TEST_CASE("group size one is the identity grouping up to sorting") {
    const std::vector<CalibrationPoint> pts{{0.7, 1, 1}, {0.2, 0, 1}, {0.5, 1, 1}};
    const auto grouped = dgg_group(pts, DggConfig{1});
    REQUIRE(grouped.size() == 3);
    CHECK(grouped[0].score == 0.2);
    CHECK(grouped[1].score == 0.5);
    CHECK(grouped[2].score == 0.7);
    CHECK(grouped[0].target == 0.0);
    CHECK(grouped[2].target == 1.0);
}

TEST_CASE("all-negative labels group to target zero") {
    std::vector<CalibrationPoint> pts;
    for (int i = 0; i < 12; ++i)
        pts.push_back({static_cast<double>(i) / 12.0, 0.0, 1.0});
    for (const auto& g : dgg_group(pts, DggConfig{4})) CHECK(g.target == 0.0);
}

TEST_CASE("short remainders merge into the previous group") {
    std::vector<CalibrationPoint> pts;
    for (int i = 0; i < 7; ++i)
        pts.push_back({static_cast<double>(i), i % 2 ? 1.0 : 0.0, 1.0});
    // 7 = 3 + 4: remainder 1 < 3/2 joins the last group
    const auto merged = dgg_group(pts, DggConfig{3});
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].weight == 3.0);
    CHECK(merged[1].weight == 4.0);
    // 8 = 3 + 3 + 2: remainder 2 >= 3/2 stands alone
    pts.push_back({7.0, 1.0, 1.0});
    const auto kept = dgg_group(pts, DggConfig{3});
    REQUIRE(kept.size() == 3);
    CHECK(kept[2].weight == 2.0);
}

TEST_CASE("grouping conserves weight and orders mean scores") {
    auto [ds, truth] = make_synthetic(60, 19);
    const auto pts = dg_generate(ds, nb_config(230, 23));
    const auto grouped = dgg_group(pts, DggConfig{20});
    double total = 0.0;
    for (const auto& g : grouped) {
        total += g.weight;
        CHECK(g.target >= 0.0);
        CHECK(g.target <= 1.0);
    }
    CHECK(total == Catch::Approx(230.0).margin(1e-9));
    for (std::size_t i = 1; i < grouped.size(); ++i)
        CHECK(grouped[i].score >= grouped[i - 1].score);
}

TEST_CASE("mixed groups smooth their targets strictly inside (0,1)") {
    std::vector<CalibrationPoint> pts;
    for (int i = 0; i < 40; ++i)
        pts.push_back({static_cast<double>(i) / 40.0, (i % 3 == 0) ? 1.0 : 0.0, 1.0});
    const auto grouped = dgg_group(pts, DggConfig{10});
    for (const auto& g : grouped) {
        CHECK(g.target > 0.0);
        CHECK(g.target < 1.0);
    }
    // DGG + ENIR then keeps calibrated outputs away from exact 0/1
    const EnirModel m = enir_fit(grouped);
    for (int s = 0; s <= 100; ++s) {
        const double p = m.predict(static_cast<double>(s) / 100.0);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("dgg rejects fewer points than one group") {
    std::vector<CalibrationPoint> pts{{0.5, 1, 1}, {0.6, 0, 1}};
    CHECK_THROWS_WITH(dgg_group(pts, DggConfig{3}),
                      Catch::Matchers::ContainsSubstring("fewer points"));
}
