#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "beta/data.hpp"
#include "beta/errors.hpp"
#include "beta/io.hpp"
#include "beta/rng.hpp"

using namespace beta;

namespace {

std::filesystem::path write_tmp(const std::string& name, const std::string& text) {
    auto dir = std::filesystem::temp_directory_path() / "beta_data_test";
    std::filesystem::create_directories(dir);
    auto p = dir / name;
    io::atomic_write_text(p, text);
    return p;
}

double correlation(const TimeSeriesDataset& ds, std::size_t a, std::size_t b) {
    const std::size_t t = ds.n_steps();
    double ma = 0, mb = 0;
    for (std::size_t s = 0; s < t; ++s) {
        ma += ds.raw_at(s, a);
        mb += ds.raw_at(s, b);
    }
    ma /= t;
    mb /= t;
    double cab = 0, ca = 0, cb = 0;
    for (std::size_t s = 0; s < t; ++s) {
        const double da = ds.raw_at(s, a) - ma;
        const double db = ds.raw_at(s, b) - mb;
        cab += da * db;
        ca += da * da;
        cb += db * db;
    }
    return cab / std::sqrt(ca * cb);
}

}  // namespace

TEST_CASE("load_csv happy path and error paths") {
    auto good = write_tmp("good.csv",
                          "timestamp,a,b,c\n"
                          "0,1.0,2.0,3.0\n1,1.5,2.5,3.5\n2,2.0,3.0,4.0\n"
                          "3,2.5,3.5,4.5\n4,3.0,4.0,5.0\n5,3.5,4.5,5.5\n"
                          "6,4.0,5.0,6.0\n7,4.5,5.5,6.5\n8,5.0,6.0,7.0\n"
                          "9,5.5,6.5,7.5\n");
    TimeSeriesDataset ds = load_csv(good, {});
    CHECK(ds.n_sensors() == 3);
    CHECK(ds.n_steps() == 10);
    CHECK(ds.raw_at(1, 2) == 3.5);

    auto bad_cell = write_tmp("bad_cell.csv", "timestamp,a\n0,1.0\n1,oops\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(bad_cell, {})),
                         doctest::Contains(":3"), parse_error);

    auto dup = write_tmp("dup.csv", "timestamp,a\n0,1.0\n0,2.0\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(dup, {})),
                         doctest::Contains("duplicate"), parse_error);

    auto unsorted = write_tmp("unsorted.csv", "timestamp,a\n1,1.0\n0,2.0\n");
    CHECK_THROWS_AS(static_cast<void>(load_csv(unsorted, {})), parse_error);

    auto ragged = write_tmp("ragged.csv", "timestamp,a,b\n0,1.0,2.0\n1,1.0\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(ragged, {})),
                         doctest::Contains(":3"), parse_error);

    // missing values: rejected by default, forward-filled when enabled
    auto missing = write_tmp("missing.csv", "timestamp,a\n0,1.0\n1,\n");
    CHECK_THROWS_AS(static_cast<void>(load_csv(missing, {})), parse_error);
    CsvSchema ffill;
    ffill.forward_fill_missing = true;
    TimeSeriesDataset filled = load_csv(missing, ffill);
    CHECK(filled.raw_at(1, 0) == 1.0);

    // label columns parse into per-sensor flags
    auto labeled = write_tmp("labeled.csv",
                             "timestamp,a,label_a\n0,1.0,0\n1,2.0,1\n2,3.0,0\n");
    TimeSeriesDataset lds = load_csv(labeled, {});
    CHECK(lds.label_at(1, 0));
    CHECK(!lds.label_at(0, 0));
}

TEST_CASE("min_max_normalize uses train statistics only") {
    TimeSeriesDataset ds;
    ds.sensor_ids = {"a"};
    ds.raw = {2.0, 4.0, 6.0, 8.0};
    ds.labels.assign(4, 0);
    ds.train_range = {0, 3};
    ds.val_range = {3, 3};
    ds.test_range = {3, 4};
    min_max_normalize(ds);
    CHECK(ds.norm_at(0, 0) == 0.0);
    CHECK(ds.norm_at(1, 0) == 0.5);
    CHECK(ds.norm_at(2, 0) == 1.0);
    // test value 8 with train min 2 max 6 -> 1.5, unclipped by default
    CHECK(ds.norm_at(3, 0) == doctest::Approx(1.5));

    // round trip
    for (std::size_t t = 0; t < 4; ++t)
        CHECK(std::fabs(ds.denormalize(0, ds.norm_at(t, 0)) - ds.raw_at(t, 0)) <
              1e-9 * std::max(1.0, std::fabs(ds.raw_at(t, 0))));

    TimeSeriesDataset flat;
    flat.sensor_ids = {"c"};
    flat.raw = {1.0, 1.0, 1.0};
    flat.labels.assign(3, 0);
    flat.train_range = {0, 3};
    CHECK_THROWS_WITH_AS(min_max_normalize(flat), doctest::Contains("c"),
                         numeric_error);
}

TEST_CASE("sliding window count convention") {
    // target step must exist inside the split
    CHECK(sliding_window_count(120, 100, 10) == 2);  // t = 100, 110
    CHECK(sliding_window_count(105, 100, 1) == 5);   // t = 100..104
    CHECK_THROWS_AS(sliding_window_count(100, 100, 10), dim_error);
    CHECK_THROWS_AS(sliding_window_count(50, 100, 10), dim_error);

    // fuzz against an enumeration oracle
    Rng rng(12);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t w = 1 + rng.uniform_index(30);
        const std::size_t len = w + 1 + rng.uniform_index(100);
        const std::size_t stride = 1 + rng.uniform_index(15);
        std::size_t count = 0;
        for (std::size_t t = w; t < len; t += stride) ++count;
        CHECK(sliding_window_count(len, w, stride) == count);
    }
}

TEST_CASE("sliding_windows slices features and targets correctly") {
    TimeSeriesDataset ds;
    ds.sensor_ids = {"a", "b"};
    const std::size_t t_total = 30;
    for (std::size_t t = 0; t < t_total; ++t) {
        ds.raw.push_back(static_cast<double>(t));          // sensor a: ramp
        ds.raw.push_back(static_cast<double>(2 * t + 1));  // sensor b
    }
    ds.labels.assign(t_total * 2, 0);
    ds.window = 5;
    ds.stride = 3;
    ds.train_range = {0, 20};
    ds.val_range = {20, 25};
    ds.test_range = {25, 30};
    min_max_normalize(ds);
    auto segs = sliding_windows(ds, Split::train);
    CHECK(segs.size() == sliding_window_count(20, 5, 3));
    const Segment& s0 = segs[0];
    CHECK(s0.target_time == 5);
    CHECK(s0.features.rows() == 2);
    CHECK(s0.features.cols() == 5);
    // feature cell (a, 0) is step 0 normalized
    CHECK(s0.features.at(0, 0) == ds.norm_at(0, 0));
    CHECK(s0.features.at(0, 4) == ds.norm_at(4, 0));
    CHECK(s0.target[0] == ds.norm_at(5, 0));
}

TEST_CASE("synthesize_network determinism and coupling effects") {
    SynthesisConfig cfg;
    cfg.n_sensors = 8;
    cfg.n_steps = 5000;
    cfg.coupling = 0.0;
    cfg.seed = 99;
    TimeSeriesDataset a = synthesize_network(cfg);
    TimeSeriesDataset b = synthesize_network(cfg);
    CHECK(a.raw == b.raw);  // bitwise identical under the seed

    // coupling 0: pairwise correlations statistically near zero
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = i + 1; j < 8; ++j)
            CHECK(std::fabs(correlation(a, i, j)) < 0.2);

    // strong coupling: planted parent-child pairs beat non-adjacent pairs
    cfg.coupling = 0.9;
    TimeSeriesDataset c = synthesize_network(cfg);
    REQUIRE(!c.planted_edges.empty());
    double planted_sum = 0.0;
    for (const auto& [p, ch] : c.planted_edges)
        planted_sum += std::fabs(correlation(c, p, ch));
    const double planted_mean = planted_sum / c.planted_edges.size();
    double other_sum = 0.0;
    std::size_t other_n = 0;
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = i + 1; j < 8; ++j) {
            bool adjacent = false;
            for (const auto& [p, ch] : c.planted_edges)
                if ((p == i && ch == j) || (p == j && ch == i)) adjacent = true;
            if (!adjacent) {
                other_sum += std::fabs(correlation(c, i, j));
                ++other_n;
            }
        }
    CHECK(planted_mean > other_sum / other_n);

    CHECK_THROWS_AS(synthesize_network({3, 5000, 0.5, 0, 0}), config_error);
    CHECK_THROWS_AS(synthesize_network({8, 100, 0.5, 0, 0}), config_error);
}

TEST_CASE("inject_anomalies policy, determinism and labeling") {
    SynthesisConfig scfg;
    scfg.n_sensors = 6;
    scfg.n_steps = 4000;
    scfg.coupling = 0.5;
    scfg.seed = 1;
    TimeSeriesDataset ds = synthesize_network(scfg);
    assign_splits(ds, 0.7, 0.1);
    TimeSeriesDataset before = ds;

    InjectionConfig icfg;
    icfg.rate = 0.005;
    icfg.seed = 7;
    CHECK_THROWS_AS(inject_anomalies(ds, Split::train, icfg), policy_error);

    inject_anomalies(ds, Split::test, icfg);
    REQUIRE(!ds.injections.empty());
    // every labeled step changed; every unlabeled step unchanged
    std::size_t labeled = 0;
    for (std::size_t t = 0; t < ds.n_steps(); ++t) {
        for (std::size_t i = 0; i < ds.n_sensors(); ++i) {
            if (ds.label_at(t, i)) {
                ++labeled;
                CHECK(t >= ds.test_range.begin);
                CHECK(ds.raw_at(t, i) != before.raw_at(t, i));
            } else {
                CHECK(ds.raw_at(t, i) == before.raw_at(t, i));
            }
        }
    }
    CHECK(labeled > 0);

    // determinism: identical burst layout under the same seed
    TimeSeriesDataset ds2 = before;
    inject_anomalies(ds2, Split::test, icfg);
    CHECK(ds2.raw == ds.raw);
    CHECK(ds2.labels == ds.labels);

    // rate 0 is a no-op
    TimeSeriesDataset ds3 = before;
    InjectionConfig none = icfg;
    none.rate = 0.0;
    inject_anomalies(ds3, Split::test, none);
    CHECK(ds3.raw == before.raw);
    CHECK(std::count(ds3.labels.begin(), ds3.labels.end(), 1) == 0);

    // burst lengths are resampled away from zero
    for (const auto& r : ds.injections) CHECK(r.length >= 1);
}

TEST_CASE("write_csv/load_csv round-trips raw values bitwise") {
    SynthesisConfig scfg;
    scfg.n_sensors = 5;
    scfg.n_steps = 2100;
    scfg.coupling = 0.6;
    scfg.seed = 3;
    TimeSeriesDataset ds = synthesize_network(scfg);
    assign_splits(ds, 0.7, 0.1);
    InjectionConfig icfg;
    icfg.rate = 0.01;
    icfg.seed = 2;
    inject_anomalies(ds, Split::test, icfg);

    auto dir = std::filesystem::temp_directory_path() / "beta_data_rt";
    std::filesystem::create_directories(dir);
    write_csv(ds, dir / "rt.csv", "config=test seed=3");
    TimeSeriesDataset back = load_csv(dir / "rt.csv", {});
    CHECK(back.raw == ds.raw);
    CHECK(back.labels == ds.labels);
    CHECK(back.sensor_ids == ds.sensor_ids);
    std::filesystem::remove_all(dir);
}
