#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "beta/errors.hpp"
#include "beta/metrics.hpp"
#include "beta/rng.hpp"
#include "testutil.hpp"

using namespace beta;

TEST_CASE("f1 examples") {
    CHECK(f1({1, 0, 0, 0}) == 1.0);
    CHECK(f1({0, 3, 2, 0}) == 0.0);
    ConfusionCounts c{3, 1, 1, 10};
    CHECK(precision(c) == doctest::Approx(0.75));
    CHECK(recall(c) == doctest::Approx(0.75));
    CHECK(f1(c) == doctest::Approx(0.75));
    // bounded by min(2P, 2R)
    ConfusionCounts d{1, 9, 0, 0};
    CHECK(f1(d) <= 2.0 * precision(d) + 1e-12);
    CHECK(f1(d) <= 2.0 * recall(d) + 1e-12);
}

TEST_CASE("auc_pr examples") {
    // perfectly separated scores
    CHECK(auc_pr({0.9, 0.8, 0.2, 0.1}, {true, true, false, false}) ==
          doctest::Approx(1.0));
    // all scores identical: area equals the positive rate
    CHECK(auc_pr({0.5, 0.5, 0.5, 0.5}, {true, false, false, false}) ==
          doctest::Approx(0.25));
    // no positives is undefined
    CHECK_THROWS_AS(auc_pr({0.1, 0.2}, {false, false}), metric_error);
}

TEST_CASE("auc_pr matches the exhaustive threshold-enumeration oracle") {
    Rng rng(77);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 5 + rng.uniform_index(25);
        std::vector<double> scores(n);
        std::vector<bool> labels(n);
        bool any_pos = false;
        for (std::size_t i = 0; i < n; ++i) {
            // coarse grid so ties occur often
            scores[i] = std::round(rng.uniform(0.0, 8.0)) / 8.0;
            labels[i] = rng.uniform() < 0.3;
            any_pos = any_pos || labels[i];
        }
        if (!any_pos) labels[0] = true;
        CHECK(std::fabs(auc_pr(scores, labels) -
                        testutil::brute_auc_pr(scores, labels)) < 1e-12);
    }
}

TEST_CASE("auc_pr is invariant to strictly monotone score transforms") {
    Rng rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 10 + rng.uniform_index(20);
        std::vector<double> scores(n);
        std::vector<bool> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = std::round(rng.uniform(-4.0, 4.0) * 4.0) / 4.0;
            labels[i] = rng.uniform() < 0.4;
        }
        labels[0] = true;
        std::vector<double> transformed(n);
        for (std::size_t i = 0; i < n; ++i)
            transformed[i] = std::exp(0.7 * scores[i]) + 3.0;
        CHECK(std::fabs(auc_pr(scores, labels) - auc_pr(transformed, labels)) < 1e-12);
    }
}

TEST_CASE("fta examples") {
    CHECK(fta({true, false, true}, {true, false, true}) == 1.0);
    CHECK(fta({true, false}, {false, true}) == 0.0);
    std::vector<bool> dec(10, false), truth(10, false);
    for (int i = 0; i < 3; ++i) dec[i] = true;  // 3 wrong
    CHECK(fta(dec, truth) == doctest::Approx(0.7));
    CHECK_THROWS_AS(fta({}, {}), metric_error);
}
