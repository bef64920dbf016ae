#include <doctest.h>

#include <cmath>

#include "trilstm/metrics.hpp"
#include "trilstm/rng.hpp"

using namespace trilstm;

namespace {

// O(P*N) pairwise count, the AUC reference
double auc_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1)
            continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0)
                continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("confusion arithmetic from hand counts") {
    // tp=3 fn=1 tn=4 fp=1
    const std::vector<double> scores = {0.9, 0.8, 0.7, 0.2, 0.1, 0.2, 0.3, 0.4, 0.9};
    const std::vector<int> labels = {1, 1, 1, 1, 0, 0, 0, 0, 0};
    const MetricsReport r = compute_metrics(scores, labels);
    CHECK(r.tp == 3);
    CHECK(r.fn == 1);
    CHECK(r.tn == 4);
    CHECK(r.fp == 1);
    CHECK(r.recall == doctest::Approx(0.75));
    CHECK(r.specificity == doctest::Approx(0.80));
    CHECK(r.accuracy == doctest::Approx(7.0 / 9.0));
}

TEST_CASE("perfect separation gives AUC 1") {
    const std::vector<double> scores = {0.9, 0.8, 0.2, 0.1};
    const std::vector<int> labels = {1, 1, 0, 0};
    CHECK(rank_auc(scores, labels) == doctest::Approx(1.0));
}

TEST_CASE("rank AUC equals the pairwise oracle on random scores with ties") {
    RngStream rng(42);
    for (int trial = 0; trial < 30; ++trial) {
        RngStream t = rng.child(static_cast<std::uint64_t>(trial));
        const std::size_t n = 200;
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            // quantized scores force plenty of ties
            scores[i] = std::floor(t.uniform() * 20.0) / 20.0;
            labels[i] = t.uniform() < 0.4 ? 1 : 0;
            has_pos = has_pos || labels[i] == 1;
            has_neg = has_neg || labels[i] == 0;
        }
        if (!has_pos) labels[0] = 1;
        if (!has_neg) labels[1] = 0;
        CHECK(std::abs(rank_auc(scores, labels) - auc_oracle(scores, labels)) < 1e-12);
    }
}

TEST_CASE("single-class labels make AUC undefined") {
    const std::vector<double> scores = {0.9, 0.8};
    const std::vector<int> labels = {1, 1};
    CHECK_THROWS_AS(compute_metrics(scores, labels), ConfigError);
    const MetricsReport r = compute_metrics(scores, labels, false);
    CHECK(std::isnan(r.auc));
    CHECK(r.recall == doctest::Approx(1.0)); // still computed where defined
    CHECK(std::isnan(r.specificity));        // no negatives present
}

TEST_CASE("accuracy times total equals tp plus tn exactly") {
    RngStream rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        RngStream t = rng.child(static_cast<std::uint64_t>(trial));
        const std::size_t n = 50 + t.below(100);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = t.uniform();
            labels[i] = static_cast<int>(t.below(2));
        }
        const MetricsReport r = compute_metrics(scores, labels, false);
        CHECK(r.accuracy * static_cast<double>(n) == r.tp + r.tn);
    }
}

TEST_CASE("AUC is invariant under strictly monotone transforms") {
    RngStream rng(8);
    const std::size_t n = 150;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = rng.normal();
        labels[i] = static_cast<int>(rng.below(2));
    }
    labels[0] = 1;
    labels[1] = 0;
    const double base = rank_auc(scores, labels);

    auto transformed = scores;
    for (double& s : transformed)
        s = std::exp(0.5 * s) + 3.0;
    CHECK(rank_auc(transformed, labels) == doctest::Approx(base).epsilon(1e-12));

    for (double& s : transformed)
        s = std::atan(s) * 7.0;
    CHECK(rank_auc(transformed, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("mean_report averages every field") {
    MetricsReport a, b;
    a.auc = 0.6;
    a.recall = 0.5;
    a.specificity = 0.7;
    a.accuracy = 0.6;
    a.tp = 10;
    a.fn = 10;
    a.tn = 14;
    a.fp = 6;
    b = a;
    b.auc = 0.8;
    b.accuracy = 0.8;
    const MetricsReport m = mean_report({a, b});
    CHECK(m.auc == doctest::Approx(0.7));
    CHECK(m.accuracy == doctest::Approx(0.7));
    CHECK(m.tp == doctest::Approx(10));
}

TEST_CASE("empty input rejected") {
    CHECK_THROWS_AS(compute_metrics({}, {}), ConfigError);
}

} // TEST_SUITE
