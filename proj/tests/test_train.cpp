#include <doctest.h>

#include <cmath>
#include <utility>

#include "trilstm/bench.hpp"
#include "trilstm/train.hpp"

using namespace trilstm;

namespace {

// tiny setup shared by the harness tests
TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.embed_dim = 4;
    cfg.hidden_dim = 6;
    cfg.mlp_hidden = 5;
    cfg.shuffle_copies = 2;
    cfg.eval_repeats = 3;
    cfg.minibatch = 32;
    cfg.seed = 7;
    return cfg;
}

std::pair<Dataset, Dataset> tiny_data(double separability = 1.0, std::size_t n = 120,
                                      std::uint64_t seed = 7) {
    GeneratorConfig gcfg;
    gcfg.n_patients = n;
    gcfg.seed = seed;
    gcfg.separability = separability;
    const Dataset raw = generate_synthetic(gcfg);
    auto [train_raw, test_raw] = split_75_25(raw, seed);
    const NormStats stats = fit_normalizer(train_raw);
    return {apply_normalizer(train_raw, stats), apply_normalizer(test_raw, stats)};
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("training twice with one seed reproduces the parameters exactly") {
    auto [train_n, test_n] = tiny_data();
    (void)test_n;
    const TrainConfig cfg = tiny_config();
    const TrainResult a = train(ModelKind::TriLstm, train_n, cfg);
    const TrainResult b = train(ModelKind::TriLstm, train_n, cfg);
    const auto ta = std::as_const(a.model).tensors();
    const auto tb = std::as_const(b.model).tensors();
    REQUIRE(ta.size() == tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i)
        CHECK(max_abs_diff(*ta[i], *tb[i]) <= 1e-12);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t e = 0; e < a.trace.size(); ++e)
        CHECK(a.trace[e].total == b.trace[e].total);
}

TEST_CASE("loss improves on separable data") {
    auto [train_n, test_n] = tiny_data(2.0, 160);
    (void)test_n;
    TrainConfig cfg = tiny_config();
    cfg.epochs = 8;
    for (ModelKind kind : {ModelKind::TriLstm, ModelKind::Lstm, ModelKind::Rnn}) {
        const TrainResult r = train(kind, train_n, cfg);
        CHECK(r.trace.back().total < r.trace.front().total);
        for (const auto& e : r.trace)
            CHECK(std::isfinite(e.total));
    }
}

TEST_CASE("epochs must be at least one") {
    TrainConfig cfg = tiny_config();
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("alpha and lambda ranges are enforced") {
    TrainConfig cfg = tiny_config();
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.alpha = 10.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.alpha = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("evaluate with one identity pass equals a plain pass") {
    auto [train_n, test_n] = tiny_data();
    TrainConfig cfg = tiny_config();
    cfg.shuffle_order = false;
    const TrainResult r = train(ModelKind::TriLstm, train_n, cfg);

    TrainConfig eval_cfg = cfg;
    eval_cfg.eval_repeats = 1;
    const MetricsReport rep = evaluate(r.model, test_n, eval_cfg);

    std::vector<double> scores;
    std::vector<int> labels;
    const auto id = identity_permutation(17);
    for (const auto& rec : test_n.records) {
        scores.push_back(positive_probability(r.model, rec, id));
        labels.push_back(rec.label);
    }
    const MetricsReport plain = compute_metrics(scores, labels);
    CHECK(rep.auc == doctest::Approx(plain.auc).epsilon(1e-12));
    CHECK(rep.accuracy == doctest::Approx(plain.accuracy).epsilon(1e-12));
    CHECK(rep.tp == plain.tp);
}

TEST_CASE("evaluate reports the mean of the per-pass reports") {
    auto [train_n, test_n] = tiny_data();
    TrainConfig cfg = tiny_config();
    cfg.shuffle_order = true;
    const TrainResult r = train(ModelKind::TriLstm, train_n, cfg);

    const auto passes = evaluate_passes(r.model, test_n, cfg);
    REQUIRE(passes.size() == cfg.eval_repeats);
    const MetricsReport mean = evaluate(r.model, test_n, cfg);
    double auc = 0.0, acc = 0.0;
    for (const auto& p : passes) {
        auc += p.auc;
        acc += p.accuracy;
    }
    CHECK(mean.auc == doctest::Approx(auc / passes.size()).epsilon(1e-12));
    CHECK(mean.accuracy == doctest::Approx(acc / passes.size()).epsilon(1e-12));
}

TEST_CASE("evaluate is deterministic for a fixed seed") {
    auto [train_n, test_n] = tiny_data();
    TrainConfig cfg = tiny_config();
    cfg.shuffle_order = true;
    const TrainResult r = train(ModelKind::TriLstm, train_n, cfg);
    const MetricsReport a = evaluate(r.model, test_n, cfg);
    const MetricsReport b = evaluate(r.model, test_n, cfg);
    CHECK(a.auc == b.auc);
    CHECK(a.recall == b.recall);
    CHECK(a.specificity == b.specificity);
    CHECK(a.accuracy == b.accuracy);
}

TEST_CASE("evaluate rejects an empty test set") {
    auto [train_n, test_n] = tiny_data();
    (void)test_n;
    TrainConfig cfg = tiny_config();
    cfg.epochs = 1;
    const TrainResult r = train(ModelKind::Rnn, train_n, cfg);
    Dataset empty;
    CHECK_THROWS_AS(evaluate(r.model, empty, cfg), ConfigError);
}

TEST_CASE("evaluate never mutates parameters") {
    auto [train_n, test_n] = tiny_data();
    TrainConfig cfg = tiny_config();
    const TrainResult r = train(ModelKind::TriLstm, train_n, cfg);
    std::vector<Matrix> before;
    for (const Matrix* t : std::as_const(r.model).tensors())
        before.push_back(*t);
    evaluate(r.model, test_n, cfg);
    const auto after = std::as_const(r.model).tensors();
    for (std::size_t i = 0; i < after.size(); ++i)
        CHECK(*after[i] == before[i]);
}

TEST_CASE("benchmark grid has six rows and is reproducible") {
    GeneratorConfig gcfg;
    gcfg.n_patients = 60;
    gcfg.seed = 5;
    const Dataset raw = generate_synthetic(gcfg);
    TrainConfig cfg = tiny_config();
    cfg.epochs = 1;
    cfg.eval_repeats = 2;

    const BenchResult a = benchmark_grid(raw, cfg, 2, 1);
    REQUIRE(a.cells.size() == 6);
    CHECK(a.cells[0].model == ModelKind::Lstm);
    CHECK_FALSE(a.cells[0].order_shuffled);
    CHECK(a.cells[5].model == ModelKind::TriLstm);
    CHECK(a.cells[5].order_shuffled);
    for (const auto& cell : a.cells)
        CHECK(cell.per_seed.size() == 2);

    const BenchResult b = benchmark_grid(raw, cfg, 2, 2); // parallel run, same bytes
    CHECK(bench_to_json(a) == bench_to_json(b));
    CHECK(format_bench_table(a) == format_bench_table(b));

    const std::string table = format_bench_table(a);
    CHECK(table.find("Model") != std::string::npos);
    CHECK(table.find("Specificity") != std::string::npos);
    CHECK(table.find("TRI-LSTM") != std::string::npos);
}

TEST_CASE("overshooting learning rates surface as training errors") {
    auto [train_n, test_n] = tiny_data();
    (void)test_n;
    TrainConfig cfg = tiny_config();
    cfg.opt.kind = OptimizerKind::SgdMomentum;
    cfg.opt.lr = 1e12; // blow the parameters up
    cfg.opt.momentum = 0.99;
    cfg.epochs = 30;
    try {
        train(ModelKind::Rnn, train_n, cfg);
        // divergence is likely but not guaranteed; only the error form matters
    } catch (const TrainingError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("epoch") != std::string::npos);
        CHECK(msg.find("batch") != std::string::npos);
    }
}

} // TEST_SUITE
