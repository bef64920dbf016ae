#pragma once

#include <string>
#include <vector>

#include "trilstm/dataset.hpp"
#include "trilstm/metrics.hpp"
#include "trilstm/train.hpp"

namespace trilstm {

struct BenchCell {
    ModelKind model;
    bool order_shuffled = false;
    MetricsReport mean;
    std::vector<MetricsReport> per_seed;
};

struct BenchResult {
    std::vector<BenchCell> cells; // six rows: {LSTM, RNN, TRI-LSTM} x {order off, on}
    std::vector<std::uint64_t> seeds;
};

// Full protocol per (model, order, seed): 75:25 split with the shared seed,
// normalizer fitted on train only, training, averaged evaluation. Cells are
// independent jobs; `jobs` bounds the worker threads. Assembly is by cell
// index, so the result does not depend on scheduling.
BenchResult benchmark_grid(const Dataset& raw, const TrainConfig& base_cfg,
                           std::size_t seed_count = 5, std::size_t jobs = 1);

// Aligned text table with columns Model, Order, AUC, Recall, Specificity,
// Accuracy.
std::string format_bench_table(const BenchResult& r);
std::string bench_to_json(const BenchResult& r);

} // namespace trilstm
