#include "trilstm/bench.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "trilstm/checkpoint.hpp"

namespace trilstm {

namespace {

struct Job {
    std::size_t cell;
    std::size_t slot;
    ModelKind kind;
    bool order;
    std::uint64_t seed;
};

MetricsReport run_cell(const Dataset& raw, const TrainConfig& base_cfg, ModelKind kind,
                       bool order, std::uint64_t seed) {
    TrainConfig cfg = base_cfg;
    cfg.seed = seed;
    cfg.shuffle_order = order;

    auto [train_raw, test_raw] = split_75_25(raw, seed);
    const NormStats stats = fit_normalizer(train_raw);
    const Dataset train_n = apply_normalizer(train_raw, stats);
    const Dataset test_n = apply_normalizer(test_raw, stats);

    TrainResult tr = train(kind, train_n, cfg);
    return evaluate(tr.model, test_n, cfg);
}

} // namespace

BenchResult benchmark_grid(const Dataset& raw, const TrainConfig& base_cfg,
                           std::size_t seed_count, std::size_t jobs) {
    if (seed_count < 1)
        throw ConfigError("benchmark needs at least one seed");
    if (jobs < 1)
        jobs = 1;
    base_cfg.validate();

    BenchResult result;
    for (std::size_t i = 0; i < seed_count; ++i)
        result.seeds.push_back(base_cfg.seed + i);

    const std::pair<ModelKind, bool> layout[6] = {
        {ModelKind::Lstm, false},  {ModelKind::Lstm, true},  {ModelKind::Rnn, false},
        {ModelKind::Rnn, true},    {ModelKind::TriLstm, false}, {ModelKind::TriLstm, true},
    };
    result.cells.resize(6);
    std::vector<Job> tasks;
    for (std::size_t c = 0; c < 6; ++c) {
        result.cells[c].model = layout[c].first;
        result.cells[c].order_shuffled = layout[c].second;
        result.cells[c].per_seed.resize(seed_count);
        for (std::size_t s = 0; s < seed_count; ++s)
            tasks.push_back({c, s, layout[c].first, layout[c].second, result.seeds[s]});
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mtx;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size())
                return;
            const Job& job = tasks[i];
            try {
                result.cells[job.cell].per_seed[job.slot] =
                    run_cell(raw, base_cfg, job.kind, job.order, job.seed);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mtx);
                if (!first_error)
                    first_error = std::current_exception();
                return;
            }
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < std::min(jobs, tasks.size()); ++i)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    if (first_error)
        std::rethrow_exception(first_error);

    for (auto& cell : result.cells) {
        cell.mean = mean_report(cell.per_seed);
        cell.mean.model = to_string(cell.model);
        cell.mean.order_shuffled = cell.order_shuffled;
    }
    return result;
}

std::string format_bench_table(const BenchResult& r) {
    auto fmt = [](double v) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.4f", v);
        return std::string(buf);
    };
    std::string out;
    char line[128];
    std::snprintf(line, sizeof(line), "%-9s %-6s %-8s %-8s %-12s %-8s\n", "Model", "Order", "AUC",
                  "Recall", "Specificity", "Accuracy");
    out += line;
    out += std::string(55, '-') + "\n";
    for (const auto& cell : r.cells) {
        const char* name = cell.model == ModelKind::TriLstm
                               ? "TRI-LSTM"
                               : (cell.model == ModelKind::Lstm ? "LSTM" : "RNN");
        std::snprintf(line, sizeof(line), "%-9s %-6s %-8s %-8s %-12s %-8s\n", name,
                      cell.order_shuffled ? "yes" : "no", fmt(cell.mean.auc).c_str(),
                      fmt(cell.mean.recall).c_str(), fmt(cell.mean.specificity).c_str(),
                      fmt(cell.mean.accuracy).c_str());
        out += line;
    }
    return out;
}

std::string bench_to_json(const BenchResult& r) {
    nlohmann::json j;
    j["seeds"] = r.seeds;
    j["rows"] = nlohmann::json::array();
    for (const auto& cell : r.cells) {
        nlohmann::json row;
        row["model"] = to_string(cell.model);
        row["order_shuffled"] = cell.order_shuffled;
        row["mean"] = to_json(cell.mean);
        row["per_seed"] = nlohmann::json::array();
        for (const auto& rep : cell.per_seed)
            row["per_seed"].push_back(to_json(rep));
        j["rows"].push_back(std::move(row));
    }
    return j.dump(2) + "\n";
}

} // namespace trilstm
