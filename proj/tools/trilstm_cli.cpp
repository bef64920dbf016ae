#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "trilstm/bench.hpp"
#include "trilstm/checkpoint.hpp"
#include "trilstm/dataset.hpp"
#include "trilstm/gradcheck.hpp"
#include "trilstm/graph.hpp"
#include "trilstm/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trilstm;

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot open '" + path.string() + "' for writing");
    f << content;
}

json load_config_file(const std::string& path) {
    if (path.empty())
        return json::object();
    std::ifstream f(path);
    if (!f)
        throw ConfigError("config file not found: " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw ParseError("bad config JSON in '" + path + "': " + e.what());
    }
}

void require_exists(const std::string& path, const char* what) {
    if (!fs::exists(path))
        throw ConfigError(std::string(what) + " not found: " + path);
}

// every command echoes its fully resolved configuration next to its outputs
void echo_config(const fs::path& out_dir, const std::string& command, const json& resolved) {
    json j = resolved;
    j["command"] = command;
    write_file(out_dir / "resolved_config.json", j.dump(2) + "\n");
}

fs::path prepare_out_dir(const std::string& out) {
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

struct CommonFlags {
    std::string config_path;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file; flags override its values");
        cmd->add_option("--out", out, "output directory")->capture_default_str();
        cmd->add_option("--seed", seed, "seed override");
        cmd->add_option("--jobs", jobs, "worker threads for grid cells")->capture_default_str();
    }
};

GeneratorConfig resolve_generator(const json& file_cfg, const CommonFlags& common) {
    GeneratorConfig cfg;
    if (file_cfg.contains("generator"))
        cfg = generator_config_from_json(file_cfg.at("generator"));
    if (common.seed)
        cfg.seed = *common.seed;
    return cfg;
}

TrainConfig resolve_train(const json& file_cfg, const CommonFlags& common) {
    TrainConfig cfg;
    if (file_cfg.contains("train"))
        cfg = train_config_from_json(file_cfg.at("train"));
    if (common.seed)
        cfg.seed = *common.seed;
    return cfg;
}

std::string loss_trace_csv(const std::vector<EpochLoss>& trace) {
    std::string out = "epoch,total,loss1,loss2,loss_final\n";
    for (std::size_t e = 0; e < trace.size(); ++e) {
        out += std::to_string(e + 1);
        out += "," + format_double(trace[e].total);
        out += "," + format_double(trace[e].loss1);
        out += "," + format_double(trace[e].loss2);
        out += "," + format_double(trace[e].loss_final);
        out += "\n";
    }
    return out;
}

Dataset select_split(const Dataset& full, const std::string& split, std::uint64_t seed) {
    if (split == "all")
        return full;
    auto [train_part, test_part] = split_75_25(full, seed);
    if (split == "train")
        return train_part;
    if (split == "test")
        return test_part;
    throw ConfigError("unknown split '" + split + "' (expected test, train or all)");
}

int cmd_gen_data(const CommonFlags& common, const GeneratorConfig& flag_cfg,
                 const std::array<bool, 4>& flag_set) {
    json file_cfg = load_config_file(common.config_path);
    GeneratorConfig cfg = resolve_generator(file_cfg, common);
    if (flag_set[0]) cfg.n_patients = flag_cfg.n_patients;
    if (flag_set[1]) cfg.glaucoma_fraction = flag_cfg.glaucoma_fraction;
    if (flag_set[2]) cfg.noise_scale = flag_cfg.noise_scale;
    if (flag_set[3]) cfg.separability = flag_cfg.separability;
    cfg.validate();

    const fs::path out_dir = prepare_out_dir(common.out);
    const Dataset d = generate_synthetic(cfg);
    save_csv(d, (out_dir / "dataset.csv").string());
    echo_config(out_dir, "gen-data", json{{"generator", to_json(cfg)}});
    std::cout << "wrote " << (out_dir / "dataset.csv").string() << " (" << d.size()
              << " records)\n";
    return 0;
}

void apply_train_overrides(TrainConfig& cfg, const CLI::App* cmd, std::size_t epochs,
                           double lambda, double alpha, bool shuffle, bool no_shuffle,
                           std::size_t copies, std::string optimizer, double lr,
                           std::size_t hidden, std::size_t embed, double dropout) {
    if (cmd->count("--epochs")) cfg.epochs = epochs;
    if (cmd->count("--lambda")) cfg.lambda = lambda;
    if (cmd->count("--alpha")) cfg.alpha = alpha;
    if (shuffle) cfg.shuffle_order = true;
    if (no_shuffle) cfg.shuffle_order = false;
    if (cmd->count("--shuffle-copies")) cfg.shuffle_copies = copies;
    if (cmd->count("--optimizer")) cfg.opt.kind = optimizer_kind_from_string(optimizer);
    if (cmd->count("--lr")) cfg.opt.lr = lr;
    if (cmd->count("--hidden-dim")) cfg.hidden_dim = hidden;
    if (cmd->count("--embed-dim")) cfg.embed_dim = embed;
    if (cmd->count("--dropout")) cfg.dropout = dropout;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TRI-LSTM glaucoma biomarker relationship miner"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic biomarker dataset");
    CommonFlags gen_common;
    gen_common.attach(gen);
    GeneratorConfig gen_flags;
    gen->add_option("--n", gen_flags.n_patients, "number of patients");
    gen->add_option("--glaucoma-fraction", gen_flags.glaucoma_fraction, "positive-class fraction");
    gen->add_option("--noise-scale", gen_flags.noise_scale, "noise multiplier");
    gen->add_option("--separability", gen_flags.separability, "class mean gap multiplier");

    // shared train-ish flags
    std::string data_path, model_name = "tri-lstm", checkpoint_path, split = "test";
    std::string optimizer_name = "radam";
    std::size_t epochs = 50, copies = 4, hidden = 12, embed = 6, bench_seeds = 5;
    std::size_t eval_repeats = 10;
    double lambda = 0.5, alpha = 5.0, lr = 1e-3, dropout = 0.1;
    bool shuffle = false, no_shuffle = false;

    auto add_train_flags = [&](CLI::App* cmd) {
        cmd->add_option("--epochs", epochs, "training epochs");
        cmd->add_option("--lambda", lambda, "head-1 loss weight");
        cmd->add_option("--alpha", alpha, "head-2 loss weight");
        cmd->add_flag("--shuffle-order", shuffle, "enable presentation-order augmentation");
        cmd->add_flag("--no-shuffle-order", no_shuffle, "disable presentation-order augmentation");
        cmd->add_option("--shuffle-copies", copies, "augmented views per record");
        cmd->add_option("--optimizer", optimizer_name, "radam or sgd-momentum");
        cmd->add_option("--lr", lr, "learning rate");
        cmd->add_option("--hidden-dim", hidden, "LSTM hidden size");
        cmd->add_option("--embed-dim", embed, "token embedding size");
        cmd->add_option("--dropout", dropout, "dropout rate");
    };

    auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
    CommonFlags train_common;
    train_common.attach(train_cmd);
    train_cmd->add_option("--data", data_path, "input CSV")->required();
    train_cmd->add_option("--model", model_name, "tri-lstm, lstm or rnn")->capture_default_str();
    add_train_flags(train_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint and write metrics JSON");
    CommonFlags eval_common;
    eval_common.attach(eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    eval_cmd->add_option("--data", data_path, "input CSV")->required();
    eval_cmd->add_option("--split", split, "test, train or all")->capture_default_str();
    eval_cmd->add_option("--eval-repeats", eval_repeats, "averaged evaluation passes");

    auto* bench_cmd = app.add_subcommand("bench", "run the model x order benchmark grid");
    CommonFlags bench_common;
    bench_common.attach(bench_cmd);
    bench_cmd->add_option("--data", data_path, "input CSV (generated when omitted)");
    bench_cmd->add_option("--bench-seeds", bench_seeds, "seeds averaged per cell")
        ->capture_default_str();
    add_train_flags(bench_cmd);

    auto* graph_cmd = app.add_subcommand("graph", "extract decision graphs from a checkpoint");
    CommonFlags graph_common;
    graph_common.attach(graph_cmd);
    graph_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    graph_cmd->add_option("--data", data_path, "input CSV")->required();
    graph_cmd->add_option("--split", split, "test, train or all")->capture_default_str();

    auto* gc_cmd = app.add_subcommand("gradcheck", "verify analytic gradients numerically");
    CommonFlags gc_common;
    gc_common.attach(gc_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            return cmd_gen_data(gen_common, gen_flags,
                                {gen->count("--n") > 0, gen->count("--glaucoma-fraction") > 0,
                                 gen->count("--noise-scale") > 0,
                                 gen->count("--separability") > 0});
        }

        if (train_cmd->parsed()) {
            require_exists(data_path, "data file");
            json file_cfg = load_config_file(train_common.config_path);
            TrainConfig cfg = resolve_train(file_cfg, train_common);
            apply_train_overrides(cfg, train_cmd, epochs, lambda, alpha, shuffle, no_shuffle,
                                  copies, optimizer_name, lr, hidden, embed, dropout);
            cfg.validate();
            const ModelKind kind = model_kind_from_string(
                train_cmd->count("--model") || !file_cfg.contains("model")
                    ? model_name
                    : file_cfg.at("model").get<std::string>());

            const fs::path out_dir = prepare_out_dir(train_common.out);
            const Dataset full = load_csv(data_path);
            auto [train_raw, test_raw] = split_75_25(full, cfg.seed);
            const NormStats stats = fit_normalizer(train_raw);
            const Dataset train_n = apply_normalizer(train_raw, stats);

            TrainResult result = train(kind, train_n, cfg);
            save_checkpoint((out_dir / "checkpoint.json").string(), result.model, cfg, stats);
            write_file(out_dir / "loss_trace.csv", loss_trace_csv(result.trace));
            echo_config(out_dir, "train",
                        json{{"train", to_json(cfg)},
                             {"model", to_string(kind)},
                             {"data", data_path}});
            std::cout << "trained " << to_string(kind) << " for " << cfg.epochs
                      << " epochs; final loss " << format_double(result.trace.back().total)
                      << "\n"
                      << "wrote " << (out_dir / "checkpoint.json").string() << "\n";
            return 0;
        }

        if (eval_cmd->parsed()) {
            require_exists(checkpoint_path, "checkpoint file");
            require_exists(data_path, "data file");
            Checkpoint ck = load_checkpoint(checkpoint_path);
            if (eval_cmd->count("--eval-repeats"))
                ck.config.eval_repeats = eval_repeats;
            if (eval_common.seed)
                ck.config.seed = *eval_common.seed;

            const fs::path out_dir = prepare_out_dir(eval_common.out);
            const Dataset full = load_csv(data_path);
            const Dataset part = select_split(full, split, ck.config.seed);
            const Dataset normalized = apply_normalizer(part, ck.stats);

            const MetricsReport report = evaluate(ck.model, normalized, ck.config);
            write_file(out_dir / "metrics.json", to_json(report).dump(2) + "\n");
            echo_config(out_dir, "eval",
                        json{{"train", to_json(ck.config)},
                             {"model", to_string(ck.model.kind)},
                             {"data", data_path},
                             {"split", split}});
            std::cout << "auc " << format_double(report.auc) << "  recall "
                      << format_double(report.recall) << "  specificity "
                      << format_double(report.specificity) << "  accuracy "
                      << format_double(report.accuracy) << "\n";
            return 0;
        }

        if (bench_cmd->parsed()) {
            json file_cfg = load_config_file(bench_common.config_path);
            TrainConfig cfg = resolve_train(file_cfg, bench_common);
            apply_train_overrides(cfg, bench_cmd, epochs, lambda, alpha, shuffle, no_shuffle,
                                  copies, optimizer_name, lr, hidden, embed, dropout);
            cfg.validate();
            if (file_cfg.contains("bench_seeds") && !bench_cmd->count("--bench-seeds"))
                bench_seeds = file_cfg.at("bench_seeds").get<std::size_t>();

            const fs::path out_dir = prepare_out_dir(bench_common.out);
            Dataset raw;
            json gen_echo;
            if (!data_path.empty()) {
                require_exists(data_path, "data file");
                raw = load_csv(data_path);
            } else {
                GeneratorConfig gcfg = resolve_generator(file_cfg, bench_common);
                raw = generate_synthetic(gcfg);
                gen_echo = to_json(gcfg);
            }

            BenchResult result = benchmark_grid(raw, cfg, bench_seeds, bench_common.jobs);
            const std::string table = format_bench_table(result);
            write_file(out_dir / "bench_table.txt", table);
            write_file(out_dir / "bench_results.json", bench_to_json(result));
            json echo{{"train", to_json(cfg)}, {"bench_seeds", bench_seeds}};
            if (!data_path.empty())
                echo["data"] = data_path;
            else
                echo["generator"] = gen_echo;
            echo_config(out_dir, "bench", echo);
            std::cout << table;
            return 0;
        }

        if (graph_cmd->parsed()) {
            require_exists(checkpoint_path, "checkpoint file");
            require_exists(data_path, "data file");
            Checkpoint ck = load_checkpoint(checkpoint_path);
            if (ck.model.kind != ModelKind::TriLstm)
                throw ConfigError("graph extraction needs a tri-lstm checkpoint");

            const fs::path out_dir = prepare_out_dir(graph_common.out);
            const Dataset full = load_csv(data_path);
            const Dataset part = select_split(full, split, ck.config.seed);
            const Dataset normalized = apply_normalizer(part, ck.stats);

            const GraphExtraction ex =
                extract_graph(ck.model.tri(), normalized, BiomarkerSchema::standard());
            const std::string tag =
                to_string(ck.model.kind) + "_seed" + std::to_string(ck.config.seed);
            auto emit = [&](const DecisionGraph& g) {
                const std::string base = "graph_" + tag + "_" + g.condition;
                write_file(out_dir / (base + ".dot"), export_dot(g));
                write_file(out_dir / (base + ".json"), export_json(g));
                std::cout << "wrote " << (out_dir / (base + ".dot")).string()
                          << " (subordination accuracy "
                          << format_double(score_graph(g, BiomarkerSchema::standard())) << ")\n";
            };
            if (ex.yes_graph) emit(*ex.yes_graph);
            if (ex.no_graph) emit(*ex.no_graph);
            for (const auto& notice : ex.notices)
                std::cout << "notice: " << notice << "\n";
            json influences = json::array();
            for (const auto& inf : ex.influences)
                influences.push_back({{"code", inf.code}, {"sensitivity", inf.mean_sensitivity}});
            write_file(out_dir / ("influences_" + tag + ".json"), influences.dump(2) + "\n");
            echo_config(out_dir, "graph",
                        json{{"checkpoint", checkpoint_path}, {"data", data_path},
                             {"split", split}});
            return 0;
        }

        if (gc_cmd->parsed()) {
            const std::uint64_t seed = gc_common.seed.value_or(7);
            const GradCheckReport report = run_gradcheck(seed);
            std::cout << format_gradcheck_report(report);
            const fs::path out_dir = prepare_out_dir(gc_common.out);
            json j;
            j["all_passed"] = report.all_passed;
            j["results"] = json::array();
            for (const auto& r : report.results)
                j["results"].push_back({{"name", r.name},
                                        {"passed", r.passed},
                                        {"max_rel_err", r.max_rel_err},
                                        {"worst_tensor", r.worst_tensor}});
            write_file(out_dir / "gradcheck.json", j.dump(2) + "\n");
            echo_config(out_dir, "gradcheck", json{{"seed", seed}});
            return report.all_passed ? 0 : 2;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const BoundsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
