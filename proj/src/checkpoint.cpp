#include "trilstm/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace trilstm {

using nlohmann::json;

json to_json(const TrainConfig& cfg) {
    json j;
    j["epochs"] = cfg.epochs;
    j["minibatch"] = cfg.minibatch;
    j["dropout"] = cfg.dropout;
    j["lambda"] = cfg.lambda;
    j["alpha"] = cfg.alpha;
    j["shuffle_order"] = cfg.shuffle_order;
    j["shuffle_copies"] = cfg.shuffle_copies;
    j["seed"] = cfg.seed;
    j["eval_repeats"] = cfg.eval_repeats;
    j["eval_mode"] = cfg.eval_mode == EvalMode::ReshuffleOrder ? "reshuffle-order"
                                                               : "resample-records";
    j["embed_dim"] = cfg.embed_dim;
    j["hidden_dim"] = cfg.hidden_dim;
    j["mlp_hidden"] = cfg.mlp_hidden;
    j["baseline_hidden"] = cfg.baseline_hidden;
    j["include_final_loss"] = cfg.include_final_loss;
    j["optimizer"] = {{"kind", to_string(cfg.opt.kind)},
                      {"lr", cfg.opt.lr},
                      {"beta1", cfg.opt.beta1},
                      {"beta2", cfg.opt.beta2},
                      {"eps", cfg.opt.eps},
                      {"momentum", cfg.opt.momentum},
                      {"grad_clip_norm", cfg.opt.grad_clip_norm}};
    return j;
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key))
        out = j.at(key).get<T>();
}

} // namespace

TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    try {
        maybe(j, "epochs", cfg.epochs);
        maybe(j, "minibatch", cfg.minibatch);
        maybe(j, "dropout", cfg.dropout);
        maybe(j, "lambda", cfg.lambda);
        maybe(j, "alpha", cfg.alpha);
        maybe(j, "shuffle_order", cfg.shuffle_order);
        maybe(j, "shuffle_copies", cfg.shuffle_copies);
        maybe(j, "seed", cfg.seed);
        maybe(j, "eval_repeats", cfg.eval_repeats);
        if (j.contains("eval_mode")) {
            const std::string m = j.at("eval_mode").get<std::string>();
            if (m == "reshuffle-order")
                cfg.eval_mode = EvalMode::ReshuffleOrder;
            else if (m == "resample-records")
                cfg.eval_mode = EvalMode::ResampleRecords;
            else
                throw ConfigError("unknown eval_mode '" + m + "'");
        }
        maybe(j, "embed_dim", cfg.embed_dim);
        maybe(j, "hidden_dim", cfg.hidden_dim);
        maybe(j, "mlp_hidden", cfg.mlp_hidden);
        maybe(j, "baseline_hidden", cfg.baseline_hidden);
        maybe(j, "include_final_loss", cfg.include_final_loss);
        if (j.contains("optimizer")) {
            const json& o = j.at("optimizer");
            if (o.contains("kind"))
                cfg.opt.kind = optimizer_kind_from_string(o.at("kind").get<std::string>());
            maybe(o, "lr", cfg.opt.lr);
            maybe(o, "beta1", cfg.opt.beta1);
            maybe(o, "beta2", cfg.opt.beta2);
            maybe(o, "eps", cfg.opt.eps);
            maybe(o, "momentum", cfg.opt.momentum);
            maybe(o, "grad_clip_norm", cfg.opt.grad_clip_norm);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad train config: ") + e.what());
    }
    return cfg;
}

json to_json(const GeneratorConfig& cfg) {
    return {{"n_patients", cfg.n_patients},
            {"glaucoma_fraction", cfg.glaucoma_fraction},
            {"noise_scale", cfg.noise_scale},
            {"seed", cfg.seed},
            {"separability", cfg.separability}};
}

GeneratorConfig generator_config_from_json(const json& j) {
    GeneratorConfig cfg;
    try {
        maybe(j, "n_patients", cfg.n_patients);
        maybe(j, "glaucoma_fraction", cfg.glaucoma_fraction);
        maybe(j, "noise_scale", cfg.noise_scale);
        maybe(j, "seed", cfg.seed);
        maybe(j, "separability", cfg.separability);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad generator config: ") + e.what());
    }
    return cfg;
}

json to_json(const NormStats& stats) {
    json j;
    j["mean_od"] = stats.mean_od;
    j["std_od"] = stats.std_od;
    j["mean_os"] = stats.mean_os;
    j["std_os"] = stats.std_os;
    j["mean_ie"] = stats.mean_ie;
    j["std_ie"] = stats.std_ie;
    j["ie_defined"] = stats.ie_defined;
    return j;
}

NormStats norm_stats_from_json(const json& j) {
    NormStats s;
    try {
        s.mean_od = j.at("mean_od").get<std::vector<double>>();
        s.std_od = j.at("std_od").get<std::vector<double>>();
        s.mean_os = j.at("mean_os").get<std::vector<double>>();
        s.std_os = j.at("std_os").get<std::vector<double>>();
        s.mean_ie = j.at("mean_ie").get<std::vector<double>>();
        s.std_ie = j.at("std_ie").get<std::vector<double>>();
        s.ie_defined = j.at("ie_defined").get<std::vector<std::uint8_t>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad normalizer stats: ") + e.what());
    }
    return s;
}

json to_json(const MetricsReport& r) {
    json j;
    j["model"] = r.model;
    j["order_shuffled"] = r.order_shuffled;
    j["seed"] = r.seed;
    j["auc"] = std::isnan(r.auc) ? json(nullptr) : json(r.auc);
    j["recall"] = r.recall;
    j["specificity"] = r.specificity;
    j["accuracy"] = r.accuracy;
    j["tp"] = r.tp;
    j["fn"] = r.fn;
    j["tn"] = r.tn;
    j["fp"] = r.fp;
    return j;
}

namespace {

std::string schema_hash_hex() {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(BiomarkerSchema::standard().hash()));
    return buf;
}

} // namespace

std::string checkpoint_to_string(const Model& m, const TrainConfig& cfg, const NormStats& stats) {
    json j;
    j["format_version"] = 1;
    j["model"] = to_string(m.kind);
    j["schema_hash"] = schema_hash_hex();
    j["train_config"] = to_json(cfg);
    j["norm_stats"] = to_json(stats);

    // baselines with auto-sized hidden dims record the size actually used
    if (m.kind == ModelKind::Lstm)
        j["resolved_hidden"] = m.lstm().cell.hidden_dim;
    else if (m.kind == ModelKind::Rnn)
        j["resolved_hidden"] = m.rnn().hidden_dim;

    json tensors = json::object();
    const auto names = m.tensor_names();
    const auto mats = m.tensors();
    for (std::size_t i = 0; i < mats.size(); ++i) {
        tensors[names[i]] = {{"rows", mats[i]->rows()},
                             {"cols", mats[i]->cols()},
                             {"data", mats[i]->raw()}};
    }
    j["tensors"] = std::move(tensors);
    return j.dump(2) + "\n";
}

void save_checkpoint(const std::string& path, const Model& m, const TrainConfig& cfg,
                     const NormStats& stats) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot open '" + path + "' for writing");
    f << checkpoint_to_string(m, cfg, stats);
}

Checkpoint checkpoint_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad checkpoint JSON: ") + e.what());
    }

    Checkpoint ck;
    try {
        if (j.at("format_version").get<int>() != 1)
            throw ValidationError("unsupported checkpoint format version");
        if (j.at("schema_hash").get<std::string>() != schema_hash_hex())
            throw ValidationError("checkpoint schema hash does not match this build's schema");
        ck.config = train_config_from_json(j.at("train_config"));
        ck.stats = norm_stats_from_json(j.at("norm_stats"));

        const ModelKind kind = model_kind_from_string(j.at("model").get<std::string>());
        TrainConfig build_cfg = ck.config;
        if (j.contains("resolved_hidden"))
            build_cfg.baseline_hidden = j.at("resolved_hidden").get<std::size_t>();
        ck.model = init_model(kind, build_cfg);

        const json& tensors = j.at("tensors");
        const auto names = ck.model.tensor_names();
        const auto mats = ck.model.tensors();
        for (std::size_t i = 0; i < mats.size(); ++i) {
            if (!tensors.contains(names[i]))
                throw ValidationError("checkpoint misses tensor '" + names[i] + "'");
            const json& t = tensors.at(names[i]);
            const auto rows = t.at("rows").get<std::size_t>();
            const auto cols = t.at("cols").get<std::size_t>();
            if (rows != mats[i]->rows() || cols != mats[i]->cols())
                throw ValidationError("checkpoint tensor '" + names[i] + "' is " +
                                      std::to_string(rows) + "x" + std::to_string(cols) +
                                      ", expected " + std::to_string(mats[i]->rows()) + "x" +
                                      std::to_string(mats[i]->cols()));
            auto data = t.at("data").get<std::vector<double>>();
            if (data.size() != mats[i]->size())
                throw ValidationError("checkpoint tensor '" + names[i] + "' has wrong length");
            mats[i]->raw() = std::move(data);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad checkpoint JSON: ") + e.what());
    }
    return ck;
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << f.rdbuf();
    return checkpoint_from_string(buf.str());
}

} // namespace trilstm
