#pragma once

#include <string>

#include "trilstm/dataset.hpp"
#include "trilstm/metrics.hpp"
#include "trilstm/train.hpp"

#include <json.hpp>

namespace trilstm {

// JSON views of the run configs; used by the checkpoint container, the CLI
// config file and the provenance echo.
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MetricsReport& r);

struct Checkpoint {
    Model model;
    TrainConfig config;
    NormStats stats;
};

// Versioned JSON container holding every parameter tensor with its shape,
// the schema hash and the training config. Loading validates both.
std::string checkpoint_to_string(const Model& m, const TrainConfig& cfg, const NormStats& stats);
void save_checkpoint(const std::string& path, const Model& m, const TrainConfig& cfg,
                     const NormStats& stats);
Checkpoint checkpoint_from_string(const std::string& text);
Checkpoint load_checkpoint(const std::string& path);

} // namespace trilstm
