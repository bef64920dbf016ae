#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "trilstm/baselines.hpp"
#include "trilstm/dataset.hpp"
#include "trilstm/metrics.hpp"
#include "trilstm/optimizer.hpp"
#include "trilstm/trilstm.hpp"

namespace trilstm {

enum class ModelKind { TriLstm, Lstm, Rnn };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

enum class EvalMode {
    ReshuffleOrder,  // repeated passes with re-randomized presentation order
    ResampleRecords, // repeated passes over bootstrap resamples of the test set
};

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t minibatch = 512; // effective batch = min(minibatch, #views)
    double dropout = 0.1;
    double lambda = 0.5;
    double alpha = 5.0;
    bool shuffle_order = true;
    std::size_t shuffle_copies = 4;
    std::uint64_t seed = 42;
    OptimizerConfig opt;
    std::size_t eval_repeats = 10;
    EvalMode eval_mode = EvalMode::ReshuffleOrder;

    // architecture
    std::size_t embed_dim = 6;
    std::size_t hidden_dim = 12;
    std::size_t mlp_hidden = 12;
    std::size_t baseline_hidden = 0; // 0 = parameter-match against TRI-LSTM
    bool include_final_loss = true;  // off = heads-only training signal

    void validate() const;
    TriLstmConfig trilstm_config() const;
};

struct Model {
    ModelKind kind = ModelKind::TriLstm;
    std::variant<TriLstmParams, SingleLstmParams, RnnParams> params;

    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
    std::vector<std::string> tensor_names() const;
    std::size_t param_count() const;

    TriLstmParams& tri() { return std::get<TriLstmParams>(params); }
    const TriLstmParams& tri() const { return std::get<TriLstmParams>(params); }
    SingleLstmParams& lstm() { return std::get<SingleLstmParams>(params); }
    const SingleLstmParams& lstm() const { return std::get<SingleLstmParams>(params); }
    RnnParams& rnn() { return std::get<RnnParams>(params); }
    const RnnParams& rnn() const { return std::get<RnnParams>(params); }
};

Model init_model(ModelKind kind, const TrainConfig& cfg);

// Positive-class (glaucoma) probability for one record under a given
// presentation order. Deterministic; dropout off.
double positive_probability(const Model& m, const PatientRecord& record,
                            const std::vector<std::size_t>& perm);

struct EpochLoss {
    double total = 0.0;
    double loss1 = 0.0;
    double loss2 = 0.0;
    double loss_final = 0.0;
};

struct TrainResult {
    Model model;
    std::vector<EpochLoss> trace;
};

// Mini-batch training over order-augmented views; reproducible for a fixed
// seed. Expects normalized data. Throws TrainingError (naming epoch and
// batch) if the loss goes non-finite.
TrainResult train(ModelKind kind, const Dataset& train_data, const TrainConfig& cfg);

// Averaged repeated evaluation passes. With shuffle_order set, each pass
// re-randomizes the biomarker presentation order per record (or resamples
// records under EvalMode::ResampleRecords); otherwise every pass uses
// schema order. Dropout is always off.
MetricsReport evaluate(const Model& m, const Dataset& test_data, const TrainConfig& cfg);

std::vector<MetricsReport> evaluate_passes(const Model& m, const Dataset& test_data,
                                           const TrainConfig& cfg);

} // namespace trilstm
