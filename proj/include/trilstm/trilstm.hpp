#pragma once

#include <string>
#include <vector>

#include "trilstm/dataset.hpp"
#include "trilstm/lstm.hpp"
#include "trilstm/mlp.hpp"

namespace trilstm {

// Token vector layout: one-hot biomarker identity, a null-token slot used
// for padding, then the three normalized values (od, os, ie).
std::size_t token_dim(const BiomarkerSchema& schema);
Matrix encode_token(const Token& t, const BiomarkerSchema& schema);

struct TriLstmConfig {
    std::size_t embed_dim = 6;
    std::size_t hidden_dim = 12;
    std::size_t mlp_hidden = 12;
    double dropout = 0.1;
    // Weight of the final-classification term added on top of the
    // head-weighted loss; 0 trains only the encoders and heads.
    double final_loss_weight = 1.0;

    void validate() const;
};

// Two cross-fed encoder LSTMs, per-step relationship heads, and a fusion
// LSTM that reads both hidden trajectories and ends in a Yes/No classifier.
// The mutual dependency between the encoders is resolved by staggering:
// encoder 1 consumes the partner's previous hidden state, encoder 2 the
// fresh one.
struct TriLstmParams {
    TriLstmConfig cfg;
    Matrix W_e1; // embed_dim x token_dim
    Matrix W_e2; // embed_dim x token_dim
    Matrix W_e3; // embed_dim x (2 * token_dim), acts on the concatenated step pair
    LstmParams enc1, enc2, fusion;
    MlpParams head1, head2;  // parent distributions over the 21 relationship classes
    MlpParams final_head;    // {Yes, No}

    static TriLstmParams init(const TriLstmConfig& cfg, RngStream rng);
    static TriLstmParams zeros(const TriLstmConfig& cfg);

    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
    std::vector<std::string> tensor_names() const;
    std::size_t param_count() const;
};

struct TriLstmGrads {
    Matrix W_e1, W_e2, W_e3;
    LstmGrads enc1, enc2, fusion;
    MlpGrads head1, head2, final_head;

    static TriLstmGrads zeros_like(const TriLstmParams& p);
    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
};

// Index 0 of final_dist is Yes (glaucoma), index 1 is No.
inline constexpr std::size_t kYesIndex = 0;
inline constexpr std::size_t kNoIndex = 1;
inline std::size_t label_to_class(int label) { return label == 1 ? kYesIndex : kNoIndex; }

struct TriLstmOutput {
    std::vector<Matrix> h1_traj, h2_traj, h3_traj;
    std::vector<Matrix> head1_dists, head2_dists; // 1 x 21 rows, one per step
    Matrix final_dist;                            // 1 x 2 row
};

struct TriLstmTape {
    std::size_t steps = 0;
    std::vector<Matrix> x1, x2;   // encoded tokens, token_dim x 1
    std::vector<Matrix> xbar;     // concatenated step pair, 2*token_dim x 1
    std::vector<LstmStepTape> enc1, enc2, fusion;
    std::vector<MlpTape> head1, head2;
    MlpTape final_head;
    std::vector<bool> pad1, pad2; // true where the step carries a null token
    TriLstmOutput out;
};

// Streams come from partition_halves; the shorter one is padded with the
// reserved null token. rng is only touched when train_mode and dropout > 0.
TriLstmOutput trilstm_forward(const TriLstmParams& p, const std::vector<Token>& stream1,
                              const std::vector<Token>& stream2, bool train_mode,
                              RngStream* rng, TriLstmTape* tape = nullptr);

struct LossBreakdown {
    double loss1 = 0.0;      // head-1 mean cross-entropy over non-padded steps
    double loss2 = 0.0;      // head-2 likewise
    double loss_final = 0.0; // classification cross-entropy
    double lambda = 0.5;
    double alpha = 5.0;
    double final_weight = 1.0;
    double total = 0.0; // lambda*loss1 + alpha*loss2 + final_weight*loss_final
};

// Supervision for one forward pass: per-step parent classes (-1 on padded
// steps) and the record label.
struct LossSpec {
    std::vector<int> targets1, targets2;
    int label = 0;
    double lambda = 0.5;
    double alpha = 5.0;
    double final_weight = 1.0;
};

LossSpec make_loss_spec(const std::vector<Token>& stream1, const std::vector<Token>& stream2,
                        int label, const BiomarkerSchema& schema, double lambda, double alpha,
                        double final_weight);

LossBreakdown trilstm_loss(const TriLstmOutput& out, const LossSpec& spec);

// Exact gradients of LossBreakdown.total for every parameter tensor,
// including the cross-feed paths. Accumulates into grads.
void trilstm_backward(const TriLstmParams& p, const TriLstmTape& tape, const LossSpec& spec,
                      TriLstmGrads& grads);

struct Prediction {
    bool yes = false;
    double p_yes = 0.0;
    // one parent distribution per schema biomarker, taken from the head of
    // the stream that carried it
    std::vector<Matrix> parent_dists;
};

Prediction trilstm_predict(const TriLstmParams& p, const PatientRecord& normalized_record,
                           const BiomarkerSchema& schema,
                           const std::vector<std::size_t>& permutation);

} // namespace trilstm
