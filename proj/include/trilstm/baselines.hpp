#pragma once

#include <vector>

#include "trilstm/dataset.hpp"
#include "trilstm/lstm.hpp"
#include "trilstm/mlp.hpp"
#include "trilstm/trilstm.hpp"

namespace trilstm {

// Plain tanh RNN over the full token sequence, classified from h_T.
struct RnnParams {
    std::size_t hidden_dim = 0;
    Matrix W_xh; // hidden x token_dim
    Matrix W_hh; // hidden x hidden
    Matrix b_h;  // hidden x 1
    MlpParams final_head;

    static RnnParams init(std::size_t hidden_dim, std::size_t mlp_hidden, RngStream rng);
    static RnnParams zeros(std::size_t hidden_dim, std::size_t mlp_hidden);
    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
    std::vector<std::string> tensor_names() const;
    std::size_t param_count() const;
};

struct RnnTape {
    std::vector<Matrix> x;   // token vectors
    std::vector<Matrix> pre; // pre-tanh activations
    std::vector<Matrix> h;   // h_1..h_T
    MlpTape head;
    Matrix final_dist;
};

struct RnnGrads {
    Matrix W_xh, W_hh, b_h;
    MlpGrads final_head;
    static RnnGrads zeros_like(const RnnParams& p);
    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
};

Matrix rnn_forward(const RnnParams& p, const std::vector<Token>& sequence, bool train_mode,
                   RngStream* rng, double dropout, RnnTape* tape = nullptr);
void rnn_backward(const RnnParams& p, const RnnTape& tape, int label, RnnGrads& grads);

// Embedding followed by a single LSTM cell, classified from h_T.
struct SingleLstmParams {
    Matrix W_e; // embed x token_dim
    LstmParams cell;
    MlpParams final_head;

    static SingleLstmParams init(std::size_t embed_dim, std::size_t hidden_dim,
                                 std::size_t mlp_hidden, RngStream rng);
    static SingleLstmParams zeros(std::size_t embed_dim, std::size_t hidden_dim,
                                  std::size_t mlp_hidden);
    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
    std::vector<std::string> tensor_names() const;
    std::size_t param_count() const;
};

struct SingleLstmTape {
    std::vector<Matrix> x;
    std::vector<LstmStepTape> cell;
    MlpTape head;
    Matrix final_dist;
};

struct SingleLstmGrads {
    Matrix W_e;
    LstmGrads cell;
    MlpGrads final_head;
    static SingleLstmGrads zeros_like(const SingleLstmParams& p);
    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
};

Matrix lstm_baseline_forward(const SingleLstmParams& p, const std::vector<Token>& sequence,
                             bool train_mode, RngStream* rng, double dropout,
                             SingleLstmTape* tape = nullptr);
void lstm_baseline_backward(const SingleLstmParams& p, const SingleLstmTape& tape, int label,
                            SingleLstmGrads& grads);

// Smallest hidden size whose parameter count lands nearest the target;
// keeps benchmark comparisons parameter-matched.
std::size_t rnn_hidden_for_budget(std::size_t target_params, std::size_t mlp_hidden);
std::size_t lstm_hidden_for_budget(std::size_t target_params, std::size_t embed_dim,
                                   std::size_t mlp_hidden);

} // namespace trilstm
