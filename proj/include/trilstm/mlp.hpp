#pragma once

#include <utility>
#include <vector>

#include "trilstm/matrix.hpp"
#include "trilstm/rng.hpp"

namespace trilstm {

// One ELU hidden layer plus a softmax output: out = softmax(W_out elu(W_hidden x + b_hidden) + b_out).
struct MlpParams {
    Matrix W_hidden, b_hidden;
    Matrix W_out, b_out;

    static MlpParams init(std::size_t input_dim, std::size_t hidden_dim,
                          std::size_t output_dim, RngStream rng);
    static MlpParams zeros(std::size_t input_dim, std::size_t hidden_dim,
                           std::size_t output_dim);

    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
    std::size_t param_count() const;
    std::size_t output_dim() const { return W_out.rows(); }
};

struct MlpTape {
    Matrix x;           // input column
    Matrix pre_hidden;  // W_hidden x + b_hidden
    Matrix hidden;      // post-ELU, post-dropout
    Matrix dropout_mask;
    Matrix probs;       // 1 x output_dim row
};

struct MlpGrads {
    Matrix W_hidden, b_hidden, W_out, b_out;

    static MlpGrads zeros_like(const MlpParams& p);
    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
};

// Inverted dropout: entries zeroed with probability rate, survivors scaled
// by 1/(1-rate). Returns the scaled output and the scale-valued mask.
std::pair<Matrix, Matrix> apply_dropout(const Matrix& x, double rate, RngStream& rng);

// Probability row (1 x output_dim). Dropout is applied to the hidden
// activations only when train_mode and rate > 0.
Matrix mlp_forward(const MlpParams& p, const Matrix& x, bool train_mode,
                   double dropout_rate, RngStream* rng, MlpTape* tape = nullptr);

// d_logits is the 1 x output_dim gradient at the softmax pre-activations
// (for cross-entropy: probs - one_hot(target)). Returns d_x.
Matrix mlp_backward(const MlpParams& p, const MlpTape& tape, const Matrix& d_logits,
                    MlpGrads& acc);

} // namespace trilstm
