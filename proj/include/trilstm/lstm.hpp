#pragma once

#include <span>
#include <vector>

#include "trilstm/matrix.hpp"
#include "trilstm/rng.hpp"

namespace trilstm {

// Gate weights act on the concatenation [u; h_prev], one matrix per gate.
struct LstmParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    Matrix W_f, W_i, W_g, W_o; // hidden_dim x (input_dim + hidden_dim)
    Matrix b_f, b_i, b_g, b_o; // hidden_dim x 1

    // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, forget bias +1
    static LstmParams init(std::size_t input_dim, std::size_t hidden_dim, RngStream rng);
    static LstmParams zeros(std::size_t input_dim, std::size_t hidden_dim);

    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
    std::size_t param_count() const;
};

struct LstmState {
    Matrix h; // hidden_dim x 1, entries strictly inside (-1, 1)
    Matrix c; // hidden_dim x 1

    static LstmState zero(std::size_t hidden_dim) {
        return LstmState{Matrix(hidden_dim, 1), Matrix(hidden_dim, 1)};
    }
};

// Everything the backward pass needs from one forward step.
struct LstmStepTape {
    Matrix z;      // concatenated [u; h_prev]
    Matrix c_prev;
    Matrix f, i, g, o;
    Matrix c, tanh_c;
};

struct LstmGrads {
    Matrix W_f, W_i, W_g, W_o;
    Matrix b_f, b_i, b_g, b_o;

    static LstmGrads zeros_like(const LstmParams& p);
    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
};

// f = sigma(W_f z + b_f), i = sigma(W_i z + b_i), g = tanh(W_g z + b_g),
// o = sigma(W_o z + b_o), c = f*c_prev + i*g, h = o*tanh(c), z = [u; h_prev].
LstmState lstm_step(const LstmParams& p, const Matrix& u, const LstmState& prev,
                    LstmStepTape* tape = nullptr);

struct LstmStepBack {
    Matrix d_u;     // gradient w.r.t. the step input u
    Matrix dh_prev; // gradient flowing to h_{t-1} through the gates
    Matrix dc_prev;
};

// Single-step reverse pass. dh is the total gradient arriving at h_t,
// dc the cell-state gradient from step t+1. Parameter gradients
// accumulate into acc.
LstmStepBack lstm_step_backward(const LstmParams& p, const LstmStepTape& tape,
                                const Matrix& dh, const Matrix& dc, LstmGrads& acc);

// Whole-sequence BPTT: upstream_dh[t] is the external gradient at h_t.
// Returns accumulated parameter gradients; per-step input gradients are
// written to d_inputs when provided.
LstmGrads lstm_backward(const LstmParams& p, std::span<const LstmStepTape> tape,
                        std::span<const Matrix> upstream_dh,
                        std::vector<Matrix>* d_inputs = nullptr);

} // namespace trilstm
