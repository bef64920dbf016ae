#include "trilstm/mlp.hpp"

#include <cmath>
#include <string>

namespace trilstm {

namespace {

Matrix init_weight(std::size_t rows, std::size_t cols, RngStream rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(cols));
    Matrix m(rows, cols);
    for (double& v : m.raw())
        v = rng.uniform(-s, s);
    return m;
}

} // namespace

MlpParams MlpParams::init(std::size_t input_dim, std::size_t hidden_dim,
                          std::size_t output_dim, RngStream rng) {
    MlpParams p;
    p.W_hidden = init_weight(hidden_dim, input_dim, rng.child("W_hidden"));
    p.b_hidden = Matrix(hidden_dim, 1);
    p.W_out = init_weight(output_dim, hidden_dim, rng.child("W_out"));
    p.b_out = Matrix(output_dim, 1);
    return p;
}

MlpParams MlpParams::zeros(std::size_t input_dim, std::size_t hidden_dim,
                           std::size_t output_dim) {
    MlpParams p;
    p.W_hidden = Matrix(hidden_dim, input_dim);
    p.b_hidden = Matrix(hidden_dim, 1);
    p.W_out = Matrix(output_dim, hidden_dim);
    p.b_out = Matrix(output_dim, 1);
    return p;
}

std::vector<Matrix*> MlpParams::tensors() {
    return {&W_hidden, &b_hidden, &W_out, &b_out};
}

std::vector<const Matrix*> MlpParams::tensors() const {
    return {&W_hidden, &b_hidden, &W_out, &b_out};
}

std::size_t MlpParams::param_count() const {
    std::size_t n = 0;
    for (const Matrix* t : tensors())
        n += t->size();
    return n;
}

MlpGrads MlpGrads::zeros_like(const MlpParams& p) {
    MlpGrads g;
    g.W_hidden = Matrix(p.W_hidden.rows(), p.W_hidden.cols());
    g.b_hidden = Matrix(p.b_hidden.rows(), 1);
    g.W_out = Matrix(p.W_out.rows(), p.W_out.cols());
    g.b_out = Matrix(p.b_out.rows(), 1);
    return g;
}

std::vector<Matrix*> MlpGrads::tensors() {
    return {&W_hidden, &b_hidden, &W_out, &b_out};
}

std::vector<const Matrix*> MlpGrads::tensors() const {
    return {&W_hidden, &b_hidden, &W_out, &b_out};
}

std::pair<Matrix, Matrix> apply_dropout(const Matrix& x, double rate, RngStream& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    if (rate == 0.0)
        return {x, Matrix::filled(x.rows(), x.cols(), 1.0)};
    const double keep_scale = 1.0 / (1.0 - rate);
    Matrix mask(x.rows(), x.cols());
    Matrix out = x;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double m = rng.uniform() < rate ? 0.0 : keep_scale;
        mask.raw()[k] = m;
        out.raw()[k] *= m;
    }
    return {std::move(out), std::move(mask)};
}

Matrix mlp_forward(const MlpParams& p, const Matrix& x, bool train_mode,
                   double dropout_rate, RngStream* rng, MlpTape* tape) {
    if (x.cols() != 1 || x.rows() != p.W_hidden.cols())
        throw ShapeError("mlp_forward input is " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + ", expected " +
                         std::to_string(p.W_hidden.cols()) + "x1");

    Matrix pre_hidden = add(matmul(p.W_hidden, x), p.b_hidden);
    Matrix hidden = map(pre_hidden, elu);
    Matrix mask = Matrix::filled(hidden.rows(), 1, 1.0);
    if (train_mode && dropout_rate > 0.0) {
        if (!rng)
            throw ConfigError("mlp_forward needs an rng when dropout is active");
        auto [dropped, m] = apply_dropout(hidden, dropout_rate, *rng);
        hidden = std::move(dropped);
        mask = std::move(m);
    }
    const Matrix logits = add(matmul(p.W_out, hidden), p.b_out);
    Matrix probs = softmax_rows(transpose(logits));

    if (tape) {
        tape->x = x;
        tape->pre_hidden = std::move(pre_hidden);
        tape->hidden = std::move(hidden);
        tape->dropout_mask = std::move(mask);
        tape->probs = probs;
    }
    return probs;
}

Matrix mlp_backward(const MlpParams& p, const MlpTape& tape, const Matrix& d_logits,
                    MlpGrads& acc) {
    if (d_logits.rows() != 1 || d_logits.cols() != p.W_out.rows())
        throw ShapeError("mlp_backward d_logits shape mismatch");

    const Matrix d_logits_col = transpose(d_logits);
    add_outer_in_place(acc.W_out, d_logits_col, tape.hidden);
    add_in_place(acc.b_out, d_logits_col);

    Matrix d_hidden = matmul(transpose(p.W_out), d_logits_col);
    // back through dropout mask, then ELU: elu'(x) = 1 for x >= 0, exp(x) otherwise
    for (std::size_t k = 0; k < d_hidden.rows(); ++k) {
        const double pre = tape.pre_hidden(k, 0);
        const double dd = pre >= 0.0 ? 1.0 : std::exp(pre);
        d_hidden(k, 0) *= tape.dropout_mask(k, 0) * dd;
    }

    add_outer_in_place(acc.W_hidden, d_hidden, tape.x);
    add_in_place(acc.b_hidden, d_hidden);
    return matmul(transpose(p.W_hidden), d_hidden);
}

} // namespace trilstm
