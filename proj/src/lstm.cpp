#include "trilstm/lstm.hpp"

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

LstmParams LstmParams::init(std::size_t input_dim, std::size_t hidden_dim, RngStream rng) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    const std::size_t z_dim = input_dim + hidden_dim;
    p.W_f = init_weight(hidden_dim, z_dim, rng.child("W_f"));
    p.W_i = init_weight(hidden_dim, z_dim, rng.child("W_i"));
    p.W_g = init_weight(hidden_dim, z_dim, rng.child("W_g"));
    p.W_o = init_weight(hidden_dim, z_dim, rng.child("W_o"));
    p.b_f = Matrix::filled(hidden_dim, 1, 1.0);
    p.b_i = Matrix(hidden_dim, 1);
    p.b_g = Matrix(hidden_dim, 1);
    p.b_o = Matrix(hidden_dim, 1);
    return p;
}

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    const std::size_t z_dim = input_dim + hidden_dim;
    p.W_f = Matrix(hidden_dim, z_dim);
    p.W_i = Matrix(hidden_dim, z_dim);
    p.W_g = Matrix(hidden_dim, z_dim);
    p.W_o = Matrix(hidden_dim, z_dim);
    p.b_f = Matrix(hidden_dim, 1);
    p.b_i = Matrix(hidden_dim, 1);
    p.b_g = Matrix(hidden_dim, 1);
    p.b_o = Matrix(hidden_dim, 1);
    return p;
}

std::vector<Matrix*> LstmParams::tensors() {
    return {&W_f, &W_i, &W_g, &W_o, &b_f, &b_i, &b_g, &b_o};
}

std::vector<const Matrix*> LstmParams::tensors() const {
    return {&W_f, &W_i, &W_g, &W_o, &b_f, &b_i, &b_g, &b_o};
}

std::size_t LstmParams::param_count() const {
    std::size_t n = 0;
    for (const Matrix* t : tensors())
        n += t->size();
    return n;
}

LstmGrads LstmGrads::zeros_like(const LstmParams& p) {
    LstmGrads g;
    g.W_f = Matrix(p.W_f.rows(), p.W_f.cols());
    g.W_i = Matrix(p.W_i.rows(), p.W_i.cols());
    g.W_g = Matrix(p.W_g.rows(), p.W_g.cols());
    g.W_o = Matrix(p.W_o.rows(), p.W_o.cols());
    g.b_f = Matrix(p.b_f.rows(), 1);
    g.b_i = Matrix(p.b_i.rows(), 1);
    g.b_g = Matrix(p.b_g.rows(), 1);
    g.b_o = Matrix(p.b_o.rows(), 1);
    return g;
}

std::vector<Matrix*> LstmGrads::tensors() {
    return {&W_f, &W_i, &W_g, &W_o, &b_f, &b_i, &b_g, &b_o};
}

std::vector<const Matrix*> LstmGrads::tensors() const {
    return {&W_f, &W_i, &W_g, &W_o, &b_f, &b_i, &b_g, &b_o};
}

LstmState lstm_step(const LstmParams& p, const Matrix& u, const LstmState& prev,
                    LstmStepTape* tape) {
    if (u.rows() != p.input_dim || u.cols() != 1)
        throw ShapeError("lstm_step input is " + std::to_string(u.rows()) + "x" +
                         std::to_string(u.cols()) + ", expected " +
                         std::to_string(p.input_dim) + "x1");
    if (prev.h.rows() != p.hidden_dim || prev.c.rows() != p.hidden_dim)
        throw ShapeError("lstm_step state dim mismatch");

    const Matrix z = vconcat(u, prev.h);
    Matrix f = add(matmul(p.W_f, z), p.b_f);
    Matrix i = add(matmul(p.W_i, z), p.b_i);
    Matrix g = add(matmul(p.W_g, z), p.b_g);
    Matrix o = add(matmul(p.W_o, z), p.b_o);
    for (double& v : f.raw()) v = sigmoid(v);
    for (double& v : i.raw()) v = sigmoid(v);
    for (double& v : g.raw()) v = tanh_act(v);
    for (double& v : o.raw()) v = sigmoid(v);

    Matrix c(p.hidden_dim, 1);
    for (std::size_t k = 0; k < p.hidden_dim; ++k)
        c(k, 0) = f(k, 0) * prev.c(k, 0) + i(k, 0) * g(k, 0);
    Matrix tanh_c = map(c, tanh_act);
    Matrix h(p.hidden_dim, 1);
    for (std::size_t k = 0; k < p.hidden_dim; ++k)
        h(k, 0) = o(k, 0) * tanh_c(k, 0);

    if (tape) {
        tape->z = z;
        tape->c_prev = prev.c;
        tape->f = f;
        tape->i = i;
        tape->g = g;
        tape->o = o;
        tape->c = c;
        tape->tanh_c = tanh_c;
    }
    return LstmState{std::move(h), std::move(c)};
}

LstmStepBack lstm_step_backward(const LstmParams& p, const LstmStepTape& tape,
                                const Matrix& dh, const Matrix& dc, LstmGrads& acc) {
    const std::size_t H = p.hidden_dim;
    if (dh.rows() != H || dc.rows() != H)
        throw ShapeError("lstm_step_backward gradient dim mismatch");

    // gate pre-activation gradients; sigma' = s(1-s), tanh' = 1 - t^2
    Matrix da_f(H, 1), da_i(H, 1), da_g(H, 1), da_o(H, 1), dc_prev(H, 1);
    for (std::size_t k = 0; k < H; ++k) {
        const double o = tape.o(k, 0);
        const double tc = tape.tanh_c(k, 0);
        const double dct = dh(k, 0) * o * (1.0 - tc * tc) + dc(k, 0);
        const double f = tape.f(k, 0);
        const double i = tape.i(k, 0);
        const double g = tape.g(k, 0);
        da_f(k, 0) = dct * tape.c_prev(k, 0) * f * (1.0 - f);
        da_i(k, 0) = dct * g * i * (1.0 - i);
        da_g(k, 0) = dct * i * (1.0 - g * g);
        da_o(k, 0) = dh(k, 0) * tc * o * (1.0 - o);
        dc_prev(k, 0) = dct * f;
    }

    add_outer_in_place(acc.W_f, da_f, tape.z);
    add_outer_in_place(acc.W_i, da_i, tape.z);
    add_outer_in_place(acc.W_g, da_g, tape.z);
    add_outer_in_place(acc.W_o, da_o, tape.z);
    add_in_place(acc.b_f, da_f);
    add_in_place(acc.b_i, da_i);
    add_in_place(acc.b_g, da_g);
    add_in_place(acc.b_o, da_o);

    // dz = sum_g W_g^T da_g, then split into input and recurrent parts
    const std::size_t z_dim = p.input_dim + H;
    Matrix dz(z_dim, 1);
    const Matrix* Ws[4] = {&p.W_f, &p.W_i, &p.W_g, &p.W_o};
    const Matrix* das[4] = {&da_f, &da_i, &da_g, &da_o};
    for (int gidx = 0; gidx < 4; ++gidx) {
        const Matrix& W = *Ws[gidx];
        const Matrix& da = *das[gidx];
        for (std::size_t r = 0; r < H; ++r) {
            const double d = da(r, 0);
            if (d == 0.0) continue;
            const double* row = W.data() + r * z_dim;
            for (std::size_t cidx = 0; cidx < z_dim; ++cidx)
                dz(cidx, 0) += d * row[cidx];
        }
    }

    LstmStepBack back;
    back.d_u = slice_rows(dz, 0, p.input_dim);
    back.dh_prev = slice_rows(dz, p.input_dim, z_dim);
    back.dc_prev = std::move(dc_prev);
    return back;
}

LstmGrads lstm_backward(const LstmParams& p, std::span<const LstmStepTape> tape,
                        std::span<const Matrix> upstream_dh,
                        std::vector<Matrix>* d_inputs) {
    if (tape.size() != upstream_dh.size())
        throw ProtocolError("lstm_backward: tape has " + std::to_string(tape.size()) +
                            " steps but upstream has " + std::to_string(upstream_dh.size()));
    LstmGrads acc = LstmGrads::zeros_like(p);
    if (d_inputs)
        d_inputs->assign(tape.size(), Matrix());

    Matrix dh_rec(p.hidden_dim, 1);
    Matrix dc_rec(p.hidden_dim, 1);
    for (std::size_t t = tape.size(); t-- > 0;) {
        Matrix dh = add(upstream_dh[t], dh_rec);
        LstmStepBack back = lstm_step_backward(p, tape[t], dh, dc_rec, acc);
        dh_rec = std::move(back.dh_prev);
        dc_rec = std::move(back.dc_prev);
        if (d_inputs)
            (*d_inputs)[t] = std::move(back.d_u);
    }
    return acc;
}

} // namespace trilstm
