#include "trilstm/baselines.hpp"

#include <cmath>
#include <limits>

#include "trilstm/optimizer.hpp"

namespace trilstm {

namespace {

Matrix init_weight(std::size_t rows, std::size_t cols, RngStream rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(cols));
    Matrix m(rows, cols);
    for (double& v : m.raw())
        v = rng.uniform(-s, s);
    return m;
}

std::size_t head_param_count(std::size_t input_dim, std::size_t mlp_hidden, std::size_t classes) {
    return mlp_hidden * input_dim + mlp_hidden + classes * mlp_hidden + classes;
}

} // namespace

RnnParams RnnParams::init(std::size_t hidden_dim, std::size_t mlp_hidden, RngStream rng) {
    const std::size_t td = token_dim(BiomarkerSchema::standard());
    RnnParams p;
    p.hidden_dim = hidden_dim;
    p.W_xh = init_weight(hidden_dim, td, rng.child("W_xh"));
    p.W_hh = init_weight(hidden_dim, hidden_dim, rng.child("W_hh"));
    p.b_h = Matrix(hidden_dim, 1);
    p.final_head = MlpParams::init(hidden_dim, mlp_hidden, 2, rng.child("final_head"));
    return p;
}

RnnParams RnnParams::zeros(std::size_t hidden_dim, std::size_t mlp_hidden) {
    const std::size_t td = token_dim(BiomarkerSchema::standard());
    RnnParams p;
    p.hidden_dim = hidden_dim;
    p.W_xh = Matrix(hidden_dim, td);
    p.W_hh = Matrix(hidden_dim, hidden_dim);
    p.b_h = Matrix(hidden_dim, 1);
    p.final_head = MlpParams::zeros(hidden_dim, mlp_hidden, 2);
    return p;
}

std::vector<Matrix*> RnnParams::tensors() {
    std::vector<Matrix*> out = {&W_xh, &W_hh, &b_h};
    for (auto* t : final_head.tensors()) out.push_back(t);
    return out;
}

std::vector<const Matrix*> RnnParams::tensors() const {
    std::vector<const Matrix*> out = {&W_xh, &W_hh, &b_h};
    for (auto* t : final_head.tensors()) out.push_back(t);
    return out;
}

std::vector<std::string> RnnParams::tensor_names() const {
    return {"W_xh", "W_hh", "b_h", "final_head.W_hidden", "final_head.b_hidden",
            "final_head.W_out", "final_head.b_out"};
}

std::size_t RnnParams::param_count() const {
    std::size_t n = 0;
    for (const Matrix* t : tensors())
        n += t->size();
    return n;
}

RnnGrads RnnGrads::zeros_like(const RnnParams& p) {
    RnnGrads g;
    g.W_xh = Matrix(p.W_xh.rows(), p.W_xh.cols());
    g.W_hh = Matrix(p.W_hh.rows(), p.W_hh.cols());
    g.b_h = Matrix(p.b_h.rows(), 1);
    g.final_head = MlpGrads::zeros_like(p.final_head);
    return g;
}

std::vector<Matrix*> RnnGrads::tensors() {
    std::vector<Matrix*> out = {&W_xh, &W_hh, &b_h};
    for (auto* t : final_head.tensors()) out.push_back(t);
    return out;
}

std::vector<const Matrix*> RnnGrads::tensors() const {
    std::vector<const Matrix*> out = {&W_xh, &W_hh, &b_h};
    for (auto* t : final_head.tensors()) out.push_back(t);
    return out;
}

Matrix rnn_forward(const RnnParams& p, const std::vector<Token>& sequence, bool train_mode,
                   RngStream* rng, double dropout, RnnTape* tape) {
    if (sequence.empty())
        throw ProtocolError("rnn_forward needs at least one token");
    const auto& schema = BiomarkerSchema::standard();
    RnnTape local;
    RnnTape& tp = tape ? *tape : local;
    tp = RnnTape{};

    Matrix h(p.hidden_dim, 1);
    for (const Token& tok : sequence) {
        Matrix x = encode_token(tok, schema);
        Matrix pre = add(add(matmul(p.W_xh, x), matmul(p.W_hh, h)), p.b_h);
        h = map(pre, tanh_act);
        tp.x.push_back(std::move(x));
        tp.pre.push_back(std::move(pre));
        tp.h.push_back(h);
    }
    tp.final_dist =
        mlp_forward(p.final_head, h, train_mode, train_mode ? dropout : 0.0, rng, &tp.head);
    return tp.final_dist;
}

void rnn_backward(const RnnParams& p, const RnnTape& tape, int label, RnnGrads& grads) {
    if (tape.h.empty())
        throw ProtocolError("rnn_backward on an empty tape");
    const std::size_t T = tape.h.size();
    const std::size_t H = p.hidden_dim;

    Matrix d_logits = tape.head.probs;
    d_logits(0, label_to_class(label)) -= 1.0;
    Matrix dh = mlp_backward(p.final_head, tape.head, d_logits, grads.final_head);

    for (std::size_t t = T; t-- > 0;) {
        // through tanh
        Matrix da(H, 1);
        for (std::size_t k = 0; k < H; ++k) {
            const double hv = tape.h[t](k, 0);
            da(k, 0) = dh(k, 0) * (1.0 - hv * hv);
        }
        add_outer_in_place(grads.W_xh, da, tape.x[t]);
        if (t > 0)
            add_outer_in_place(grads.W_hh, da, tape.h[t - 1]);
        add_in_place(grads.b_h, da);
        dh = matmul(transpose(p.W_hh), da);
    }
}

SingleLstmParams SingleLstmParams::init(std::size_t embed_dim, std::size_t hidden_dim,
                                        std::size_t mlp_hidden, RngStream rng) {
    const std::size_t td = token_dim(BiomarkerSchema::standard());
    SingleLstmParams p;
    p.W_e = init_weight(embed_dim, td, rng.child("W_e"));
    p.cell = LstmParams::init(embed_dim, hidden_dim, rng.child("cell"));
    p.final_head = MlpParams::init(hidden_dim, mlp_hidden, 2, rng.child("final_head"));
    return p;
}

SingleLstmParams SingleLstmParams::zeros(std::size_t embed_dim, std::size_t hidden_dim,
                                         std::size_t mlp_hidden) {
    const std::size_t td = token_dim(BiomarkerSchema::standard());
    SingleLstmParams p;
    p.W_e = Matrix(embed_dim, td);
    p.cell = LstmParams::zeros(embed_dim, hidden_dim);
    p.final_head = MlpParams::zeros(hidden_dim, mlp_hidden, 2);
    return p;
}

std::vector<Matrix*> SingleLstmParams::tensors() {
    std::vector<Matrix*> out = {&W_e};
    for (auto* t : cell.tensors()) out.push_back(t);
    for (auto* t : final_head.tensors()) out.push_back(t);
    return out;
}

std::vector<const Matrix*> SingleLstmParams::tensors() const {
    std::vector<const Matrix*> out = {&W_e};
    for (auto* t : cell.tensors()) out.push_back(t);
    for (auto* t : final_head.tensors()) out.push_back(t);
    return out;
}

std::vector<std::string> SingleLstmParams::tensor_names() const {
    std::vector<std::string> names = {"W_e"};
    for (const char* g : {"W_f", "W_i", "W_g", "W_o", "b_f", "b_i", "b_g", "b_o"})
        names.push_back(std::string("cell.") + g);
    for (const char* m : {"W_hidden", "b_hidden", "W_out", "b_out"})
        names.push_back(std::string("final_head.") + m);
    return names;
}

std::size_t SingleLstmParams::param_count() const {
    std::size_t n = 0;
    for (const Matrix* t : tensors())
        n += t->size();
    return n;
}

SingleLstmGrads SingleLstmGrads::zeros_like(const SingleLstmParams& p) {
    SingleLstmGrads g;
    g.W_e = Matrix(p.W_e.rows(), p.W_e.cols());
    g.cell = LstmGrads::zeros_like(p.cell);
    g.final_head = MlpGrads::zeros_like(p.final_head);
    return g;
}

std::vector<Matrix*> SingleLstmGrads::tensors() {
    std::vector<Matrix*> out = {&W_e};
    for (auto* t : cell.tensors()) out.push_back(t);
    for (auto* t : final_head.tensors()) out.push_back(t);
    return out;
}

std::vector<const Matrix*> SingleLstmGrads::tensors() const {
    std::vector<const Matrix*> out = {&W_e};
    for (auto* t : cell.tensors()) out.push_back(t);
    for (auto* t : final_head.tensors()) out.push_back(t);
    return out;
}

Matrix lstm_baseline_forward(const SingleLstmParams& p, const std::vector<Token>& sequence,
                             bool train_mode, RngStream* rng, double dropout,
                             SingleLstmTape* tape) {
    if (sequence.empty())
        throw ProtocolError("lstm_baseline_forward needs at least one token");
    const auto& schema = BiomarkerSchema::standard();
    SingleLstmTape local;
    SingleLstmTape& tp = tape ? *tape : local;
    tp = SingleLstmTape{};
    tp.cell.resize(sequence.size());

    LstmState st = LstmState::zero(p.cell.hidden_dim);
    for (std::size_t t = 0; t < sequence.size(); ++t) {
        Matrix x = encode_token(sequence[t], schema);
        const Matrix u = matmul(p.W_e, x);
        st = lstm_step(p.cell, u, st, &tp.cell[t]);
        tp.x.push_back(std::move(x));
    }
    tp.final_dist =
        mlp_forward(p.final_head, st.h, train_mode, train_mode ? dropout : 0.0, rng, &tp.head);
    return tp.final_dist;
}

void lstm_baseline_backward(const SingleLstmParams& p, const SingleLstmTape& tape, int label,
                            SingleLstmGrads& grads) {
    if (tape.cell.empty())
        throw ProtocolError("lstm_baseline_backward on an empty tape");
    const std::size_t T = tape.cell.size();
    const std::size_t H = p.cell.hidden_dim;

    Matrix d_logits = tape.head.probs;
    d_logits(0, label_to_class(label)) -= 1.0;
    Matrix dh = mlp_backward(p.final_head, tape.head, d_logits, grads.final_head);

    Matrix dc(H, 1);
    for (std::size_t t = T; t-- > 0;) {
        LstmStepBack back = lstm_step_backward(p.cell, tape.cell[t], dh, dc, grads.cell);
        dh = std::move(back.dh_prev);
        dc = std::move(back.dc_prev);
        add_outer_in_place(grads.W_e, back.d_u, tape.x[t]);
    }
}

namespace {

std::size_t best_hidden(std::size_t target,
                        const std::function<std::size_t(std::size_t)>& count_for) {
    std::size_t best_h = 1;
    std::size_t best_diff = std::numeric_limits<std::size_t>::max();
    for (std::size_t h = 1; h <= 512; ++h) {
        const std::size_t c = count_for(h);
        const std::size_t diff = c > target ? c - target : target - c;
        if (diff < best_diff) {
            best_diff = diff;
            best_h = h;
        }
    }
    return best_h;
}

} // namespace

std::size_t rnn_hidden_for_budget(std::size_t target_params, std::size_t mlp_hidden) {
    const std::size_t td = token_dim(BiomarkerSchema::standard());
    return best_hidden(target_params, [&](std::size_t h) {
        return h * td + h * h + h + head_param_count(h, mlp_hidden, 2);
    });
}

std::size_t lstm_hidden_for_budget(std::size_t target_params, std::size_t embed_dim,
                                   std::size_t mlp_hidden) {
    const std::size_t td = token_dim(BiomarkerSchema::standard());
    return best_hidden(target_params, [&](std::size_t h) {
        return embed_dim * td + 4 * h * (embed_dim + h) + 4 * h +
               head_param_count(h, mlp_hidden, 2);
    });
}

} // namespace trilstm
