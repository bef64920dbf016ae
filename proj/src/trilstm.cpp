#include "trilstm/trilstm.hpp"

#include <cmath>

#include "trilstm/optimizer.hpp"

namespace trilstm {

std::size_t token_dim(const BiomarkerSchema& schema) {
    return schema.size() + 1 + 3;
}

Matrix encode_token(const Token& t, const BiomarkerSchema& schema) {
    const std::size_t n = schema.size();
    Matrix v(token_dim(schema), 1);
    if (t.is_null()) {
        v(n, 0) = 1.0;
    } else {
        if (static_cast<std::size_t>(t.biomarker) >= n)
            throw BoundsError("token biomarker index out of range");
        v(static_cast<std::size_t>(t.biomarker), 0) = 1.0;
        v(n + 1, 0) = t.od;
        v(n + 2, 0) = t.os;
        v(n + 3, 0) = t.ie;
    }
    return v;
}

void TriLstmConfig::validate() const {
    if (embed_dim == 0 || hidden_dim == 0 || mlp_hidden == 0)
        throw ConfigError("model dims must be positive");
    if (dropout < 0.0 || dropout >= 1.0)
        throw ConfigError("dropout must lie in [0, 1)");
    if (final_loss_weight < 0.0)
        throw ConfigError("final_loss_weight must be >= 0");
}

TriLstmParams TriLstmParams::init(const TriLstmConfig& cfg, RngStream rng) {
    cfg.validate();
    const auto& schema = BiomarkerSchema::standard();
    const std::size_t td = token_dim(schema);
    const std::size_t K = BiomarkerSchema::kParentClasses;

    auto embed = [&](std::string_view name, std::size_t cols) {
        RngStream r = rng.child(name);
        const double s = 1.0 / std::sqrt(static_cast<double>(cols));
        Matrix m(cfg.embed_dim, cols);
        for (double& v : m.raw())
            v = r.uniform(-s, s);
        return m;
    };

    TriLstmParams p;
    p.cfg = cfg;
    p.W_e1 = embed("W_e1", td);
    p.W_e2 = embed("W_e2", td);
    p.W_e3 = embed("W_e3", 2 * td);
    p.enc1 = LstmParams::init(cfg.embed_dim + cfg.hidden_dim, cfg.hidden_dim, rng.child("enc1"));
    p.enc2 = LstmParams::init(cfg.embed_dim + cfg.hidden_dim, cfg.hidden_dim, rng.child("enc2"));
    p.fusion =
        LstmParams::init(cfg.embed_dim + 2 * cfg.hidden_dim, cfg.hidden_dim, rng.child("fusion"));
    p.head1 = MlpParams::init(cfg.hidden_dim, cfg.mlp_hidden, K, rng.child("head1"));
    p.head2 = MlpParams::init(cfg.hidden_dim, cfg.mlp_hidden, K, rng.child("head2"));
    p.final_head = MlpParams::init(cfg.hidden_dim, cfg.mlp_hidden, 2, rng.child("final_head"));
    return p;
}

TriLstmParams TriLstmParams::zeros(const TriLstmConfig& cfg) {
    cfg.validate();
    const auto& schema = BiomarkerSchema::standard();
    const std::size_t td = token_dim(schema);
    const std::size_t K = BiomarkerSchema::kParentClasses;

    TriLstmParams p;
    p.cfg = cfg;
    p.W_e1 = Matrix(cfg.embed_dim, td);
    p.W_e2 = Matrix(cfg.embed_dim, td);
    p.W_e3 = Matrix(cfg.embed_dim, 2 * td);
    p.enc1 = LstmParams::zeros(cfg.embed_dim + cfg.hidden_dim, cfg.hidden_dim);
    p.enc2 = LstmParams::zeros(cfg.embed_dim + cfg.hidden_dim, cfg.hidden_dim);
    p.fusion = LstmParams::zeros(cfg.embed_dim + 2 * cfg.hidden_dim, cfg.hidden_dim);
    p.head1 = MlpParams::zeros(cfg.hidden_dim, cfg.mlp_hidden, K);
    p.head2 = MlpParams::zeros(cfg.hidden_dim, cfg.mlp_hidden, K);
    p.final_head = MlpParams::zeros(cfg.hidden_dim, cfg.mlp_hidden, 2);
    return p;
}

namespace {

template <typename Self, typename MatrixPtr>
std::vector<MatrixPtr> collect_tensors(Self& self) {
    std::vector<MatrixPtr> out = {&self.W_e1, &self.W_e2, &self.W_e3};
    for (auto* t : self.enc1.tensors()) out.push_back(t);
    for (auto* t : self.enc2.tensors()) out.push_back(t);
    for (auto* t : self.fusion.tensors()) out.push_back(t);
    for (auto* t : self.head1.tensors()) out.push_back(t);
    for (auto* t : self.head2.tensors()) out.push_back(t);
    for (auto* t : self.final_head.tensors()) out.push_back(t);
    return out;
}

} // namespace

std::vector<Matrix*> TriLstmParams::tensors() {
    return collect_tensors<TriLstmParams, Matrix*>(*this);
}

std::vector<const Matrix*> TriLstmParams::tensors() const {
    return collect_tensors<const TriLstmParams, const Matrix*>(*this);
}

std::vector<std::string> TriLstmParams::tensor_names() const {
    std::vector<std::string> names = {"W_e1", "W_e2", "W_e3"};
    const char* gates[] = {"W_f", "W_i", "W_g", "W_o", "b_f", "b_i", "b_g", "b_o"};
    const char* mlps[] = {"W_hidden", "b_hidden", "W_out", "b_out"};
    for (const char* cell : {"enc1", "enc2", "fusion"})
        for (const char* g : gates)
            names.push_back(std::string(cell) + "." + g);
    for (const char* head : {"head1", "head2", "final_head"})
        for (const char* m : mlps)
            names.push_back(std::string(head) + "." + m);
    return names;
}

std::size_t TriLstmParams::param_count() const {
    std::size_t n = 0;
    for (const Matrix* t : tensors())
        n += t->size();
    return n;
}

TriLstmGrads TriLstmGrads::zeros_like(const TriLstmParams& p) {
    TriLstmGrads g;
    g.W_e1 = Matrix(p.W_e1.rows(), p.W_e1.cols());
    g.W_e2 = Matrix(p.W_e2.rows(), p.W_e2.cols());
    g.W_e3 = Matrix(p.W_e3.rows(), p.W_e3.cols());
    g.enc1 = LstmGrads::zeros_like(p.enc1);
    g.enc2 = LstmGrads::zeros_like(p.enc2);
    g.fusion = LstmGrads::zeros_like(p.fusion);
    g.head1 = MlpGrads::zeros_like(p.head1);
    g.head2 = MlpGrads::zeros_like(p.head2);
    g.final_head = MlpGrads::zeros_like(p.final_head);
    return g;
}

std::vector<Matrix*> TriLstmGrads::tensors() {
    return collect_tensors<TriLstmGrads, Matrix*>(*this);
}

std::vector<const Matrix*> TriLstmGrads::tensors() const {
    return collect_tensors<const TriLstmGrads, const Matrix*>(*this);
}

namespace {

std::vector<Token> pad_stream(const std::vector<Token>& s, std::size_t steps) {
    std::vector<Token> out = s;
    while (out.size() < steps)
        out.push_back(Token::null_token());
    return out;
}

} // namespace

TriLstmOutput trilstm_forward(const TriLstmParams& p, const std::vector<Token>& stream1,
                              const std::vector<Token>& stream2, bool train_mode,
                              RngStream* rng, TriLstmTape* tape) {
    const auto& schema = BiomarkerSchema::standard();
    if (stream1.empty() && stream2.empty())
        throw ProtocolError("trilstm_forward needs at least one token");
    const std::size_t steps = std::max(stream1.size(), stream2.size());
    const auto s1 = pad_stream(stream1, steps);
    const auto s2 = pad_stream(stream2, steps);
    const double rate = train_mode ? p.cfg.dropout : 0.0;

    TriLstmTape local;
    TriLstmTape& tp = tape ? *tape : local;
    tp = TriLstmTape{};
    tp.steps = steps;
    tp.x1.reserve(steps);
    tp.x2.reserve(steps);
    tp.xbar.reserve(steps);
    tp.enc1.resize(steps);
    tp.enc2.resize(steps);
    tp.fusion.resize(steps);
    tp.head1.resize(steps);
    tp.head2.resize(steps);
    tp.pad1.resize(steps);
    tp.pad2.resize(steps);

    TriLstmOutput& out = tp.out;
    LstmState st1 = LstmState::zero(p.cfg.hidden_dim);
    LstmState st2 = LstmState::zero(p.cfg.hidden_dim);
    LstmState st3 = LstmState::zero(p.cfg.hidden_dim);

    for (std::size_t t = 0; t < steps; ++t) {
        tp.pad1[t] = s1[t].is_null();
        tp.pad2[t] = s2[t].is_null();
        tp.x1.push_back(encode_token(s1[t], schema));
        tp.x2.push_back(encode_token(s2[t], schema));
        tp.xbar.push_back(vconcat(tp.x1[t], tp.x2[t]));

        // encoder 1 sees the partner's previous hidden state
        const Matrix u1 = vconcat(matmul(p.W_e1, tp.x1[t]), st2.h);
        LstmState next1 = lstm_step(p.enc1, u1, st1, &tp.enc1[t]);

        // encoder 2 sees the fresh h1
        const Matrix u2 = vconcat(matmul(p.W_e2, tp.x2[t]), next1.h);
        LstmState next2 = lstm_step(p.enc2, u2, st2, &tp.enc2[t]);

        out.head1_dists.push_back(
            mlp_forward(p.head1, next1.h, train_mode, rate, rng, &tp.head1[t]));
        out.head2_dists.push_back(
            mlp_forward(p.head2, next2.h, train_mode, rate, rng, &tp.head2[t]));

        // fusion reads the concatenated token pair plus both hidden states
        const Matrix u3 = vconcat(matmul(p.W_e3, tp.xbar[t]), next1.h, next2.h);
        LstmState next3 = lstm_step(p.fusion, u3, st3, &tp.fusion[t]);

        out.h1_traj.push_back(next1.h);
        out.h2_traj.push_back(next2.h);
        out.h3_traj.push_back(next3.h);
        st1 = std::move(next1);
        st2 = std::move(next2);
        st3 = std::move(next3);
    }

    out.final_dist = mlp_forward(p.final_head, st3.h, train_mode, rate, rng, &tp.final_head);
    return out;
}

LossSpec make_loss_spec(const std::vector<Token>& stream1, const std::vector<Token>& stream2,
                        int label, const BiomarkerSchema& schema, double lambda, double alpha,
                        double final_weight) {
    const std::size_t steps = std::max(stream1.size(), stream2.size());
    LossSpec spec;
    spec.label = label;
    spec.lambda = lambda;
    spec.alpha = alpha;
    spec.final_weight = final_weight;
    spec.targets1.assign(steps, -1);
    spec.targets2.assign(steps, -1);
    for (std::size_t t = 0; t < stream1.size(); ++t)
        if (!stream1[t].is_null())
            spec.targets1[t] =
                static_cast<int>(schema.parent_class(static_cast<std::size_t>(stream1[t].biomarker)));
    for (std::size_t t = 0; t < stream2.size(); ++t)
        if (!stream2[t].is_null())
            spec.targets2[t] =
                static_cast<int>(schema.parent_class(static_cast<std::size_t>(stream2[t].biomarker)));
    return spec;
}

namespace {

double mean_head_loss(const std::vector<Matrix>& dists, const std::vector<int>& targets) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        if (targets[t] < 0)
            continue;
        sum += cross_entropy(dists[t], static_cast<std::size_t>(targets[t])).first;
        ++n;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

} // namespace

LossBreakdown trilstm_loss(const TriLstmOutput& out, const LossSpec& spec) {
    if (spec.targets1.size() != out.head1_dists.size() ||
        spec.targets2.size() != out.head2_dists.size())
        throw ProtocolError("loss targets do not align with forward steps");
    LossBreakdown lb;
    lb.lambda = spec.lambda;
    lb.alpha = spec.alpha;
    lb.final_weight = spec.final_weight;
    lb.loss1 = mean_head_loss(out.head1_dists, spec.targets1);
    lb.loss2 = mean_head_loss(out.head2_dists, spec.targets2);
    lb.loss_final = cross_entropy(out.final_dist, label_to_class(spec.label)).first;
    lb.total = lb.lambda * lb.loss1 + lb.alpha * lb.loss2 + lb.final_weight * lb.loss_final;
    return lb;
}

void trilstm_backward(const TriLstmParams& p, const TriLstmTape& tape, const LossSpec& spec,
                      TriLstmGrads& grads) {
    const std::size_t T = tape.steps;
    if (T == 0)
        throw ProtocolError("trilstm_backward on an empty tape");
    if (spec.targets1.size() != T || spec.targets2.size() != T)
        throw ProtocolError("trilstm_backward targets do not align with the tape");
    const std::size_t H = p.cfg.hidden_dim;
    const std::size_t E = p.cfg.embed_dim;

    const auto count_valid = [](const std::vector<int>& ts) {
        std::size_t n = 0;
        for (int t : ts)
            if (t >= 0) ++n;
        return n;
    };
    const std::size_t n1 = count_valid(spec.targets1);
    const std::size_t n2 = count_valid(spec.targets2);
    const double w1 = n1 ? spec.lambda / static_cast<double>(n1) : 0.0;
    const double w2 = n2 ? spec.alpha / static_cast<double>(n2) : 0.0;

    // gradient arriving at each hidden state from non-recurrent consumers
    std::vector<Matrix> dh1_extra(T, Matrix(H, 1));
    std::vector<Matrix> dh2_extra(T, Matrix(H, 1));

    // final head feeds h3_T
    Matrix dh3_rec(H, 1);
    {
        Matrix d_logits = tape.final_head.probs;
        d_logits(0, label_to_class(spec.label)) -= 1.0;
        d_logits = scale(d_logits, spec.final_weight);
        Matrix dh = mlp_backward(p.final_head, tape.final_head, d_logits, grads.final_head);
        add_in_place(dh3_rec, dh);
    }
    Matrix dc3_rec(H, 1);
    Matrix dh1_rec(H, 1), dc1_rec(H, 1);
    Matrix dh2_rec(H, 1), dc2_rec(H, 1);

    for (std::size_t t = T; t-- > 0;) {
        // fusion step: u3 = [W_e3 xbar ; h1 ; h2]
        {
            LstmStepBack back = lstm_step_backward(p.fusion, tape.fusion[t], dh3_rec, dc3_rec,
                                                   grads.fusion);
            dh3_rec = std::move(back.dh_prev);
            dc3_rec = std::move(back.dc_prev);
            const Matrix de3 = slice_rows(back.d_u, 0, E);
            add_outer_in_place(grads.W_e3, de3, tape.xbar[t]);
            add_in_place(dh1_extra[t], slice_rows(back.d_u, E, E + H));
            add_in_place(dh2_extra[t], slice_rows(back.d_u, E + H, E + 2 * H));
        }

        // head 2 at this step
        if (spec.targets2[t] >= 0 && w2 != 0.0) {
            Matrix d_logits = tape.head2[t].probs;
            d_logits(0, static_cast<std::size_t>(spec.targets2[t])) -= 1.0;
            d_logits = scale(d_logits, w2);
            Matrix dh = mlp_backward(p.head2, tape.head2[t], d_logits, grads.head2);
            add_in_place(dh2_extra[t], dh);
        }

        // encoder 2: u2 = [W_e2 x2 ; h1_t]
        {
            Matrix dh2 = add(dh2_extra[t], dh2_rec);
            LstmStepBack back = lstm_step_backward(p.enc2, tape.enc2[t], dh2, dc2_rec, grads.enc2);
            dh2_rec = std::move(back.dh_prev);
            dc2_rec = std::move(back.dc_prev);
            const Matrix de2 = slice_rows(back.d_u, 0, E);
            add_outer_in_place(grads.W_e2, de2, tape.x2[t]);
            add_in_place(dh1_extra[t], slice_rows(back.d_u, E, E + H));
        }

        // head 1
        if (spec.targets1[t] >= 0 && w1 != 0.0) {
            Matrix d_logits = tape.head1[t].probs;
            d_logits(0, static_cast<std::size_t>(spec.targets1[t])) -= 1.0;
            d_logits = scale(d_logits, w1);
            Matrix dh = mlp_backward(p.head1, tape.head1[t], d_logits, grads.head1);
            add_in_place(dh1_extra[t], dh);
        }

        // encoder 1: u1 = [W_e1 x1 ; h2_{t-1}]
        {
            Matrix dh1 = add(dh1_extra[t], dh1_rec);
            LstmStepBack back = lstm_step_backward(p.enc1, tape.enc1[t], dh1, dc1_rec, grads.enc1);
            dh1_rec = std::move(back.dh_prev);
            dc1_rec = std::move(back.dc_prev);
            const Matrix de1 = slice_rows(back.d_u, 0, E);
            add_outer_in_place(grads.W_e1, de1, tape.x1[t]);
            // partner feed: h2_{t-1} was an input of this step
            if (t > 0)
                add_in_place(dh2_extra[t - 1], slice_rows(back.d_u, E, E + H));
        }
    }
}

Prediction trilstm_predict(const TriLstmParams& p, const PatientRecord& record,
                           const BiomarkerSchema& schema,
                           const std::vector<std::size_t>& permutation) {
    auto [idx1, idx2] = partition_halves(schema, permutation);
    auto s1 = tokens_for(record, idx1);
    auto s2 = tokens_for(record, idx2);
    TriLstmOutput out = trilstm_forward(p, s1, s2, false, nullptr);

    Prediction pred;
    pred.p_yes = out.final_dist(0, kYesIndex);
    pred.yes = pred.p_yes > 0.5; // ties resolve to No
    pred.parent_dists.resize(schema.size());
    for (std::size_t t = 0; t < idx1.size(); ++t)
        pred.parent_dists[idx1[t]] = out.head1_dists[t];
    for (std::size_t t = 0; t < idx2.size(); ++t)
        pred.parent_dists[idx2[t]] = out.head2_dists[t];
    return pred;
}

} // namespace trilstm
