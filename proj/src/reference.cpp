#include "trilstm/reference.hpp"

#include <algorithm>
#include <cmath>

namespace trilstm::reference {

namespace {

using Real = long double;
using Vec = std::vector<Real>;

Real sigmoid_l(Real x) {
    if (x >= 0.0L) {
        const Real z = expl(-x);
        return 1.0L / (1.0L + z);
    }
    const Real z = expl(x);
    return z / (1.0L + z);
}

Real elu_l(Real x) {
    return x >= 0.0L ? x : expm1l(x);
}

// y = M v + b reading the double-precision matrix entry-wise
Vec affine(const Matrix& M, const Vec& v, const Matrix* b) {
    Vec out(M.rows(), 0.0L);
    for (std::size_t r = 0; r < M.rows(); ++r) {
        Real s = b ? static_cast<Real>((*b)(r, 0)) : 0.0L;
        for (std::size_t c = 0; c < M.cols(); ++c)
            s += static_cast<Real>(M(r, c)) * v[c];
        out[r] = s;
    }
    return out;
}

Vec concat(const Vec& a, const Vec& b) {
    Vec out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

Vec encode(const Token& t, std::size_t n_bio) {
    Vec v(n_bio + 4, 0.0L);
    if (t.is_null()) {
        v[n_bio] = 1.0L;
    } else {
        v[static_cast<std::size_t>(t.biomarker)] = 1.0L;
        v[n_bio + 1] = static_cast<Real>(t.od);
        v[n_bio + 2] = static_cast<Real>(t.os);
        v[n_bio + 3] = static_cast<Real>(t.ie);
    }
    return v;
}

struct CellState {
    Vec h, c;
};

CellState cell_step(const LstmParams& p, const Vec& u, const CellState& prev) {
    const Vec z = concat(u, prev.h);
    const Vec af = affine(p.W_f, z, &p.b_f);
    const Vec ai = affine(p.W_i, z, &p.b_i);
    const Vec ag = affine(p.W_g, z, &p.b_g);
    const Vec ao = affine(p.W_o, z, &p.b_o);
    CellState next;
    next.h.resize(p.hidden_dim);
    next.c.resize(p.hidden_dim);
    for (std::size_t k = 0; k < p.hidden_dim; ++k) {
        const Real f = sigmoid_l(af[k]);
        const Real i = sigmoid_l(ai[k]);
        const Real g = tanhl(ag[k]);
        const Real o = sigmoid_l(ao[k]);
        next.c[k] = f * prev.c[k] + i * g;
        next.h[k] = o * tanhl(next.c[k]);
    }
    return next;
}

Vec softmax(const Vec& logits) {
    Real mx = logits[0];
    for (Real v : logits)
        mx = std::max(mx, v);
    Vec out(logits.size());
    Real sum = 0.0L;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = expl(logits[i] - mx);
        sum += out[i];
    }
    for (Real& v : out)
        v /= sum;
    return out;
}

Vec mlp_probs(const MlpParams& p, const Vec& x) {
    Vec hidden = affine(p.W_hidden, x, &p.b_hidden);
    for (Real& v : hidden)
        v = elu_l(v);
    return softmax(affine(p.W_out, hidden, &p.b_out));
}

Real ce(const Vec& probs, std::size_t target) {
    return -logl(std::max(probs[target], static_cast<Real>(1e-12L)));
}

} // namespace

long double trilstm_total_loss(const TriLstmParams& p, const std::vector<Token>& stream1,
                               const std::vector<Token>& stream2, const LossSpec& spec) {
    const std::size_t n_bio = BiomarkerSchema::standard().size();
    const std::size_t steps = std::max(stream1.size(), stream2.size());
    const std::size_t H = p.cfg.hidden_dim;

    auto padded = [&](const std::vector<Token>& s, std::size_t t) {
        return t < s.size() ? s[t] : Token::null_token();
    };

    CellState st1{Vec(H, 0.0L), Vec(H, 0.0L)};
    CellState st2 = st1, st3 = st1;
    Real loss1 = 0.0L, loss2 = 0.0L;
    std::size_t n1 = 0, n2 = 0;
    Vec h3_last;

    for (std::size_t t = 0; t < steps; ++t) {
        const Vec x1 = encode(padded(stream1, t), n_bio);
        const Vec x2 = encode(padded(stream2, t), n_bio);
        const Vec u1 = concat(affine(p.W_e1, x1, nullptr), st2.h);
        const CellState next1 = cell_step(p.enc1, u1, st1);
        const Vec u2 = concat(affine(p.W_e2, x2, nullptr), next1.h);
        const CellState next2 = cell_step(p.enc2, u2, st2);

        if (t < spec.targets1.size() && spec.targets1[t] >= 0) {
            loss1 += ce(mlp_probs(p.head1, next1.h), static_cast<std::size_t>(spec.targets1[t]));
            ++n1;
        }
        if (t < spec.targets2.size() && spec.targets2[t] >= 0) {
            loss2 += ce(mlp_probs(p.head2, next2.h), static_cast<std::size_t>(spec.targets2[t]));
            ++n2;
        }

        const Vec u3 = concat(concat(affine(p.W_e3, concat(x1, x2), nullptr), next1.h), next2.h);
        const CellState next3 = cell_step(p.fusion, u3, st3);
        h3_last = next3.h;
        st1 = next1;
        st2 = next2;
        st3 = next3;
    }

    if (n1) loss1 /= static_cast<Real>(n1);
    if (n2) loss2 /= static_cast<Real>(n2);
    const Real loss_final =
        ce(mlp_probs(p.final_head, h3_last), label_to_class(spec.label));
    return static_cast<Real>(spec.lambda) * loss1 + static_cast<Real>(spec.alpha) * loss2 +
           static_cast<Real>(spec.final_weight) * loss_final;
}

long double lstm_baseline_ce(const SingleLstmParams& p, const std::vector<Token>& sequence,
                             int label) {
    const std::size_t n_bio = BiomarkerSchema::standard().size();
    CellState st{Vec(p.cell.hidden_dim, 0.0L), Vec(p.cell.hidden_dim, 0.0L)};
    for (const Token& tok : sequence)
        st = cell_step(p.cell, affine(p.W_e, encode(tok, n_bio), nullptr), st);
    return ce(mlp_probs(p.final_head, st.h), label_to_class(label));
}

long double rnn_ce(const RnnParams& p, const std::vector<Token>& sequence, int label) {
    const std::size_t n_bio = BiomarkerSchema::standard().size();
    Vec h(p.hidden_dim, 0.0L);
    for (const Token& tok : sequence) {
        const Vec xh = affine(p.W_xh, encode(tok, n_bio), &p.b_h);
        const Vec hh = affine(p.W_hh, h, nullptr);
        for (std::size_t k = 0; k < p.hidden_dim; ++k)
            h[k] = tanhl(xh[k] + hh[k]);
    }
    return ce(mlp_probs(p.final_head, h), label_to_class(label));
}

long double lstm_cell_readout(const LstmParams& p, std::span<const Matrix> inputs,
                              std::span<const Matrix> upstream) {
    CellState st{Vec(p.hidden_dim, 0.0L), Vec(p.hidden_dim, 0.0L)};
    Real loss = 0.0L;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        Vec u(inputs[t].rows());
        for (std::size_t k = 0; k < u.size(); ++k)
            u[k] = static_cast<Real>(inputs[t](k, 0));
        st = cell_step(p, u, st);
        for (std::size_t k = 0; k < p.hidden_dim; ++k)
            loss += static_cast<Real>(upstream[t](k, 0)) * st.h[k];
    }
    return loss;
}

long double mlp_ce(const MlpParams& p, const Matrix& x, std::size_t target) {
    Vec v(x.rows());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = static_cast<Real>(x(k, 0));
    return ce(mlp_probs(p, v), target);
}

} // namespace trilstm::reference
