#include "trilstm/gradcheck.hpp"

#include <chrono>
#include <utility>
#include <cmath>
#include <cstdio>

#include "trilstm/baselines.hpp"
#include "trilstm/optimizer.hpp"
#include "trilstm/reference.hpp"
#include "trilstm/train.hpp"
#include "trilstm/trilstm.hpp"

namespace trilstm {

GradCheckResult check_gradients(const std::string& name, const std::vector<Matrix*>& params,
                                const std::vector<const Matrix*>& analytic,
                                const std::vector<std::string>& names,
                                const std::function<long double()>& loss, double epsilon,
                                double tolerance) {
    if (params.size() != analytic.size() || params.size() != names.size())
        throw ProtocolError("check_gradients: tensor list mismatch");

    GradCheckResult res;
    res.name = name;
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
        Matrix& p = *params[ti];
        const Matrix& g = *analytic[ti];
        if (!p.same_shape(g))
            throw ShapeError("check_gradients: gradient shape mismatch for " + names[ti]);
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double saved = p.raw()[k];
            p.raw()[k] = saved + epsilon;
            const long double up = loss();
            p.raw()[k] = saved - epsilon;
            const long double dn = loss();
            p.raw()[k] = saved;
            const double numeric =
                static_cast<double>((up - dn) / (2.0L * static_cast<long double>(epsilon)));
            const double a = g.raw()[k];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            const double rel = std::abs(a - numeric) / denom;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_tensor = names[ti];
                res.worst_index = k;
            }
        }
    }
    res.passed = res.max_rel_err <= tolerance;
    return res;
}

namespace {

// synthetic record with generic values; normalization is irrelevant for
// gradient checking
PatientRecord gradcheck_record(RngStream rng) {
    const auto& schema = BiomarkerSchema::standard();
    PatientRecord rec;
    rec.patient_id = "gradcheck";
    rec.label = 1;
    rec.od.resize(schema.size());
    rec.os.resize(schema.size());
    rec.ie.resize(schema.size());
    for (std::size_t b = 0; b < schema.size(); ++b) {
        rec.od[b] = rng.normal();
        rec.os[b] = rng.normal();
        rec.ie[b] = schema.at(b).has_ie ? rec.od[b] - rec.os[b]
                                        : std::numeric_limits<double>::quiet_NaN();
    }
    return rec;
}

GradCheckResult check_trilstm(std::uint64_t seed) {
    const auto& schema = BiomarkerSchema::standard();
    TriLstmConfig cfg;
    cfg.embed_dim = 4;
    cfg.hidden_dim = 6;
    cfg.mlp_hidden = 5;
    cfg.dropout = 0.0;
    TriLstmParams params = TriLstmParams::init(cfg, RngStream(seed).child("tri"));

    RngStream rng = RngStream(seed).child("data");
    const PatientRecord rec = gradcheck_record(rng.child("record"));
    const auto perm = rng.child("perm").permutation(schema.size());
    auto [s1, s2] = token_streams(rec, perm);
    const LossSpec spec = make_loss_spec(s1, s2, rec.label, schema, 0.5, 5.0, 1.0);

    TriLstmTape tape;
    trilstm_forward(params, s1, s2, false, nullptr, &tape);
    TriLstmGrads grads = TriLstmGrads::zeros_like(params);
    trilstm_backward(params, tape, spec, grads);

    auto loss = [&]() { return reference::trilstm_total_loss(params, s1, s2, spec); };
    return check_gradients("tri-lstm", params.tensors(), std::as_const(grads).tensors(), params.tensor_names(),
                           loss);
}

GradCheckResult check_lstm_baseline(std::uint64_t seed) {
    const auto& schema = BiomarkerSchema::standard();
    SingleLstmParams params = SingleLstmParams::init(4, 6, 5, RngStream(seed).child("lstm"));
    RngStream rng = RngStream(seed).child("data");
    const PatientRecord rec = gradcheck_record(rng.child("record"));
    const auto seq = tokens_for(rec, rng.child("perm").permutation(schema.size()));

    SingleLstmTape tape;
    lstm_baseline_forward(params, seq, false, nullptr, 0.0, &tape);
    SingleLstmGrads grads = SingleLstmGrads::zeros_like(params);
    lstm_baseline_backward(params, tape, rec.label, grads);

    auto loss = [&]() { return reference::lstm_baseline_ce(params, seq, rec.label); };
    return check_gradients("lstm", params.tensors(), std::as_const(grads).tensors(), params.tensor_names(), loss);
}

GradCheckResult check_rnn(std::uint64_t seed) {
    const auto& schema = BiomarkerSchema::standard();
    RnnParams params = RnnParams::init(6, 5, RngStream(seed).child("rnn"));
    RngStream rng = RngStream(seed).child("data");
    const PatientRecord rec = gradcheck_record(rng.child("record"));
    const auto seq = tokens_for(rec, rng.child("perm").permutation(schema.size()));

    RnnTape tape;
    rnn_forward(params, seq, false, nullptr, 0.0, &tape);
    RnnGrads grads = RnnGrads::zeros_like(params);
    rnn_backward(params, tape, rec.label, grads);

    auto loss = [&]() { return reference::rnn_ce(params, seq, rec.label); };
    return check_gradients("rnn", params.tensors(), std::as_const(grads).tensors(), params.tensor_names(), loss);
}

GradCheckResult check_lstm_cell(std::uint64_t seed) {
    LstmParams params = LstmParams::init(5, 4, RngStream(seed).child("cell"));
    RngStream rng = RngStream(seed).child("cell-data");
    const std::size_t T = 4;
    std::vector<Matrix> inputs;
    std::vector<Matrix> upstream;
    for (std::size_t t = 0; t < T; ++t) {
        Matrix u(5, 1), d(4, 1);
        for (double& v : u.raw()) v = rng.normal();
        for (double& v : d.raw()) v = rng.normal();
        inputs.push_back(std::move(u));
        upstream.push_back(std::move(d));
    }

    auto run = [&](std::vector<LstmStepTape>* tape) {
        LstmState st = LstmState::zero(4);
        double loss = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            st = lstm_step(params, inputs[t], st, tape ? &(*tape)[t] : nullptr);
            for (std::size_t k = 0; k < 4; ++k)
                loss += upstream[t](k, 0) * st.h(k, 0);
        }
        return loss;
    };

    std::vector<LstmStepTape> tape(T);
    run(&tape);
    LstmGrads grads = lstm_backward(params, tape, upstream);

    std::vector<std::string> names = {"W_f", "W_i", "W_g", "W_o", "b_f", "b_i", "b_g", "b_o"};
    auto loss = [&]() { return reference::lstm_cell_readout(params, inputs, upstream); };
    return check_gradients("lstm-cell", params.tensors(), std::as_const(grads).tensors(), names, loss);
}

GradCheckResult check_mlp(std::uint64_t seed) {
    MlpParams params = MlpParams::init(6, 5, 3, RngStream(seed).child("mlp"));
    RngStream rng = RngStream(seed).child("mlp-data");
    Matrix x(6, 1);
    for (double& v : x.raw()) v = rng.normal();
    const std::size_t target = 1;

    MlpTape tape;
    mlp_forward(params, x, false, 0.0, nullptr, &tape);
    MlpGrads grads = MlpGrads::zeros_like(params);
    auto [l0, d_logits] = cross_entropy(tape.probs, target);
    (void)l0;
    mlp_backward(params, tape, d_logits, grads);

    std::vector<std::string> names = {"W_hidden", "b_hidden", "W_out", "b_out"};
    auto loss = [&]() { return reference::mlp_ce(params, x, target); };
    return check_gradients("mlp", params.tensors(), std::as_const(grads).tensors(), names, loss);
}

} // namespace

GradCheckReport run_gradcheck(std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    GradCheckReport report;
    report.results.push_back(check_lstm_cell(seed));
    report.results.push_back(check_mlp(seed));
    report.results.push_back(check_trilstm(seed));
    report.results.push_back(check_lstm_baseline(seed));
    report.results.push_back(check_rnn(seed));
    report.all_passed = true;
    for (const auto& r : report.results)
        report.all_passed = report.all_passed && r.passed;
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::string format_gradcheck_report(const GradCheckReport& report) {
    std::string out;
    char line[160];
    for (const auto& r : report.results) {
        std::snprintf(line, sizeof(line), "%-10s %s, max rel err %.3e (worst: %s[%zu])\n",
                      r.name.c_str(), r.passed ? "PASS" : "FAIL", r.max_rel_err,
                      r.worst_tensor.c_str(), r.worst_index);
        out += line;
    }
    std::snprintf(line, sizeof(line), "overall: %s, max rel err <= 1e-4 %s (%.2fs)\n",
                  report.all_passed ? "PASS" : "FAIL", report.all_passed ? "holds" : "violated",
                  report.seconds);
    out += line;
    return out;
}

} // namespace trilstm
