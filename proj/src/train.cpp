#include "trilstm/train.hpp"

#include <cmath>

namespace trilstm {

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "tri-lstm" || s == "trilstm") return ModelKind::TriLstm;
    if (s == "lstm") return ModelKind::Lstm;
    if (s == "rnn") return ModelKind::Rnn;
    throw ConfigError("unknown model '" + s + "' (expected tri-lstm, lstm or rnn)");
}

std::string to_string(ModelKind k) {
    switch (k) {
    case ModelKind::TriLstm: return "tri-lstm";
    case ModelKind::Lstm: return "lstm";
    case ModelKind::Rnn: return "rnn";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (epochs < 1)
        throw ConfigError("epochs must be >= 1");
    if (minibatch < 1)
        throw ConfigError("minibatch must be >= 1");
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw ConfigError("lambda must lie in (0, 1]");
    if (!(alpha >= 1.0 && alpha < 10.0))
        throw ConfigError("alpha must lie in [1, 10)");
    if (shuffle_copies < 1)
        throw ConfigError("shuffle_copies must be >= 1");
    if (eval_repeats < 1)
        throw ConfigError("eval_repeats must be >= 1");
    trilstm_config().validate();
    opt.validate();
}

TriLstmConfig TrainConfig::trilstm_config() const {
    TriLstmConfig c;
    c.embed_dim = embed_dim;
    c.hidden_dim = hidden_dim;
    c.mlp_hidden = mlp_hidden;
    c.dropout = dropout;
    c.final_loss_weight = include_final_loss ? 1.0 : 0.0;
    return c;
}

std::vector<Matrix*> Model::tensors() {
    return std::visit([](auto& p) { return p.tensors(); }, params);
}

std::vector<const Matrix*> Model::tensors() const {
    return std::visit([](const auto& p) { return p.tensors(); }, params);
}

std::vector<std::string> Model::tensor_names() const {
    return std::visit([](const auto& p) { return p.tensor_names(); }, params);
}

std::size_t Model::param_count() const {
    return std::visit([](const auto& p) { return p.param_count(); }, params);
}

Model init_model(ModelKind kind, const TrainConfig& cfg) {
    cfg.validate();
    RngStream rng = RngStream(cfg.seed).child("init");
    Model m;
    m.kind = kind;
    switch (kind) {
    case ModelKind::TriLstm:
        m.params = TriLstmParams::init(cfg.trilstm_config(), rng);
        break;
    case ModelKind::Lstm: {
        std::size_t hidden = cfg.baseline_hidden;
        if (hidden == 0) {
            const std::size_t target = TriLstmParams::zeros(cfg.trilstm_config()).param_count();
            hidden = lstm_hidden_for_budget(target, cfg.embed_dim, cfg.mlp_hidden);
        }
        m.params = SingleLstmParams::init(cfg.embed_dim, hidden, cfg.mlp_hidden, rng);
        break;
    }
    case ModelKind::Rnn: {
        std::size_t hidden = cfg.baseline_hidden;
        if (hidden == 0) {
            const std::size_t target = TriLstmParams::zeros(cfg.trilstm_config()).param_count();
            hidden = rnn_hidden_for_budget(target, cfg.mlp_hidden);
        }
        m.params = RnnParams::init(hidden, cfg.mlp_hidden, rng);
        break;
    }
    }
    return m;
}

double positive_probability(const Model& m, const PatientRecord& record,
                            const std::vector<std::size_t>& perm) {
    const auto& schema = BiomarkerSchema::standard();
    switch (m.kind) {
    case ModelKind::TriLstm:
        return trilstm_predict(m.tri(), record, schema, perm).p_yes;
    case ModelKind::Lstm:
        return lstm_baseline_forward(m.lstm(), tokens_for(record, perm), false, nullptr, 0.0)(
            0, kYesIndex);
    case ModelKind::Rnn:
        return rnn_forward(m.rnn(), tokens_for(record, perm), false, nullptr, 0.0)(0, kYesIndex);
    }
    return 0.0;
}

namespace {

struct ModelGrads {
    std::variant<TriLstmGrads, SingleLstmGrads, RnnGrads> grads;

    static ModelGrads zeros_like(const Model& m) {
        ModelGrads g;
        switch (m.kind) {
        case ModelKind::TriLstm:
            g.grads = TriLstmGrads::zeros_like(m.tri());
            break;
        case ModelKind::Lstm:
            g.grads = SingleLstmGrads::zeros_like(m.lstm());
            break;
        case ModelKind::Rnn:
            g.grads = RnnGrads::zeros_like(m.rnn());
            break;
        }
        return g;
    }

    std::vector<Matrix*> tensors() {
        return std::visit([](auto& g) { return g.tensors(); }, grads);
    }

    void set_zero() {
        for (Matrix* t : tensors())
            t->set_zero();
    }
};

// forward + loss + gradient accumulation for one view
LossBreakdown view_loss_and_grads(Model& m, const PatientRecord& rec, const OrderView& view,
                                  const TrainConfig& cfg, RngStream dropout_rng,
                                  ModelGrads& grads) {
    const auto& schema = BiomarkerSchema::standard();
    LossBreakdown lb;
    switch (m.kind) {
    case ModelKind::TriLstm: {
        auto [s1, s2] = token_streams(rec, view.perm);
        LossSpec spec = make_loss_spec(s1, s2, rec.label, schema, cfg.lambda, cfg.alpha,
                                       cfg.include_final_loss ? 1.0 : 0.0);
        TriLstmTape tape;
        TriLstmOutput out = trilstm_forward(m.tri(), s1, s2, true, &dropout_rng, &tape);
        lb = trilstm_loss(out, spec);
        trilstm_backward(m.tri(), tape, spec, std::get<TriLstmGrads>(grads.grads));
        break;
    }
    case ModelKind::Lstm: {
        SingleLstmTape tape;
        lstm_baseline_forward(m.lstm(), tokens_for(rec, view.perm), true, &dropout_rng,
                              cfg.dropout, &tape);
        auto [loss, grad] = cross_entropy(tape.final_dist, label_to_class(rec.label));
        (void)grad;
        lb.loss_final = loss;
        lb.lambda = cfg.lambda;
        lb.alpha = cfg.alpha;
        lb.total = loss;
        lstm_baseline_backward(m.lstm(), tape, rec.label, std::get<SingleLstmGrads>(grads.grads));
        break;
    }
    case ModelKind::Rnn: {
        RnnTape tape;
        rnn_forward(m.rnn(), tokens_for(rec, view.perm), true, &dropout_rng, cfg.dropout, &tape);
        auto [loss, grad] = cross_entropy(tape.final_dist, label_to_class(rec.label));
        (void)grad;
        lb.loss_final = loss;
        lb.lambda = cfg.lambda;
        lb.alpha = cfg.alpha;
        lb.total = loss;
        rnn_backward(m.rnn(), tape, rec.label, std::get<RnnGrads>(grads.grads));
        break;
    }
    }
    return lb;
}

} // namespace

TrainResult train(ModelKind kind, const Dataset& train_data, const TrainConfig& cfg) {
    cfg.validate();
    if (train_data.records.empty())
        throw ConfigError("train: empty training set");

    RngStream root(cfg.seed);
    Model model = init_model(kind, cfg);

    RngStream aug_rng = root.child("augment");
    const std::vector<OrderView> views = shuffle_order_augment(
        train_data, cfg.shuffle_order ? cfg.shuffle_copies : 1,
        cfg.shuffle_order ? &aug_rng : nullptr);

    Optimizer opt(cfg.opt);
    ModelGrads grads = ModelGrads::zeros_like(model);
    const std::size_t batch_size = std::min<std::size_t>(cfg.minibatch, views.size());
    RngStream epoch_root = root.child("epoch");

    TrainResult result;
    result.trace.reserve(cfg.epochs);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        RngStream epoch_rng = epoch_root.child(epoch);
        const auto order = epoch_rng.permutation(views.size());
        RngStream dropout_root = epoch_rng.child("dropout");

        EpochLoss etrace;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + batch_size);
            grads.set_zero();
            double batch_total = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const OrderView& view = views[order[k]];
                const PatientRecord& rec = train_data.records[view.record_index];
                LossBreakdown lb = view_loss_and_grads(model, rec, view, cfg,
                                                       dropout_root.child(order[k]), grads);
                batch_total += lb.total;
                etrace.total += lb.total;
                etrace.loss1 += lb.loss1;
                etrace.loss2 += lb.loss2;
                etrace.loss_final += lb.loss_final;
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            if (!std::isfinite(batch_total))
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                                    ", batch " + std::to_string(batch_index + 1));
            std::vector<Matrix*> gts = grads.tensors();
            std::vector<const Matrix*> gview;
            gview.reserve(gts.size());
            for (Matrix* g : gts) {
                for (double& v : g->raw())
                    v *= inv;
                gview.push_back(g);
            }
            opt.step(model.tensors(), gview);
        }
        const double inv_views = 1.0 / static_cast<double>(order.size());
        etrace.total *= inv_views;
        etrace.loss1 *= inv_views;
        etrace.loss2 *= inv_views;
        etrace.loss_final *= inv_views;
        result.trace.push_back(etrace);
    }

    result.model = std::move(model);
    return result;
}

std::vector<MetricsReport> evaluate_passes(const Model& m, const Dataset& test_data,
                                           const TrainConfig& cfg) {
    if (test_data.records.empty())
        throw ConfigError("evaluate: empty test set");
    const std::size_t n_bio = test_data.schema().size();
    RngStream eval_root = RngStream(cfg.seed).child("eval");

    std::vector<int> labels;
    labels.reserve(test_data.size());
    for (const auto& r : test_data.records)
        labels.push_back(r.label);

    std::vector<MetricsReport> passes;
    passes.reserve(cfg.eval_repeats);
    const auto identity = identity_permutation(n_bio);
    for (std::size_t pass = 0; pass < cfg.eval_repeats; ++pass) {
        RngStream pass_rng = eval_root.child(pass);
        std::vector<double> scores;
        std::vector<int> pass_labels;
        scores.reserve(test_data.size());
        if (cfg.eval_mode == EvalMode::ResampleRecords && cfg.shuffle_order) {
            // bootstrap resample, schema order within each pick
            for (std::size_t i = 0; i < test_data.size(); ++i) {
                const std::size_t pick = pass_rng.below(test_data.size());
                scores.push_back(positive_probability(m, test_data.records[pick], identity));
                pass_labels.push_back(labels[pick]);
            }
        } else {
            for (std::size_t i = 0; i < test_data.size(); ++i) {
                const auto perm =
                    cfg.shuffle_order ? pass_rng.child(i).permutation(n_bio) : identity;
                scores.push_back(positive_probability(m, test_data.records[i], perm));
            }
            pass_labels = labels;
        }
        MetricsReport r = compute_metrics(scores, pass_labels);
        r.seed = cfg.seed;
        r.order_shuffled = cfg.shuffle_order;
        r.model = to_string(m.kind);
        passes.push_back(r);
    }
    return passes;
}

MetricsReport evaluate(const Model& m, const Dataset& test_data, const TrainConfig& cfg) {
    return mean_report(evaluate_passes(m, test_data, cfg));
}

} // namespace trilstm
