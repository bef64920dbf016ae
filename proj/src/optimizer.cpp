#include "trilstm/optimizer.hpp"

#include <cmath>

namespace trilstm {

void OptimizerConfig::validate() const {
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw ConfigError("optimizer betas must lie in [0, 1)");
    if (lr <= 0.0)
        throw ConfigError("learning rate must be positive");
    if (eps <= 0.0)
        throw ConfigError("optimizer eps must be positive");
    if (grad_clip_norm < 0.0)
        throw ConfigError("grad_clip_norm must be >= 0");
}

OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "radam") return OptimizerKind::RAdam;
    if (s == "sgd-momentum" || s == "sgd") return OptimizerKind::SgdMomentum;
    throw ConfigError("unknown optimizer '" + s + "' (expected radam or sgd-momentum)");
}

std::string to_string(OptimizerKind k) {
    return k == OptimizerKind::RAdam ? "radam" : "sgd-momentum";
}

void radam_step(RAdamState& state, Matrix& param, const Matrix& grad,
                const OptimizerConfig& cfg) {
    if (!param.same_shape(grad))
        throw ShapeError("radam_step param/grad shape mismatch");
    if (!grad.all_finite())
        throw NumericError("radam_step received a non-finite gradient");
    if (state.t == 0) {
        state.m = Matrix(param.rows(), param.cols());
        state.v = Matrix(param.rows(), param.cols());
    }
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double b1t = std::pow(b1, t);
    const double b2t = std::pow(b2, t);
    const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
    const double rho_t = rho_inf - 2.0 * t * b2t / (1.0 - b2t);

    double rect = 0.0;
    const bool rectified = rho_t > 4.0;
    if (rectified)
        rect = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                         ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));

    for (std::size_t k = 0; k < param.size(); ++k) {
        const double g = grad.raw()[k];
        double& m = state.m.raw()[k];
        double& v = state.v.raw()[k];
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double m_hat = m / (1.0 - b1t);
        if (rectified) {
            const double v_hat = std::sqrt(v / (1.0 - b2t));
            param.raw()[k] -= cfg.lr * rect * m_hat / (v_hat + cfg.eps);
        } else {
            param.raw()[k] -= cfg.lr * m_hat;
        }
    }
}

void sgd_momentum_step(SgdState& state, Matrix& param, const Matrix& grad,
                       const OptimizerConfig& cfg) {
    if (!param.same_shape(grad))
        throw ShapeError("sgd_momentum_step param/grad shape mismatch");
    if (!grad.all_finite())
        throw NumericError("sgd_momentum_step received a non-finite gradient");
    if (state.velocity.empty())
        state.velocity = Matrix(param.rows(), param.cols());
    for (std::size_t k = 0; k < param.size(); ++k) {
        double& vel = state.velocity.raw()[k];
        vel = cfg.momentum * vel + grad.raw()[k];
        param.raw()[k] -= cfg.lr * vel;
    }
}

void Optimizer::step(const std::vector<Matrix*>& params,
                     const std::vector<const Matrix*>& grads) {
    if (params.size() != grads.size())
        throw ProtocolError("optimizer step: param/grad tensor count mismatch");

    double clip_scale = 1.0;
    if (cfg_.grad_clip_norm > 0.0) {
        double total = 0.0;
        for (const Matrix* g : grads)
            total += sum_squares(*g);
        const double norm = std::sqrt(total);
        if (norm > cfg_.grad_clip_norm)
            clip_scale = cfg_.grad_clip_norm / norm;
    }

    if (cfg_.kind == OptimizerKind::RAdam) {
        if (radam_.empty())
            radam_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (clip_scale != 1.0) {
                Matrix clipped = scale(*grads[i], clip_scale);
                radam_step(radam_[i], *params[i], clipped, cfg_);
            } else {
                radam_step(radam_[i], *params[i], *grads[i], cfg_);
            }
        }
    } else {
        if (sgd_.empty())
            sgd_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (clip_scale != 1.0) {
                Matrix clipped = scale(*grads[i], clip_scale);
                sgd_momentum_step(sgd_[i], *params[i], clipped, cfg_);
            } else {
                sgd_momentum_step(sgd_[i], *params[i], *grads[i], cfg_);
            }
        }
    }
}

std::pair<double, Matrix> cross_entropy(const Matrix& pred, std::size_t target_index) {
    if (pred.rows() != 1)
        throw ShapeError("cross_entropy expects a probability row");
    if (target_index >= pred.cols())
        throw BoundsError("cross_entropy target " + std::to_string(target_index) +
                          " out of range for " + std::to_string(pred.cols()) + " classes");
    const double p = std::max(pred(0, target_index), 1e-12);
    Matrix grad = pred;
    grad(0, target_index) -= 1.0;
    return {-std::log(p), std::move(grad)};
}

} // namespace trilstm
