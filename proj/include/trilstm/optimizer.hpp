#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trilstm/matrix.hpp"

namespace trilstm {

enum class OptimizerKind { RAdam, SgdMomentum };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::RAdam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double momentum = 0.9;       // SgdMomentum only
    double grad_clip_norm = 0.0; // global-norm cap, 0 = off

    void validate() const;
};

OptimizerKind optimizer_kind_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

// Per-tensor moments for the rectified-Adam update.
struct RAdamState {
    std::size_t t = 0;
    Matrix m, v;
};

// Rectified Adam: plain bias-corrected momentum while the variance estimate
// is unreliable (rho_t <= 4), variance-rectified adaptive step afterwards.
void radam_step(RAdamState& state, Matrix& param, const Matrix& grad,
                const OptimizerConfig& cfg);

struct SgdState {
    Matrix velocity;
};

void sgd_momentum_step(SgdState& state, Matrix& param, const Matrix& grad,
                       const OptimizerConfig& cfg);

// Owns the per-tensor state for a fixed list of parameter tensors; the list
// must keep the same order and shapes across steps.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

    void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads);

    const OptimizerConfig& config() const { return cfg_; }

private:
    OptimizerConfig cfg_;
    std::vector<RAdamState> radam_;
    std::vector<SgdState> sgd_;
};

// loss = -log(max(pred[target], 1e-12)); gradient in logit space is
// pred - one_hot(target). pred is a probability row.
std::pair<double, Matrix> cross_entropy(const Matrix& pred, std::size_t target_index);

} // namespace trilstm
