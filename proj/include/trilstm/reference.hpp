#pragma once

#include <span>
#include <vector>

#include "trilstm/baselines.hpp"
#include "trilstm/lstm.hpp"
#include "trilstm/mlp.hpp"
#include "trilstm/trilstm.hpp"

namespace trilstm::reference {

// Independent long-double re-evaluation of every forward path, used as the
// finite-difference side of the gradient checks. Keeping it at extended
// precision pushes the rounding error of a central difference at eps = 1e-5
// below the 1e-12 agreement the near-zero-gradient entries need; keeping it
// a from-scratch implementation means the check never trusts the code path
// it is verifying.

long double trilstm_total_loss(const TriLstmParams& p, const std::vector<Token>& stream1,
                               const std::vector<Token>& stream2, const LossSpec& spec);

long double lstm_baseline_ce(const SingleLstmParams& p, const std::vector<Token>& sequence,
                             int label);

long double rnn_ce(const RnnParams& p, const std::vector<Token>& sequence, int label);

// sum_t upstream[t] . h_t for a bare cell run, the readout used by the
// cell-level checks
long double lstm_cell_readout(const LstmParams& p, std::span<const Matrix> inputs,
                              std::span<const Matrix> upstream);

long double mlp_ce(const MlpParams& p, const Matrix& x, std::size_t target);

} // namespace trilstm::reference
