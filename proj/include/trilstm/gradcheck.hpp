#pragma once

#include <functional>
#include <string>
#include <vector>

#include "trilstm/matrix.hpp"

namespace trilstm {

// Central-difference gradient verification. The numeric side only ever
// calls the loss closure, so it stays independent of any analytic backward
// path it is checking.
struct GradCheckResult {
    std::string name;
    double max_rel_err = 0.0;
    std::string worst_tensor;
    std::size_t worst_index = 0;
    bool passed = false;
};

// rel err = |a - n| / max(|a|, |n|, 1e-8), central differences with the
// given epsilon over every entry of every tensor. The loss closure should
// evaluate at extended precision (see reference.hpp) so the difference
// carries less rounding noise than the 1e-8 floor absorbs.
GradCheckResult check_gradients(const std::string& name, const std::vector<Matrix*>& params,
                                const std::vector<const Matrix*>& analytic,
                                const std::vector<std::string>& names,
                                const std::function<long double()>& loss,
                                double epsilon = 1e-5, double tolerance = 1e-4);

struct GradCheckReport {
    std::vector<GradCheckResult> results;
    bool all_passed = false;
    double seconds = 0.0;
};

// Small-instance checks of every model family: TRI-LSTM (embed 4, hidden 6,
// both streams from a 17-biomarker record), the LSTM baseline and the RNN
// baseline, plus a bare LSTM cell and MLP head.
GradCheckReport run_gradcheck(std::uint64_t seed = 7);

std::string format_gradcheck_report(const GradCheckReport& report);

} // namespace trilstm
