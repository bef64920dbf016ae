#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trilstm/error.hpp"

namespace trilstm {

struct MetricsReport {
    double auc = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    double accuracy = 0.0;
    // doubles so that averaged reports keep the same fields
    double tp = 0, fn = 0, tn = 0, fp = 0;
    std::string model;
    bool order_shuffled = false;
    std::uint64_t seed = 0;
};

// Mann-Whitney rank AUC: P(score_pos > score_neg) with ties counted half.
// Throws ConfigError when only one class is present.
double rank_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Confusion counts at threshold 0.5 (score > 0.5 predicts positive) plus
// rank AUC. Set require_auc = false to tolerate single-class labels (auc
// becomes NaN).
MetricsReport compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                              bool require_auc = true);

MetricsReport mean_report(const std::vector<MetricsReport>& reports);

} // namespace trilstm
