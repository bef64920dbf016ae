#include "trilstm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace trilstm {

double rank_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ShapeError("rank_auc: scores/labels length mismatch");
    if (scores.empty())
        throw ConfigError("rank_auc: empty input");

    std::size_t pos = 0;
    for (int l : labels)
        if (l == 1) ++pos;
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0)
        throw ConfigError("rank_auc undefined: only one class present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks within tie groups, 1-based
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]])
            ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1)
                pos_rank_sum += avg_rank;
        i = j + 1;
    }
    const double p = static_cast<double>(pos);
    const double n = static_cast<double>(neg);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

MetricsReport compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                              bool require_auc) {
    if (scores.size() != labels.size())
        throw ShapeError("compute_metrics: scores/labels length mismatch");
    if (scores.empty())
        throw ConfigError("compute_metrics: empty input");

    MetricsReport r;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred_pos = scores[i] > 0.5;
        if (labels[i] == 1)
            pred_pos ? ++r.tp : ++r.fn;
        else
            pred_pos ? ++r.fp : ++r.tn;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.recall = (r.tp + r.fn) > 0 ? r.tp / (r.tp + r.fn) : nan;
    r.specificity = (r.tn + r.fp) > 0 ? r.tn / (r.tn + r.fp) : nan;
    r.accuracy = (r.tp + r.tn) / static_cast<double>(scores.size());

    const bool single_class = (r.tp + r.fn == 0) || (r.tn + r.fp == 0);
    if (single_class) {
        if (require_auc)
            throw ConfigError("AUC undefined: only one class present");
        r.auc = nan;
    } else {
        r.auc = rank_auc(scores, labels);
    }
    return r;
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
    if (reports.empty())
        throw ConfigError("mean_report: no reports");
    MetricsReport m = reports.front();
    m.auc = m.recall = m.specificity = m.accuracy = 0.0;
    m.tp = m.fn = m.tn = m.fp = 0.0;
    for (const auto& r : reports) {
        m.auc += r.auc;
        m.recall += r.recall;
        m.specificity += r.specificity;
        m.accuracy += r.accuracy;
        m.tp += r.tp;
        m.fn += r.fn;
        m.tn += r.tn;
        m.fp += r.fp;
    }
    const double k = static_cast<double>(reports.size());
    m.auc /= k;
    m.recall /= k;
    m.specificity /= k;
    m.accuracy /= k;
    m.tp /= k;
    m.fn /= k;
    m.tn /= k;
    m.fp /= k;
    return m;
}

} // namespace trilstm
