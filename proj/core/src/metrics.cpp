#include "aberrant_mix/metrics.hpp"

#include "aberrant_mix/error.hpp"

#include <cmath>

namespace aberrant_mix {

ConfusionCounts confusion(const Eigen::VectorXi& truth, const Eigen::VectorXi& predicted) {
    if (truth.size() != predicted.size()) {
        throw InvalidArgument("truth and predictions differ in length");
    }
    ConfusionCounts c;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        const bool aberrant = truth(i) == 0;
        const bool flagged = predicted(i) == 0;
        if (aberrant) {
            (flagged ? c.tp : c.fn) += 1;
        } else {
            (flagged ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

ClassMetrics class_metrics(const ConfusionCounts& counts) {
    ClassMetrics m;
    m.counts = counts;
    const auto tp = static_cast<double>(counts.tp);
    const auto fp = static_cast<double>(counts.fp);
    const auto tn = static_cast<double>(counts.tn);
    const auto fn = static_cast<double>(counts.fn);
    m.se = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    m.sp = tn + fp > 0 ? tn / (tn + fp) : 0.0;
    m.bacc = (m.se + m.sp) / 2.0;
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    m.mcc = denom > 0 ? (tp * tn - fp * fn) / std::sqrt(denom) : 0.0;
    return m;
}

ClassMetrics score_classification(const Eigen::VectorXi& truth, const Eigen::VectorXi& predicted) {
    return class_metrics(confusion(truth, predicted));
}

}  // namespace aberrant_mix
