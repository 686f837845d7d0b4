#pragma once

#include <Eigen/Dense>

namespace aberrant_mix {

/// Positive class is the aberrant (EFA, z = 0) component.
struct ConfusionCounts {
    long tp = 0;  // truth 0, predicted 0
    long fp = 0;  // truth 1, predicted 0
    long tn = 0;  // truth 1, predicted 1
    long fn = 0;  // truth 0, predicted 1

    long total() const { return tp + fp + tn + fn; }
};

/// SE and SP are 0 when their class is absent; MCC is 0 when any marginal
/// in its denominator is zero.
struct ClassMetrics {
    ConfusionCounts counts;
    double se = 0.0;
    double sp = 0.0;
    double bacc = 0.0;
    double mcc = 0.0;
};

ConfusionCounts confusion(const Eigen::VectorXi& truth, const Eigen::VectorXi& predicted);

ClassMetrics class_metrics(const ConfusionCounts& counts);

ClassMetrics score_classification(const Eigen::VectorXi& truth, const Eigen::VectorXi& predicted);

}  // namespace aberrant_mix
