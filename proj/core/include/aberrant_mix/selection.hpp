#pragma once

#include "aberrant_mix/em.hpp"
#include "aberrant_mix/metrics.hpp"
#include "aberrant_mix/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace aberrant_mix {

/// EN = -sum_i sum_w z_iw log z_iw with 0 log 0 = 0.
double entropy_raw(const MatrixXd& responsibilities);

struct CriteriaReport {
    double loglik = 0.0;
    int n_params = 0;
    int n = 0;
    double en = 0.0;
    double aic = 0.0;
    double caic = 0.0;
    double bic = 0.0;
    double ssbic = 0.0;
    double clc = 0.0;
    double icl_bic = 0.0;
    double h = 1.0;
};

CriteriaReport criteria(double loglik, int n_params, int n, double en);

struct ScanCandidate {
    int k = 1;
    std::vector<std::string> covariates;

    std::string label() const;
};

struct ScanRow {
    ScanCandidate candidate;
    bool ok = false;
    std::string failure;
    CriteriaReport report;
    std::optional<ClassMetrics> metrics;  // when the data carry truth
    std::optional<FitResult> fit;
};

enum class Index { aic, caic, bic, ssbic, clc, icl_bic, h };

/// Names in table order: AIC, CAIC, BIC, ssBIC, CLC, ICL_BIC, H.
const std::vector<std::pair<Index, std::string>>& index_names();

double index_value(const CriteriaReport& report, Index index);

struct Selection {
    std::optional<std::size_t> selected;  // row index
    std::vector<std::size_t> eligible;    // rows inside the entropy band
    // per index: row with the best value (max for H, min otherwise)
    std::vector<std::pair<Index, std::optional<std::size_t>>> winners;
};

/// Among successful rows with H >= max H - band, the minimum ICL_BIC;
/// ties go to the earlier row.
Selection select_model(const std::vector<ScanRow>& rows, double entropy_band = 0.005);

struct ScanOptions {
    EmOptions em;
    double entropy_band = 0.005;
    bool means_fixed_zero = false;
    bool keep_fits = false;
};

/// Fits every (K, covariate subset) pair independently, in the order
/// K-major then subset. Failed fits are flagged and excluded from selection.
std::vector<ScanRow> scan(const Dataset& data, const FactorStructure& structure, const std::vector<int>& k_values,
                          const std::vector<std::vector<std::string>>& covariate_subsets,
                          const ScanOptions& opts);

}  // namespace aberrant_mix
