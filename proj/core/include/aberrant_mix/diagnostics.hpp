#pragma once

#include "aberrant_mix/em.hpp"
#include "aberrant_mix/types.hpp"

namespace aberrant_mix {

struct FitIndices {
    double discrepancy = 0.0;  // ML discrepancy F
    double chi_square = 0.0;
    int df = 0;
    double chi_square_null = 0.0;
    int df_null = 0;
    double cfi = 1.0;
    double rmsea = 0.0;
};

/// F = log|Sigma| + tr(S Sigma^-1) - log|S| - p.
double ml_discrepancy(const MatrixXd& sample_cov, const MatrixXd& model_cov);

/// Chi-square (n-1) F against the independence model; df = 0 counts as a
/// perfect fit.
FitIndices fit_indices(const MatrixXd& sample_cov, const MatrixXd& model_cov, int n, int n_free_params);

/// Options for the covariance-structure fits: tight tolerance on F, no ridge.
EmOptions baseline_options();

struct StructuredFit {
    CfaParams params;  // factor means fixed at zero
    int n_iter = 0;
    bool converged = false;
};

/// Maximum-likelihood CFA of a p x p second-moment matrix by EM (the
/// mixture M-step with every responsibility pinned to 1).
StructuredFit fit_structured_fa(const MatrixXd& second_moment, const FactorStructure& structure,
                                const EmOptions& opts = baseline_options());

struct CfaBaseline {
    CfaParams params;
    FitIndices indices;
    MatrixXd sample_cov;
    int n_iter = 0;
    bool converged = false;
};

/// Single-component CFA on the centered sample covariance (divisor n).
CfaBaseline fit_cfa_single(const Dataset& data, const FactorStructure& structure,
                           const EmOptions& opts = baseline_options());

/// Pearson correlation of the columns of `rows` (unit diagonal exactly).
MatrixXd correlation(const MatrixXd& rows);

struct ClassCorrelations {
    MatrixXd cfa;  // rows assigned 1
    MatrixXd efa;  // rows assigned 0
};

/// Correlation of the rows with assignments == cls. Throws InvalidArgument
/// naming the class when it has fewer than 3 rows.
MatrixXd class_correlation(const Dataset& data, const Eigen::VectorXi& assignments, int cls);

ClassCorrelations corr_by_class(const Dataset& data, const Eigen::VectorXi& assignments);

}  // namespace aberrant_mix
