#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace aberrant_mix {

using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::VectorXd;

/// Confirmatory zero pattern: pattern(j, f) == 1 marks a free loading of
/// item j on factor f. Cross-loadings are allowed.
class FactorStructure {
public:
    FactorStructure() = default;
    explicit FactorStructure(MatrixXi pattern);

    /// Items split into q contiguous blocks of (nearly) equal size, one free
    /// loading per item.
    static FactorStructure simple(int p, int q);

    int p() const { return static_cast<int>(pattern_.rows()); }
    int q() const { return static_cast<int>(pattern_.cols()); }
    const MatrixXi& pattern() const { return pattern_; }
    bool is_free(int item, int factor) const { return pattern_(item, factor) != 0; }
    int n_free() const { return static_cast<int>(pattern_.count()); }
    std::vector<int> free_factors(int item) const;

    friend bool operator==(const FactorStructure& a, const FactorStructure& b) {
        return a.pattern_ == b.pattern_;
    }

private:
    MatrixXi pattern_;
};

struct CfaParams {
    MatrixXd loadings;      // p x q, zero where the pattern is zero
    MatrixXd factor_corr;   // q x q, unit diagonal
    VectorXd uniquenesses;  // diagonal of Theta_delta
    VectorXd factor_means;  // q
    bool means_fixed_zero = false;

    int p() const { return static_cast<int>(loadings.rows()); }
    int q() const { return static_cast<int>(loadings.cols()); }
};

/// EFA factors have identity covariance; it is implied, not stored.
struct EfaParams {
    MatrixXd loadings;      // p x K
    VectorXd uniquenesses;  // diagonal of Psi_epsilon
    VectorXd factor_means;  // K

    int p() const { return static_cast<int>(loadings.rows()); }
    int k() const { return static_cast<int>(loadings.cols()); }
};

/// Logit model for the probability of belonging to the CFA component.
struct MixtureReg {
    VectorXd beta;                         // C+1, index 0 is the intercept
    std::vector<std::string> covariate_names;  // C labels

    int n_covariates() const { return static_cast<int>(beta.size()) - 1; }
};

struct MixtureParams {
    CfaParams cfa;
    EfaParams efa;
    MixtureReg reg;
};

/// What is being fit: the CFA zero pattern, the EFA factor count, and
/// whether the CFA factor means are pinned at zero.
struct ModelSpec {
    FactorStructure structure;
    int k = 1;
    bool means_fixed_zero = false;
};

/// Responses Y (n x p) and mixture design X (n x (C+1), first column all 1).
/// truth(i) == 1 marks a CFA-generated row when known.
struct Dataset {
    MatrixXd responses;
    MatrixXd design;
    std::vector<std::string> item_labels;
    std::vector<std::string> covariate_names;
    std::optional<Eigen::VectorXi> truth;

    int n() const { return static_cast<int>(responses.rows()); }
    int p() const { return static_cast<int>(responses.cols()); }
    int n_covariates() const { return static_cast<int>(design.cols()) - 1; }

    /// Intercept-only design for the given responses.
    static Dataset from_responses(MatrixXd responses);
};

void validate(const FactorStructure& structure);
void validate(const CfaParams& cfa, const FactorStructure& structure);
void validate(const EfaParams& efa);
void validate(const MixtureReg& reg);
void validate(const MixtureParams& params, const FactorStructure& structure);
void validate(const Dataset& data);

/// Design restricted to the intercept plus the named covariates, in the
/// order given. Throws InvalidArgument for an unknown name.
Dataset select_covariates(const Dataset& data, const std::vector<std::string>& names);

/// Same rows in a new order; truth is permuted alongside.
Dataset take_rows(const Dataset& data, const std::vector<int>& rows);

/// Columns of the responses shifted to zero mean and, when `scale` is set,
/// divided by their (population) standard deviation.
Dataset standardize_columns(const Dataset& data, bool scale);

}  // namespace aberrant_mix
