#pragma once

#include "aberrant_mix/types.hpp"

#include <Eigen/Dense>

#include <vector>

namespace aberrant_mix {

/// Sigma_1 = L1 Phi L1' + Theta_delta.
MatrixXd assemble_cfa_cov(const CfaParams& cfa);

/// Sigma_2 = L2 L2' + Psi_epsilon.
MatrixXd assemble_efa_cov(const EfaParams& efa);

/// pi_i = logistic(x_i . beta), one entry per design row.
VectorXd mixture_weights(const MatrixXd& design, const MixtureReg& reg);

double mvn_logdensity(const VectorXd& y, const VectorXd& mean, const MatrixXd& cov);

/// Log N(y_i; mean, cov) for every row of `rows`, sharing one factorization.
VectorXd mvn_logdensity_rows(const MatrixXd& rows, const VectorXd& mean, const MatrixXd& cov);

/// Per-observation pieces of the mixture density.
struct ComponentLogDensities {
    VectorXd log_pi;      // log pi_i
    VectorXd log_1m_pi;   // log(1 - pi_i)
    VectorXd cfa;         // log N_p(y_i; L1 mu, Sigma_1)
    VectorXd efa;         // log N_p(y_i; L2 nu, Sigma_2)
};

ComponentLogDensities component_log_densities(const Dataset& data, const MixtureParams& params);

/// Per-observation log f(y_i), via log-sum-exp.
VectorXd observation_loglik(const ComponentLogDensities& parts);

/// Responsibilities from the log-space terms a_i = log pi_i + log f1 and
/// b_i = log(1-pi_i) + log f0. Column 0 is P(z=1|y), column 1 is P(z=0|y).
MatrixXd responsibilities_from_log(const VectorXd& log_cfa_term, const VectorXd& log_efa_term);

double mixture_loglik(const Dataset& data, const MixtureParams& params);

MatrixXd posterior_probs(const Dataset& data, const MixtureParams& params);

/// 1 = CFA component, 0 = EFA (aberrant) component. Ties go to the CFA side.
Eigen::VectorXi classify(const MatrixXd& responsibilities);

/// Flips every CFA factor whose loading column has a negative inner product
/// with the matching reference column, along with its Phi row/column and mu
/// entry. The implied distribution is unchanged.
CfaParams align_cfa_signs(const CfaParams& estimate, const MatrixXd& reference_loadings);

/// Matches EFA columns to the reference greedily by largest absolute inner
/// product, then flips signs (loadings and nu) to agree with the reference.
EfaParams align_efa_columns(const EfaParams& estimate, const MatrixXd& reference_loadings);

/// Free-parameter count of the CFA+EFA model.
int count_params(const FactorStructure& structure, int k, int n_covariates, bool means_fixed_zero,
                 int n_free_loadings);

inline int count_params(const ModelSpec& spec, int n_covariates) {
    return count_params(spec.structure, spec.k, n_covariates, spec.means_fixed_zero,
                        spec.structure.n_free());
}

}  // namespace aberrant_mix
