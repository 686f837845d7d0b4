#pragma once

#include "aberrant_mix/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace aberrant_mix {

struct EmOptions {
    int max_iter = 500;
    double tol = 1e-6;              // stop when |l(t) - l(t-1)| < tol
    int n_starts = 10;
    double ridge = 1e-6;            // added to every uniqueness update
    double uniqueness_floor = 1e-4;
    std::uint64_t seed = 0;
    double jitter_sd = 0.05;        // loading jitter per start, relative to each column's RMS; 0 disables
    bool alternate_orientation = true;  // odd starts swap which group seeds the CFA block
    double min_component_weight = 1.0;  // total responsibility below this is "empty"
};

void validate(const EmOptions& opts);

/// Conditional factor moments given y_i, per component. The conditional
/// covariances do not depend on y_i and are stored once:
/// E[eta eta' | y_i] = cfa_cov + cfa_means.row(i)' cfa_means.row(i).
struct EStepMoments {
    MatrixXd responsibilities;  // n x 2: P(z=1|y), P(z=0|y)
    MatrixXd cfa_means;         // n x q
    MatrixXd cfa_cov;           // q x q
    MatrixXd efa_means;         // n x K
    MatrixXd efa_cov;           // K x K
    double loglik = 0.0;        // observed-data log-likelihood at the input parameters

    MatrixXd cfa_second_moment(int i) const;
    MatrixXd efa_second_moment(int i) const;
};

EStepMoments e_step(const Dataset& data, const MixtureParams& params);

/// Responsibility-weighted complete-data maximizer for the CFA block.
/// Phi is rescaled to unit diagonal with the compensating scale moved into
/// the loadings and factor means, so L1 Phi L1' and L1 mu are unchanged.
CfaParams m_step_cfa(const Dataset& data, const EStepMoments& moments, const FactorStructure& structure,
                     bool means_fixed_zero, const EmOptions& opts = {});

EfaParams m_step_efa(const Dataset& data, const EStepMoments& moments, const EmOptions& opts = {});

struct BetaStep {
    MixtureReg reg;
    int iterations = 0;
    bool separated = false;  // |x.beta| hit the clamp of 30
    bool ridged = false;     // Hessian needed a ridge of 1e-8
};

/// Newton (IRLS) maximization of sum_i [z_i log pi_i + (1-z_i) log(1-pi_i)].
BetaStep m_step_beta(const MatrixXd& design, const MatrixXd& responsibilities, const MixtureReg& init);

/// Sufficient statistics of a weighted factor-model M-step.
struct FactorSuffStats {
    double weight = 0.0;      // sum w_i
    VectorXd sum_means;       // sum w_i E[f_i]
    MatrixXd sum_second;      // sum w_i E[f_i f_i']
    MatrixXd cross;           // sum w_i y_i E[f_i]'   (p x factors)
    VectorXd sum_sq;          // sum w_i y_ij^2        (p)
};

/// Loadings restricted to `pattern` (1 = free) and uniquenesses maximizing
/// the expected complete-data log-likelihood of y given the factors.
/// Throws SingularSystem naming the item whose normal equations fail.
void solve_loadings(const FactorSuffStats& stats, const MatrixXi& pattern, const EmOptions& opts,
                    MatrixXd& loadings, VectorXd& uniquenesses);

/// CFA update from sufficient statistics (shared by the mixture fit and
/// the single-component baseline fit).
CfaParams cfa_update(const FactorSuffStats& stats, const FactorStructure& structure, bool means_fixed_zero,
                     const EmOptions& opts);

/// CFA starting values from a mean and covariance: per-factor leading
/// eigenvectors for the loadings, projected factor correlations shrunk until
/// positive definite, residual uniquenesses, least-squares factor means.
CfaParams cfa_start(const VectorXd& mean, const MatrixXd& cov, const FactorStructure& structure,
                    bool means_fixed_zero, const EmOptions& opts);

/// Starting values for one EM chain. The two-group split depends only on
/// opts.seed. Even starts give the CFA block to the group whose assignment
/// has the higher initial log-likelihood, odd starts to the other group
/// (unless alternate_orientation is off). The first start of each
/// orientation is unperturbed; later starts jitter the loadings with a
/// stream keyed by `start` and re-solve the factor means.
MixtureParams initialize(const Dataset& data, const ModelSpec& spec, const EmOptions& opts, int start = 0);

struct FitResult {
    MixtureParams params;
    MatrixXd responsibilities;
    Eigen::VectorXi assignments;
    std::vector<double> loglik_trace;
    bool converged = false;
    int n_iter = 0;
    int n_params = 0;
    double entropy_raw = 0.0;
    int best_start = 0;
    std::vector<std::string> start_failures;  // empty string for starts that succeeded
    bool beta_separated = false;
    bool beta_ridged = false;

    double loglik() const { return loglik_trace.empty() ? 0.0 : loglik_trace.back(); }
};

/// One EM chain from the given starting values.
FitResult run_em(const Dataset& data, const ModelSpec& spec, const MixtureParams& start,
                 const EmOptions& opts);

/// opts.n_starts chains from initialize(); returns the highest final
/// log-likelihood (ties go to the lower start index). Throws FitFailure
/// when every start fails.
FitResult fit_em(const Dataset& data, const ModelSpec& spec, const EmOptions& opts);

/// Varimax rotation matrix R (K x K, orthogonal) for a loading matrix.
MatrixXd varimax_rotation(const MatrixXd& loadings, int max_iter = 1000, double tol = 1e-10);

/// Rotates the EFA block as (L2 R, R' nu); the likelihood is unchanged.
EfaParams rotate_efa(const EfaParams& efa, const MatrixXd& rotation);

}  // namespace aberrant_mix
