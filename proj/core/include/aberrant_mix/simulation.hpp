#pragma once

#include "aberrant_mix/metrics.hpp"
#include "aberrant_mix/rng.hpp"
#include "aberrant_mix/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace aberrant_mix {

struct Study1Config {
    int n = 1000;
    int p = 30;
    double pi = 0.8;
    int q = 3;
    int k = 2;
    int c = 1;  // covariates: 1 = Bernoulli(0.5), 2 = plus U(-5, 5)
    std::uint64_t seed = 0;
};

struct Study2Config {
    int n = 1000;
    int p = 16;
    double pi = 0.8;
    double gamma = 4.0;
    double delta = 1.5;
    int q = 4;
    int k = 1;
    int categories = 11;
    double kappa = 1.0;
    std::vector<double> thresholds;  // empty: normal quantiles at j / categories
    std::uint64_t seed = 0;
};

void validate(const Study1Config& cfg);
void validate(const Study2Config& cfg);

/// A generated dataset with the parameters it came from. Rows keep their
/// draw order; data.truth(i) == 1 marks a CFA (honest) row.
struct SimulatedData {
    Dataset data;
    FactorStructure structure;
    CfaParams cfa;
    std::optional<EfaParams> efa;  // absent for the faking study
    MixtureReg reg;
};

/// LKJ(shape) correlation matrix by the onion method.
MatrixXd sample_lkj(int q, double shape, Rng& rng);

/// m rows of y = L1 eta + delta, eta ~ N(mu, Phi), delta ~ N(0, Theta).
MatrixXd gen_cfa_block(const CfaParams& params, int m, Rng& rng);

/// r rows of y = L2 xi + eps, xi ~ N(nu, I), eps ~ N(0, Psi).
MatrixXd gen_efa_block(const EfaParams& params, int r, Rng& rng);

SimulatedData gen_study1(const Study1Config& cfg);

/// Category 1 + #{j : thresholds_j < value}; a value equal to a threshold
/// falls in the lower category.
MatrixXi discretize(const MatrixXd& values, int categories, const std::vector<double>& thresholds);

/// Standard normal quantiles at j / categories, j = 1..categories-1.
std::vector<double> default_thresholds(int categories);

/// Row-stochastic M x M matrix of P(faked = m' | honest = m) (0-based).
MatrixXd sgr_replacement_matrix(int categories, double gamma, double delta, double kappa);

/// Resamples every cell of the selected rows from the replacement matrix
/// row of its current value. Other rows are copied unchanged.
MatrixXi perturb_faking(const MatrixXi& responses, const std::vector<int>& rows, int categories, double gamma,
                        double delta, double kappa, Rng& rng);

SimulatedData gen_study2(const Study2Config& cfg);

struct BiasRmse {
    double bias = 0.0;
    double rmse = 0.0;
};

struct Recovery {
    BiasRmse loadings;      // free entries of L1
    BiasRmse uniquenesses;  // Theta_delta
    BiasRmse factor_corr;   // strict lower triangle of Phi
    BiasRmse factor_means;  // mu
    BiasRmse pi;            // logistic(beta_0)
};

/// Estimated CFA columns are sign-aligned to the truth before comparison.
Recovery score_recovery(const CfaParams& truth, const CfaParams& estimate, const FactorStructure& structure,
                        double true_pi, double estimated_pi);

}  // namespace aberrant_mix
