#include "aberrant_mix/model.hpp"

#include "aberrant_mix/error.hpp"
#include "aberrant_mix/linalg.hpp"

#include <cmath>
#include <vector>

namespace aberrant_mix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)

void symmetrize(MatrixXd& m) {
    m = 0.5 * (m + m.transpose()).eval();
}

}  // namespace

MatrixXd assemble_cfa_cov(const CfaParams& cfa) {
    MatrixXd sigma = cfa.loadings * cfa.factor_corr * cfa.loadings.transpose();
    symmetrize(sigma);
    sigma.diagonal() += cfa.uniquenesses;
    return sigma;
}

MatrixXd assemble_efa_cov(const EfaParams& efa) {
    MatrixXd sigma = efa.loadings * efa.loadings.transpose();
    symmetrize(sigma);
    sigma.diagonal() += efa.uniquenesses;
    return sigma;
}

VectorXd mixture_weights(const MatrixXd& design, const MixtureReg& reg) {
    if (design.cols() != reg.beta.size()) {
        throw InvalidArgument("design has " + std::to_string(design.cols()) + " columns but beta has " +
                              std::to_string(reg.beta.size()) + " entries");
    }
    const VectorXd eta = design * reg.beta;
    return eta.unaryExpr([](double x) { return logistic(x); });
}

VectorXd mvn_logdensity_rows(const MatrixXd& rows, const VectorXd& mean, const MatrixXd& cov) {
    if (rows.cols() != mean.size() || cov.rows() != mean.size()) {
        throw InvalidArgument("mvn_logdensity: dimension mismatch");
    }
    const auto llt = cholesky_checked(cov, "component covariance");
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    MatrixXd centered = (rows.rowwise() - mean.transpose()).transpose();  // p x n
    llt.matrixL().solveInPlace(centered);
    const VectorXd quad = centered.colwise().squaredNorm().transpose();
    const double constant = -0.5 * (static_cast<double>(mean.size()) * kLog2Pi + log_det);
    return (constant - 0.5 * quad.array()).matrix();
}

double mvn_logdensity(const VectorXd& y, const VectorXd& mean, const MatrixXd& cov) {
    return mvn_logdensity_rows(y.transpose(), mean, cov)(0);
}

ComponentLogDensities component_log_densities(const Dataset& data, const MixtureParams& params) {
    if (data.p() != params.cfa.p() || data.p() != params.efa.p()) {
        throw InvalidArgument("dataset has p=" + std::to_string(data.p()) +
                              " but parameters have p=" + std::to_string(params.cfa.p()));
    }
    ComponentLogDensities out;
    if (data.design.cols() != params.reg.beta.size()) {
        throw InvalidArgument("design has " + std::to_string(data.design.cols()) +
                              " columns but beta has " + std::to_string(params.reg.beta.size()));
    }
    const VectorXd eta = data.design * params.reg.beta;
    out.log_pi = eta.unaryExpr([](double x) { return log_sigmoid(x); });
    out.log_1m_pi = eta.unaryExpr([](double x) { return log_sigmoid(-x); });
    out.cfa = mvn_logdensity_rows(data.responses, params.cfa.loadings * params.cfa.factor_means,
                                  assemble_cfa_cov(params.cfa));
    out.efa = mvn_logdensity_rows(data.responses, params.efa.loadings * params.efa.factor_means,
                                  assemble_efa_cov(params.efa));
    return out;
}

VectorXd observation_loglik(const ComponentLogDensities& parts) {
    const Eigen::Index n = parts.cfa.size();
    VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i) = log_sum_exp(parts.log_pi(i) + parts.cfa(i), parts.log_1m_pi(i) + parts.efa(i));
    }
    return out;
}

MatrixXd responsibilities_from_log(const VectorXd& log_cfa_term, const VectorXd& log_efa_term) {
    const Eigen::Index n = log_cfa_term.size();
    MatrixXd resp(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = log_cfa_term(i);
        const double b = log_efa_term(i);
        // 1/(1+exp(d)) stays in [0,1] for any d, including +-inf.
        resp(i, 0) = 1.0 / (1.0 + std::exp(b - a));
        resp(i, 1) = 1.0 / (1.0 + std::exp(a - b));
    }
    return resp;
}

double mixture_loglik(const Dataset& data, const MixtureParams& params) {
    const VectorXd per_obs = observation_loglik(component_log_densities(data, params));
    return pairwise_sum({per_obs.data(), static_cast<std::size_t>(per_obs.size())});
}

MatrixXd posterior_probs(const Dataset& data, const MixtureParams& params) {
    const auto parts = component_log_densities(data, params);
    return responsibilities_from_log(parts.log_pi + parts.cfa, parts.log_1m_pi + parts.efa);
}

Eigen::VectorXi classify(const MatrixXd& responsibilities) {
    Eigen::VectorXi out(responsibilities.rows());
    for (Eigen::Index i = 0; i < responsibilities.rows(); ++i) {
        out(i) = responsibilities(i, 0) >= responsibilities(i, 1) ? 1 : 0;
    }
    return out;
}

CfaParams align_cfa_signs(const CfaParams& estimate, const MatrixXd& reference_loadings) {
    if (reference_loadings.rows() != estimate.loadings.rows() || reference_loadings.cols() != estimate.loadings.cols()) {
        throw InvalidArgument("align_cfa_signs: reference has a different shape");
    }
    CfaParams out = estimate;
    for (int f = 0; f < estimate.q(); ++f) {
        if (estimate.loadings.col(f).dot(reference_loadings.col(f)) < 0.0) {
            out.loadings.col(f) *= -1.0;
            out.factor_corr.row(f) *= -1.0;
            out.factor_corr.col(f) *= -1.0;  // diagonal flips twice
            out.factor_means(f) = -out.factor_means(f);
        }
    }
    return out;
}

EfaParams align_efa_columns(const EfaParams& estimate, const MatrixXd& reference_loadings) {
    if (reference_loadings.rows() != estimate.loadings.rows() || reference_loadings.cols() != estimate.loadings.cols()) {
        throw InvalidArgument("align_efa_columns: reference has a different shape");
    }
    const int k = estimate.k();
    const MatrixXd inner = reference_loadings.transpose() * estimate.loadings;  // ref x est
    std::vector<bool> ref_used(static_cast<std::size_t>(k), false);
    std::vector<bool> est_used(static_cast<std::size_t>(k), false);
    EfaParams out = estimate;
    for (int step = 0; step < k; ++step) {
        int best_r = -1;
        int best_e = -1;
        for (int r = 0; r < k; ++r) {
            for (int e = 0; e < k; ++e) {
                if (ref_used[static_cast<std::size_t>(r)] || est_used[static_cast<std::size_t>(e)]) {
                    continue;
                }
                if (best_r < 0 || std::abs(inner(r, e)) > std::abs(inner(best_r, best_e))) {
                    best_r = r;
                    best_e = e;
                }
            }
        }
        ref_used[static_cast<std::size_t>(best_r)] = true;
        est_used[static_cast<std::size_t>(best_e)] = true;
        const double sign = inner(best_r, best_e) < 0.0 ? -1.0 : 1.0;
        out.loadings.col(best_r) = sign * estimate.loadings.col(best_e);
        out.factor_means(best_r) = sign * estimate.factor_means(best_e);
    }
    return out;
}

int count_params(const FactorStructure& structure, int k, int n_covariates, bool means_fixed_zero,
                 int n_free_loadings) {
    const int p = structure.p();
    const int q = structure.q();
    return n_free_loadings + p      // Lambda_1 free entries, Theta_delta
           + p * k + p + k          // Lambda_2, Psi_epsilon, nu
           + (n_covariates + 1)     // beta
           + q * (q - 1) / 2        // Phi off-diagonals
           + (means_fixed_zero ? 0 : q);
}

}  // namespace aberrant_mix
