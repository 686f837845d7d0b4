#include "aberrant_mix/diagnostics.hpp"

#include "aberrant_mix/error.hpp"
#include "aberrant_mix/linalg.hpp"
#include "aberrant_mix/model.hpp"

#include <cmath>
#include <iostream>
#include <limits>

namespace aberrant_mix {

namespace {

double log_det(const Eigen::LLT<MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

MatrixXd ridged_if_singular(const MatrixXd& s) {
    if (first_failing_minor(s) == 0) {
        return s;
    }
    std::clog << "warning: sample covariance is singular; adding a ridge\n";
    MatrixXd out = s;
    out.diagonal().array() += 1e-6 * std::max(s.diagonal().mean(), 1e-12);
    return out;
}

}  // namespace

double ml_discrepancy(const MatrixXd& sample_cov, const MatrixXd& model_cov) {
    const auto model = cholesky_checked(model_cov, "model covariance");
    const auto sample = cholesky_checked(sample_cov, "sample covariance");
    const double trace = model.solve(sample_cov).trace();
    return log_det(model) + trace - log_det(sample) - static_cast<double>(sample_cov.rows());
}

FitIndices fit_indices(const MatrixXd& sample_cov, const MatrixXd& model_cov, int n, int n_free_params) {
    const int p = static_cast<int>(sample_cov.rows());
    FitIndices out;
    out.discrepancy = std::max(ml_discrepancy(sample_cov, model_cov), 0.0);
    out.chi_square = (n - 1) * out.discrepancy;
    out.df = p * (p + 1) / 2 - n_free_params;
    const MatrixXd null_cov = sample_cov.diagonal().asDiagonal();
    out.chi_square_null = (n - 1) * std::max(ml_discrepancy(sample_cov, null_cov), 0.0);
    out.df_null = p * (p - 1) / 2;
    if (out.df <= 0) {
        out.cfi = 1.0;
        out.rmsea = 0.0;
        return out;
    }
    const double excess = std::max(out.chi_square - out.df, 0.0);
    const double denom = std::max({out.chi_square_null - out.df_null, out.chi_square - out.df, 0.0});
    out.cfi = denom > 0.0 ? 1.0 - excess / denom : 1.0;
    out.rmsea = std::sqrt(excess / (static_cast<double>(out.df) * (n - 1)));
    return out;
}

EmOptions baseline_options() {
    EmOptions opts;
    opts.max_iter = 5000;
    opts.tol = 1e-10;
    opts.ridge = 0.0;
    opts.uniqueness_floor = 1e-6;
    opts.n_starts = 1;
    return opts;
}

StructuredFit fit_structured_fa(const MatrixXd& second_moment, const FactorStructure& structure,
                                const EmOptions& opts) {
    validate(structure);
    validate(opts);
    if (second_moment.rows() != structure.p() || second_moment.cols() != structure.p()) {
        throw InvalidArgument("second-moment matrix does not match the factor structure");
    }
    const MatrixXd s = ridged_if_singular(0.5 * (second_moment + second_moment.transpose()));
    const int q = structure.q();

    StructuredFit fit;
    fit.params = cfa_start(VectorXd::Zero(structure.p()), s, structure, true, opts);
    double previous = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= opts.max_iter; ++it) {
        const auto& cfa = fit.params;
        const MatrixXd sigma = assemble_cfa_cov(cfa);
        const auto llt = cholesky_checked(sigma, "CFA covariance");
        const double objective = log_det(llt) + llt.solve(s).trace();
        if (std::abs(previous - objective) < opts.tol) {
            fit.converged = true;
            break;
        }
        if (it == opts.max_iter) {
            break;
        }
        previous = objective;
        const MatrixXd gain = cfa.factor_corr * llt.solve(cfa.loadings).transpose();  // q x p
        FactorSuffStats stats;
        stats.weight = 1.0;
        stats.sum_means = VectorXd::Zero(q);
        stats.sum_second = cfa.factor_corr - gain * cfa.loadings * cfa.factor_corr + gain * s * gain.transpose();
        stats.sum_second = 0.5 * (stats.sum_second + stats.sum_second.transpose()).eval();
        stats.cross = s * gain.transpose();
        stats.sum_sq = s.diagonal();
        fit.params = cfa_update(stats, structure, true, opts);
        fit.n_iter = it + 1;
    }
    return fit;
}

CfaBaseline fit_cfa_single(const Dataset& data, const FactorStructure& structure, const EmOptions& opts) {
    validate(data);
    if (structure.p() != data.p()) {
        throw InvalidArgument("factor structure has p=" + std::to_string(structure.p()) + " but data has p=" +
                              std::to_string(data.p()));
    }
    if (data.n() <= data.p()) {
        std::clog << "warning: n=" << data.n() << " does not exceed p=" << data.p() << "\n";
    }
    const MatrixXd centered = data.responses.rowwise() - data.responses.colwise().mean();
    CfaBaseline out;
    out.sample_cov = ridged_if_singular(centered.transpose() * centered / data.n());
    const StructuredFit fit = fit_structured_fa(out.sample_cov, structure, opts);
    out.params = fit.params;
    out.n_iter = fit.n_iter;
    out.converged = fit.converged;
    const int q = structure.q();
    const int n_free = structure.n_free() + structure.p() + q * (q - 1) / 2;
    out.indices = fit_indices(out.sample_cov, assemble_cfa_cov(out.params), data.n(), n_free);
    return out;
}

MatrixXd correlation(const MatrixXd& rows) {
    const MatrixXd centered = rows.rowwise() - rows.colwise().mean();
    MatrixXd cov = centered.transpose() * centered;
    const VectorXd sd = cov.diagonal().array().sqrt();
    MatrixXd r(cov.rows(), cov.cols());
    for (Eigen::Index a = 0; a < cov.rows(); ++a) {
        for (Eigen::Index b = 0; b < a; ++b) {
            const double v = cov(a, b) / (sd(a) * sd(b));
            r(a, b) = v;
            r(b, a) = v;
        }
        r(a, a) = 1.0;
    }
    return r;
}

MatrixXd class_correlation(const Dataset& data, const Eigen::VectorXi& assignments, int cls) {
    if (assignments.size() != data.n()) {
        throw InvalidArgument("assignments must have one entry per row");
    }
    std::vector<int> rows;
    for (int i = 0; i < data.n(); ++i) {
        if (assignments(i) == cls) {
            rows.push_back(i);
        }
    }
    if (rows.size() < 3) {
        throw InvalidArgument(std::string("class ") + (cls == 1 ? "1 (CFA)" : "0 (EFA)") + " has " +
                              std::to_string(rows.size()) + " rows; correlations need at least 3");
    }
    return correlation(take_rows(data, rows).responses);
}

ClassCorrelations corr_by_class(const Dataset& data, const Eigen::VectorXi& assignments) {
    return {class_correlation(data, assignments, 1), class_correlation(data, assignments, 0)};
}

}  // namespace aberrant_mix
