#include "aberrant_mix/types.hpp"

#include "aberrant_mix/error.hpp"
#include "aberrant_mix/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace aberrant_mix {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw InvalidArgument(message);
    }
}

std::string dims(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

FactorStructure::FactorStructure(MatrixXi pattern) : pattern_(std::move(pattern)) {
    validate(*this);
}

FactorStructure FactorStructure::simple(int p, int q) {
    require(p > 0 && q > 0 && q < p, "simple structure needs 0 < q < p");
    MatrixXi pattern = MatrixXi::Zero(p, q);
    for (int j = 0; j < p; ++j) {
        pattern(j, static_cast<int>(static_cast<long>(j) * q / p)) = 1;
    }
    return FactorStructure(std::move(pattern));
}

std::vector<int> FactorStructure::free_factors(int item) const {
    std::vector<int> out;
    for (int f = 0; f < q(); ++f) {
        if (pattern_(item, f) != 0) {
            out.push_back(f);
        }
    }
    return out;
}

void validate(const FactorStructure& structure) {
    const MatrixXi& pat = structure.pattern();
    require(pat.rows() > 0 && pat.cols() > 0, "factor structure must be non-empty");
    require(pat.cols() < pat.rows(), "factor structure needs q < p");
    for (Eigen::Index j = 0; j < pat.rows(); ++j) {
        for (Eigen::Index f = 0; f < pat.cols(); ++f) {
            require(pat(j, f) == 0 || pat(j, f) == 1, "factor pattern entries must be 0 or 1");
        }
        require(pat.row(j).sum() > 0, "item " + std::to_string(j) + " has no free loading");
    }
    for (Eigen::Index f = 0; f < pat.cols(); ++f) {
        require(pat.col(f).sum() > 0, "factor " + std::to_string(f) + " has no free loading");
    }
}

void validate(const CfaParams& cfa, const FactorStructure& structure) {
    const int p = structure.p();
    const int q = structure.q();
    require(cfa.loadings.rows() == p && cfa.loadings.cols() == q,
            "CFA loadings are " + dims(cfa.loadings.rows(), cfa.loadings.cols()) + ", expected " +
                dims(p, q));
    require(cfa.factor_corr.rows() == q && cfa.factor_corr.cols() == q, "factor_corr must be q x q");
    require(cfa.uniquenesses.size() == p, "CFA uniquenesses must have length p");
    require(cfa.factor_means.size() == q, "CFA factor means must have length q");
    require(cfa.loadings.allFinite() && cfa.factor_corr.allFinite() && cfa.factor_means.allFinite(),
            "CFA parameters must be finite");
    for (int j = 0; j < p; ++j) {
        for (int f = 0; f < q; ++f) {
            require(structure.is_free(j, f) || cfa.loadings(j, f) == 0.0,
                    "CFA loading (" + std::to_string(j) + "," + std::to_string(f) +
                        ") must be zero under the factor pattern");
        }
        require(cfa.uniquenesses(j) > 0.0, "CFA uniqueness " + std::to_string(j) + " must be positive");
    }
    for (int f = 0; f < q; ++f) {
        require(cfa.factor_corr(f, f) == 1.0, "factor_corr must have unit diagonal");
    }
    require((cfa.factor_corr - cfa.factor_corr.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
            "factor_corr must be symmetric");
    cholesky_checked(cfa.factor_corr, "factor_corr");
    if (cfa.means_fixed_zero) {
        require((cfa.factor_means.array() == 0.0).all(), "factor means are fixed at zero");
    }
}

void validate(const EfaParams& efa) {
    require(efa.loadings.cols() > 0 && efa.loadings.cols() < efa.loadings.rows(), "EFA needs 0 < K < p");
    require(efa.uniquenesses.size() == efa.loadings.rows(), "EFA uniquenesses must have length p");
    require(efa.factor_means.size() == efa.loadings.cols(), "EFA factor means must have length K");
    require(efa.loadings.allFinite() && efa.factor_means.allFinite(), "EFA parameters must be finite");
    require((efa.uniquenesses.array() > 0.0).all(), "EFA uniquenesses must be positive");
}

void validate(const MixtureReg& reg) {
    require(reg.beta.size() >= 1, "beta needs at least an intercept");
    require(reg.beta.allFinite(), "beta must be finite");
    require(static_cast<Eigen::Index>(reg.covariate_names.size()) == reg.beta.size() - 1,
            "one covariate name per non-intercept beta");
}

void validate(const MixtureParams& params, const FactorStructure& structure) {
    validate(params.cfa, structure);
    validate(params.efa);
    validate(params.reg);
    require(params.cfa.p() == params.efa.p(), "CFA and EFA blocks disagree on p");
}

void validate(const Dataset& data) {
    require(data.n() > 0 && data.p() > 0, "dataset is empty");
    require(data.responses.allFinite(), "responses contain missing or non-finite values");
    require(data.design.rows() == data.n() && data.design.cols() >= 1,
            "design must have one row per observation and an intercept column");
    require(data.design.allFinite(), "design contains non-finite values");
    require((data.design.col(0).array() == 1.0).all(), "first design column must be all 1");
    require(static_cast<int>(data.covariate_names.size()) == data.n_covariates(),
            "one name per covariate column");
    require(data.item_labels.empty() || static_cast<int>(data.item_labels.size()) == data.p(),
            "one label per item");
    if (data.truth) {
        require(data.truth->size() == data.n(), "truth must have length n");
        require(((data.truth->array() == 0) || (data.truth->array() == 1)).all(), "truth must be binary");
    }
}

Dataset Dataset::from_responses(MatrixXd responses) {
    Dataset d;
    d.design = MatrixXd::Ones(responses.rows(), 1);
    d.responses = std::move(responses);
    return d;
}

Dataset select_covariates(const Dataset& data, const std::vector<std::string>& names) {
    Dataset out = data;
    out.design.resize(data.n(), static_cast<Eigen::Index>(names.size()) + 1);
    out.design.col(0) = data.design.col(0);
    out.covariate_names = names;
    for (std::size_t k = 0; k < names.size(); ++k) {
        auto it = std::find(data.covariate_names.begin(), data.covariate_names.end(), names[k]);
        if (it == data.covariate_names.end()) {
            throw InvalidArgument("unknown covariate '" + names[k] + "'");
        }
        const auto col = static_cast<Eigen::Index>(it - data.covariate_names.begin()) + 1;
        out.design.col(static_cast<Eigen::Index>(k) + 1) = data.design.col(col);
    }
    return out;
}

Dataset take_rows(const Dataset& data, const std::vector<int>& rows) {
    Dataset out;
    out.item_labels = data.item_labels;
    out.covariate_names = data.covariate_names;
    const auto m = static_cast<Eigen::Index>(rows.size());
    out.responses.resize(m, data.p());
    out.design.resize(m, data.design.cols());
    Eigen::VectorXi truth;
    if (data.truth) {
        truth.resize(m);
    }
    for (Eigen::Index r = 0; r < m; ++r) {
        const int src = rows[static_cast<std::size_t>(r)];
        require(src >= 0 && src < data.n(), "row index out of range");
        out.responses.row(r) = data.responses.row(src);
        out.design.row(r) = data.design.row(src);
        if (data.truth) {
            truth(r) = (*data.truth)(src);
        }
    }
    if (data.truth) {
        out.truth = std::move(truth);
    }
    return out;
}

Dataset standardize_columns(const Dataset& data, bool scale) {
    Dataset out = data;
    const VectorXd mean = data.responses.colwise().mean().transpose();
    out.responses.rowwise() -= mean.transpose();
    if (scale) {
        for (int j = 0; j < data.p(); ++j) {
            const double sd = std::sqrt(out.responses.col(j).squaredNorm() / data.n());
            if (sd > 0.0) {
                out.responses.col(j) /= sd;
            }
        }
    }
    return out;
}

}  // namespace aberrant_mix
