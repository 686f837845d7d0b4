#include "aberrant_mix/selection.hpp"

#include "aberrant_mix/error.hpp"
#include "aberrant_mix/parallel.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>

namespace aberrant_mix {

double entropy_raw(const MatrixXd& responsibilities) {
    double en = 0.0;
    for (Eigen::Index i = 0; i < responsibilities.rows(); ++i) {
        for (Eigen::Index w = 0; w < responsibilities.cols(); ++w) {
            const double z = responsibilities(i, w);
            if (z > 0.0) {
                en -= z * std::log(z);
            }
        }
    }
    return en;
}

CriteriaReport criteria(double loglik, int n_params, int n, double en) {
    if (n <= 0) {
        throw InvalidArgument("criteria need n > 0");
    }
    if (n <= n_params) {
        std::clog << "warning: n=" << n << " does not exceed the parameter count " << n_params << "\n";
    }
    CriteriaReport r;
    r.loglik = loglik;
    r.n_params = n_params;
    r.n = n;
    r.en = en;
    const double dev = -2.0 * loglik;
    const double nu = n_params;
    const double log_n = std::log(static_cast<double>(n));
    r.aic = dev + 2.0 * nu;
    r.caic = dev + nu * (log_n + 1.0);
    r.bic = dev + nu * log_n;
    r.ssbic = dev + nu * std::log((n + 2.0) / 24.0);
    r.clc = dev + 2.0 * en;
    r.icl_bic = r.bic + 2.0 * en;
    r.h = 1.0 - en / (n * std::numbers::ln2);
    return r;
}

std::string ScanCandidate::label() const {
    std::string out = "K=" + std::to_string(k);
    if (!covariates.empty()) {
        out += " +";
        for (std::size_t i = 0; i < covariates.size(); ++i) {
            out += (i ? "," : " ") + covariates[i];
        }
    }
    return out;
}

const std::vector<std::pair<Index, std::string>>& index_names() {
    static const std::vector<std::pair<Index, std::string>> names = {
        {Index::aic, "AIC"}, {Index::caic, "CAIC"}, {Index::bic, "BIC"},       {Index::ssbic, "ssBIC"},
        {Index::clc, "CLC"}, {Index::icl_bic, "ICL_BIC"}, {Index::h, "H"},
    };
    return names;
}

double index_value(const CriteriaReport& report, Index index) {
    switch (index) {
        case Index::aic: return report.aic;
        case Index::caic: return report.caic;
        case Index::bic: return report.bic;
        case Index::ssbic: return report.ssbic;
        case Index::clc: return report.clc;
        case Index::icl_bic: return report.icl_bic;
        case Index::h: return report.h;
    }
    return 0.0;
}

Selection select_model(const std::vector<ScanRow>& rows, double entropy_band) {
    Selection sel;
    double max_h = -std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
        if (row.ok) {
            max_h = std::max(max_h, row.report.h);
        }
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].ok || rows[r].report.h < max_h - entropy_band) {
            continue;
        }
        sel.eligible.push_back(r);
        if (!sel.selected || rows[r].report.icl_bic < rows[*sel.selected].report.icl_bic) {
            sel.selected = r;
        }
    }
    for (const auto& [index, name] : index_names()) {
        std::optional<std::size_t> best;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!rows[r].ok) {
                continue;
            }
            const double v = index_value(rows[r].report, index);
            if (!best) {
                best = r;
                continue;
            }
            const double b = index_value(rows[*best].report, index);
            if (index == Index::h ? v > b : v < b) {
                best = r;
            }
        }
        sel.winners.emplace_back(index, best);
    }
    return sel;
}

std::vector<ScanRow> scan(const Dataset& data, const FactorStructure& structure, const std::vector<int>& k_values,
                          const std::vector<std::vector<std::string>>& covariate_subsets,
                          const ScanOptions& opts) {
    if (k_values.empty() || covariate_subsets.empty()) {
        throw InvalidArgument("scan needs at least one K value and one covariate subset");
    }
    validate(opts.em);
    std::vector<ScanRow> rows;
    for (int k : k_values) {
        for (const auto& subset : covariate_subsets) {
            select_covariates(data, subset);  // unknown names are a caller error, not a fit failure
            ScanRow row;
            row.candidate = {k, subset};
            rows.push_back(std::move(row));
        }
    }
    // Each candidate is a pure fit writing only its own row.
    parallel_for(rows.size(), [&](std::size_t r) {
        ScanRow& row = rows[r];
        try {
            const Dataset candidate_data = select_covariates(data, row.candidate.covariates);
            const ModelSpec spec{structure, row.candidate.k, opts.means_fixed_zero};
            FitResult fit = fit_em(candidate_data, spec, opts.em);
            row.report = criteria(fit.loglik(), fit.n_params, data.n(), fit.entropy_raw);
            if (data.truth) {
                row.metrics = score_classification(*data.truth, fit.assignments);
            }
            if (opts.keep_fits) {
                row.fit = std::move(fit);
            }
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.failure = e.what();
        }
    });
    return rows;
}

}  // namespace aberrant_mix
