#include "aberrant_mix/simulation.hpp"

#include "aberrant_mix/error.hpp"
#include "aberrant_mix/linalg.hpp"
#include "aberrant_mix/model.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <cmath>

namespace aberrant_mix {

namespace {

// Stream keys, so adding draws to one stage never shifts another.
constexpr std::uint64_t kParamStream = 1;
constexpr std::uint64_t kDesignStream = 2;
constexpr std::uint64_t kMembershipStream = 3;
constexpr std::uint64_t kCfaRowStream = 4;
constexpr std::uint64_t kEfaRowStream = 5;
constexpr std::uint64_t kFakingStream = 6;
constexpr int kMaxRedraws = 100;

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw InvalidArgument(message);
    }
}

MatrixXd standard_normals(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    MatrixXd z(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            z(i, j) = rng.normal();
        }
    }
    return z;
}

/// Loadings U(0.05, 0.99) on the pattern, Phi ~ LKJ(1), Theta = 1 - diag(L Phi L').
/// An item whose uniqueness comes out nonpositive has its loadings redrawn.
CfaParams draw_cfa_truth(const FactorStructure& structure, Rng& rng) {
    CfaParams cfa;
    const int p = structure.p();
    const int q = structure.q();
    cfa.factor_corr = sample_lkj(q, 1.0, rng);
    cfa.loadings = MatrixXd::Zero(p, q);
    cfa.uniquenesses.resize(p);
    cfa.factor_means = VectorXd::Zero(q);
    for (int j = 0; j < p; ++j) {
        for (int attempt = 0;; ++attempt) {
            if (attempt == kMaxRedraws) {
                throw InvalidArgument("item " + std::to_string(j) + ": no loading draw with positive uniqueness after " +
                                      std::to_string(kMaxRedraws) + " attempts");
            }
            VectorXd row = VectorXd::Zero(q);
            for (int f = 0; f < q; ++f) {
                if (structure.is_free(j, f)) {
                    row(f) = rng.uniform(0.05, 0.99);
                }
            }
            const double communality = row.dot(cfa.factor_corr * row);
            if (1.0 - communality > 0.0) {
                cfa.loadings.row(j) = row.transpose();
                cfa.uniquenesses(j) = 1.0 - communality;
                break;
            }
        }
    }
    return cfa;
}

double logit(double p) {
    return std::log(p / (1.0 - p));
}

BiasRmse bias_rmse(const std::vector<double>& diffs) {
    BiasRmse out;
    if (diffs.empty()) {
        return out;
    }
    double s = 0.0;
    double ss = 0.0;
    for (double d : diffs) {
        s += d;
        ss += d * d;
    }
    const auto m = static_cast<double>(diffs.size());
    out.bias = s / m;
    out.rmse = std::sqrt(ss / m);
    return out;
}

}  // namespace

void validate(const Study1Config& cfg) {
    require(cfg.n > 0 && cfg.p > 0, "study 1 needs n > 0 and p > 0");
    require(cfg.pi > 0.0 && cfg.pi < 1.0, "study 1 needs 0 < pi < 1");
    require(cfg.q >= 1 && cfg.q < cfg.p, "study 1 needs 1 <= q < p");
    require(cfg.k >= 1 && cfg.k < cfg.p, "study 1 needs 1 <= K < p");
    require(cfg.c >= 0 && cfg.c <= 2, "study 1 covariate count must be 0, 1 or 2");
}

void validate(const Study2Config& cfg) {
    require(cfg.n > 0 && cfg.p > 0, "study 2 needs n > 0 and p > 0");
    require(cfg.pi > 0.0 && cfg.pi < 1.0, "study 2 needs 0 < pi < 1");
    require(cfg.gamma > 0.0 && cfg.delta > 0.0, "study 2 needs gamma > 0 and delta > 0");
    require(cfg.kappa >= 0.0 && cfg.kappa <= 1.0, "study 2 needs kappa in [0,1]");
    require(cfg.categories >= 2, "study 2 needs at least 2 categories");
    require(cfg.q >= 1 && cfg.q < cfg.p, "study 2 needs 1 <= q < p");
    require(cfg.k >= 1 && cfg.k < cfg.p, "study 2 needs 1 <= K < p");
    require(cfg.thresholds.empty() || static_cast<int>(cfg.thresholds.size()) == cfg.categories - 1,
            "study 2 thresholds need categories - 1 entries");
}

MatrixXd sample_lkj(int q, double shape, Rng& rng) {
    require(q >= 1, "LKJ dimension must be positive");
    require(shape > 0.0, "LKJ shape must be positive");
    MatrixXd r = MatrixXd::Identity(q, q);
    if (q == 1) {
        return r;
    }
    double b = shape + (q - 2) / 2.0;
    const double r12 = 2.0 * rng.beta(b, b) - 1.0;
    r(0, 1) = r12;
    r(1, 0) = r12;
    for (int k = 2; k < q; ++k) {
        b -= 0.5;
        const double y = rng.beta(k / 2.0, b);
        VectorXd u(k);
        for (int i = 0; i < k; ++i) {
            u(i) = rng.normal();
        }
        u.normalize();
        const VectorXd w = std::sqrt(y) * u;
        const MatrixXd lower = r.topLeftCorner(k, k).llt().matrixL();
        const VectorXd z = lower * w;
        r.block(0, k, k, 1) = z;
        r.block(k, 0, 1, k) = z.transpose();
    }
    return r;
}

MatrixXd gen_cfa_block(const CfaParams& params, int m, Rng& rng) {
    require(m >= 0, "row count must be nonnegative");
    const int p = params.p();
    const int q = params.q();
    const MatrixXd chol_phi = cholesky_checked(params.factor_corr, "factor_corr").matrixL();
    MatrixXd eta = standard_normals(m, q, rng) * chol_phi.transpose();
    eta.rowwise() += params.factor_means.transpose();
    const MatrixXd noise =
        standard_normals(m, p, rng) * params.uniquenesses.array().sqrt().matrix().asDiagonal();
    return eta * params.loadings.transpose() + noise;
}

MatrixXd gen_efa_block(const EfaParams& params, int r, Rng& rng) {
    require(r >= 0, "row count must be nonnegative");
    MatrixXd xi = standard_normals(r, params.k(), rng);
    xi.rowwise() += params.factor_means.transpose();
    const MatrixXd noise =
        standard_normals(r, params.p(), rng) * params.uniquenesses.array().sqrt().matrix().asDiagonal();
    return xi * params.loadings.transpose() + noise;
}

SimulatedData gen_study1(const Study1Config& cfg) {
    validate(cfg);
    SimulatedData out;
    out.structure = FactorStructure::simple(cfg.p, cfg.q);

    Rng param_rng = Rng::stream(cfg.seed, {kParamStream});
    out.cfa = draw_cfa_truth(out.structure, param_rng);
    EfaParams efa;
    efa.loadings.resize(cfg.p, cfg.k);
    for (int j = 0; j < cfg.p; ++j) {
        for (int c = 0; c < cfg.k; ++c) {
            efa.loadings(j, c) = param_rng.uniform(0.05, 0.99);
        }
    }
    efa.uniquenesses = VectorXd::Constant(cfg.p, 0.85);
    efa.factor_means.resize(cfg.k);
    for (int c = 0; c < cfg.k; ++c) {
        efa.factor_means(c) = param_rng.uniform(0.5, 5.0);
    }
    out.efa = efa;
    out.reg.beta.resize(cfg.c + 1);
    out.reg.beta(0) = logit(cfg.pi);
    for (int c = 1; c <= cfg.c; ++c) {
        out.reg.beta(c) = param_rng.uniform(-1.5, 1.5);
    }
    const std::vector<std::string> names = {"x1", "x2"};
    out.reg.covariate_names.assign(names.begin(), names.begin() + cfg.c);

    Rng design_rng = Rng::stream(cfg.seed, {kDesignStream});
    Dataset& data = out.data;
    data.design = MatrixXd::Ones(cfg.n, cfg.c + 1);
    for (int i = 0; i < cfg.n; ++i) {
        if (cfg.c >= 1) {
            data.design(i, 1) = design_rng.bernoulli(0.5) ? 1.0 : 0.0;
        }
        if (cfg.c >= 2) {
            data.design(i, 2) = design_rng.uniform(-5.0, 5.0);
        }
    }
    data.covariate_names = out.reg.covariate_names;

    Rng member_rng = Rng::stream(cfg.seed, {kMembershipStream});
    const VectorXd pi = mixture_weights(data.design, out.reg);
    Eigen::VectorXi z(cfg.n);
    for (int i = 0; i < cfg.n; ++i) {
        z(i) = member_rng.bernoulli(pi(i)) ? 1 : 0;
    }
    const int n_cfa = z.sum();
    Rng cfa_rng = Rng::stream(cfg.seed, {kCfaRowStream});
    Rng efa_rng = Rng::stream(cfg.seed, {kEfaRowStream});
    const MatrixXd cfa_rows = gen_cfa_block(out.cfa, n_cfa, cfa_rng);
    const MatrixXd efa_rows = gen_efa_block(efa, cfg.n - n_cfa, efa_rng);
    data.responses.resize(cfg.n, cfg.p);
    int a = 0;
    int b = 0;
    for (int i = 0; i < cfg.n; ++i) {
        data.responses.row(i) = z(i) == 1 ? cfa_rows.row(a++) : efa_rows.row(b++);
    }
    data.truth = z;
    for (int j = 0; j < cfg.p; ++j) {
        data.item_labels.push_back("y" + std::to_string(j + 1));
    }
    return out;
}

MatrixXi discretize(const MatrixXd& values, int categories, const std::vector<double>& thresholds) {
    require(categories >= 2, "discretize needs at least 2 categories");
    require(static_cast<int>(thresholds.size()) == categories - 1, "discretize needs categories - 1 thresholds");
    for (std::size_t j = 1; j < thresholds.size(); ++j) {
        require(thresholds[j - 1] < thresholds[j], "thresholds must be strictly increasing");
    }
    MatrixXi out(values.rows(), values.cols());
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const double v = values(i, j);
            const auto above = std::lower_bound(thresholds.begin(), thresholds.end(), v) - thresholds.begin();
            out(i, j) = 1 + static_cast<int>(above);
        }
    }
    return out;
}

std::vector<double> default_thresholds(int categories) {
    require(categories >= 2, "thresholds need at least 2 categories");
    const boost::math::normal_distribution<double> normal;
    std::vector<double> tau;
    for (int j = 1; j < categories; ++j) {
        tau.push_back(boost::math::quantile(normal, static_cast<double>(j) / categories));
    }
    return tau;
}

MatrixXd sgr_replacement_matrix(int categories, double gamma, double delta, double kappa) {
    require(categories >= 2, "replacement matrix needs at least 2 categories");
    require(gamma > 0.0 && delta > 0.0, "replacement shapes must be positive");
    require(kappa >= 0.0 && kappa <= 1.0, "kappa must lie in [0,1]");
    const int m_max = categories;
    MatrixXd t = MatrixXd::Zero(m_max, m_max);
    for (int m = 0; m < m_max - 1; ++m) {
        const int reachable = m_max - 1 - m;  // categories m+1 .. M-1 (0-based)
        t(m, m) = 1.0 - kappa;
        double prev = 0.0;
        for (int j = 1; j <= reachable; ++j) {
            const double cdf = j == reachable ? 1.0 : boost::math::ibeta(gamma, delta, static_cast<double>(j) / reachable);
            t(m, m + j) = kappa * (cdf - prev);
            prev = cdf;
        }
    }
    t(m_max - 1, m_max - 1) = 1.0;
    return t;
}

MatrixXi perturb_faking(const MatrixXi& responses, const std::vector<int>& rows, int categories, double gamma,
                        double delta, double kappa, Rng& rng) {
    const MatrixXd t = sgr_replacement_matrix(categories, gamma, delta, kappa);
    require(responses.minCoeff() >= 1 && responses.maxCoeff() <= categories,
            "responses must lie in 1.." + std::to_string(categories));
    MatrixXi out = responses;
    for (int i : rows) {
        require(i >= 0 && i < responses.rows(), "faking row index out of range");
        for (Eigen::Index j = 0; j < responses.cols(); ++j) {
            const int from = responses(i, j) - 1;
            const double u = rng.uniform();
            double acc = 0.0;
            int to = categories - 1;
            for (int c = from; c < categories; ++c) {
                acc += t(from, c);
                if (u < acc) {
                    to = c;
                    break;
                }
            }
            out(i, j) = to + 1;
        }
    }
    return out;
}

SimulatedData gen_study2(const Study2Config& cfg) {
    validate(cfg);
    SimulatedData out;
    out.structure = FactorStructure::simple(cfg.p, cfg.q);
    Rng param_rng = Rng::stream(cfg.seed, {kParamStream});
    out.cfa = draw_cfa_truth(out.structure, param_rng);
    out.reg.beta = VectorXd::Constant(1, logit(cfg.pi));

    Rng member_rng = Rng::stream(cfg.seed, {kMembershipStream});
    Eigen::VectorXi z(cfg.n);
    std::vector<int> faking_rows;
    for (int i = 0; i < cfg.n; ++i) {
        z(i) = member_rng.bernoulli(cfg.pi) ? 1 : 0;
        if (z(i) == 0) {
            faking_rows.push_back(i);
        }
    }
    Rng cfa_rng = Rng::stream(cfg.seed, {kCfaRowStream});
    const MatrixXd latent = gen_cfa_block(out.cfa, cfg.n, cfa_rng);
    const auto tau = cfg.thresholds.empty() ? default_thresholds(cfg.categories) : cfg.thresholds;
    const MatrixXi honest = discretize(latent, cfg.categories, tau);
    Rng faking_rng = Rng::stream(cfg.seed, {kFakingStream});
    const MatrixXi faked =
        perturb_faking(honest, faking_rows, cfg.categories, cfg.gamma, cfg.delta, cfg.kappa, faking_rng);

    out.data.responses = faked.cast<double>();
    out.data.design = MatrixXd::Ones(cfg.n, 1);
    out.data.truth = z;
    for (int j = 0; j < cfg.p; ++j) {
        out.data.item_labels.push_back("y" + std::to_string(j + 1));
    }
    return out;
}

Recovery score_recovery(const CfaParams& truth, const CfaParams& estimate, const FactorStructure& structure,
                        double true_pi, double estimated_pi) {
    if (truth.p() != structure.p() || truth.q() != structure.q() || estimate.p() != truth.p() ||
        estimate.q() != truth.q()) {
        throw InvalidArgument("score_recovery: parameter dimensions do not match");
    }
    const CfaParams est = align_cfa_signs(estimate, truth.loadings);
    std::vector<double> d_lambda;
    std::vector<double> d_theta;
    std::vector<double> d_phi;
    std::vector<double> d_mu;
    for (int j = 0; j < truth.p(); ++j) {
        for (int f = 0; f < truth.q(); ++f) {
            if (structure.is_free(j, f)) {
                d_lambda.push_back(est.loadings(j, f) - truth.loadings(j, f));
            }
        }
        d_theta.push_back(est.uniquenesses(j) - truth.uniquenesses(j));
    }
    for (int f = 0; f < truth.q(); ++f) {
        for (int g = 0; g < f; ++g) {
            d_phi.push_back(est.factor_corr(f, g) - truth.factor_corr(f, g));
        }
        d_mu.push_back(est.factor_means(f) - truth.factor_means(f));
    }
    Recovery r;
    r.loadings = bias_rmse(d_lambda);
    r.uniquenesses = bias_rmse(d_theta);
    r.factor_corr = bias_rmse(d_phi);
    r.factor_means = bias_rmse(d_mu);
    r.pi = bias_rmse({estimated_pi - true_pi});
    return r;
}

}  // namespace aberrant_mix
