#include "aberrant_mix/em.hpp"

#include "aberrant_mix/error.hpp"
#include "aberrant_mix/linalg.hpp"
#include "aberrant_mix/model.hpp"
#include "aberrant_mix/parallel.hpp"
#include "aberrant_mix/rng.hpp"
#include "aberrant_mix/selection.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace aberrant_mix {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kJitterStream = 0x717;
constexpr double kEtaClamp = 30.0;

MatrixXd symmetric(const MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

FactorSuffStats suff_stats(const MatrixXd& y, const VectorXd& w, const MatrixXd& means, const MatrixXd& cov) {
    FactorSuffStats s;
    s.weight = w.sum();
    s.sum_means = means.transpose() * w;
    const MatrixXd weighted_means = means.array().colwise() * w.array();  // n x f
    s.sum_second = symmetric(s.weight * cov + means.transpose() * weighted_means);
    s.cross = y.transpose() * weighted_means;
    s.sum_sq = y.array().square().matrix().transpose() * w;
    return s;
}

void check_weight(double weight, const std::string& component, const EmOptions& opts) {
    if (!(weight >= opts.min_component_weight) || weight <= 0.0) {
        throw EmptyComponent(component, weight);
    }
}

/// Conditional moments of factors f ~ N(mean_f, cov_f) given y = L f + e,
/// e ~ N(0, diag(u)).
void conditional_moments(const MatrixXd& y, const MatrixXd& loadings, const MatrixXd& factor_cov,
                         const VectorXd& factor_mean, const VectorXd& uniquenesses, const std::string& what,
                         MatrixXd& means, MatrixXd& cov) {
    MatrixXd sigma = symmetric(loadings * factor_cov * loadings.transpose());
    sigma.diagonal() += uniquenesses;
    const auto llt = cholesky_checked(sigma, what);
    const MatrixXd gain = factor_cov * llt.solve(loadings).transpose();  // f x p
    cov = symmetric(factor_cov - gain * loadings * factor_cov);
    const VectorXd implied_mean = loadings * factor_mean;
    means = (y.rowwise() - implied_mean.transpose()) * gain.transpose();
    means.rowwise() += factor_mean.transpose();
}

// ---------------------------------------------------------------- init

/// Two-group k-means on rows with k-means++ seeding and 20 Lloyd steps.
/// Group 0 is the larger group.
Eigen::VectorXi two_means(const MatrixXd& y, Rng& rng) {
    const int n = static_cast<int>(y.rows());
    Eigen::VectorXi label = Eigen::VectorXi::Zero(n);
    if (n < 2) {
        return label;
    }
    MatrixXd centroids(2, y.cols());
    centroids.row(0) = y.row(rng.uniform_int(0, n - 1));
    VectorXd d2 = (y.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    const double total = d2.sum();
    int second = 0;
    if (total > 0.0) {
        double u = rng.uniform() * total;
        for (int i = 0; i < n; ++i) {
            u -= d2(i);
            if (u <= 0.0) {
                second = i;
                break;
            }
            second = i;
        }
    }
    centroids.row(1) = y.row(second);

    for (int iter = 0; iter < 20; ++iter) {
        for (int i = 0; i < n; ++i) {
            const double a = (y.row(i) - centroids.row(0)).squaredNorm();
            const double b = (y.row(i) - centroids.row(1)).squaredNorm();
            label(i) = b < a ? 1 : 0;
        }
        for (int g = 0; g < 2; ++g) {
            const int count = static_cast<int>((label.array() == g).count());
            if (count == 0) {
                continue;
            }
            Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(y.cols());
            for (int i = 0; i < n; ++i) {
                if (label(i) == g) {
                    sum += y.row(i);
                }
            }
            centroids.row(g) = sum / count;
        }
    }
    if ((label.array() == 1).count() > (label.array() == 0).count()) {
        label = (1 - label.array()).matrix();
    }
    return label;
}

/// Fallback split: rows above / below the median score on the first
/// principal axis.
Eigen::VectorXi principal_split(const MatrixXd& y) {
    const MatrixXd centered = y.rowwise() - y.colwise().mean();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(centered.transpose() * centered);
    const VectorXd score = centered * eig.eigenvectors().col(y.cols() - 1);
    std::vector<double> sorted(score.data(), score.data() + score.size());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    Eigen::VectorXi label(y.rows());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        label(i) = score(i) > median ? 1 : 0;
    }
    return label;
}

MatrixXd rows_with_label(const MatrixXd& y, const Eigen::VectorXi& label, int g) {
    MatrixXd out(static_cast<Eigen::Index>((label.array() == g).count()), y.cols());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        if (label(i) == g) {
            out.row(r++) = y.row(i);
        }
    }
    return out;
}

void group_moments(const MatrixXd& rows, VectorXd& mean, MatrixXd& cov) {
    const auto m = static_cast<double>(rows.rows());
    mean = rows.colwise().mean().transpose();
    const MatrixXd centered = rows.rowwise() - mean.transpose();
    cov = symmetric(centered.transpose() * centered / m);
    if (rows.rows() <= rows.cols()) {
        const double scale = cov.diagonal().mean();
        cov.diagonal().array() += 1e-3 * (scale > 0.0 ? scale : 1.0);
    }
    cov.diagonal().array() += 1e-8;
}

VectorXd least_squares_means(const MatrixXd& loadings, const VectorXd& target) {
    return (loadings.transpose() * loadings).ldlt().solve(loadings.transpose() * target);
}

CfaParams initial_cfa(const MatrixXd& rows, const FactorStructure& structure, bool means_fixed_zero,
                      const EmOptions& opts) {
    VectorXd mean;
    MatrixXd cov;
    group_moments(rows, mean, cov);
    return cfa_start(mean, cov, structure, means_fixed_zero, opts);
}

/// PPCA-style start on the span of the top-K eigenvectors of the uncentered
/// second moment, so the group mean can be represented as L2 nu.
EfaParams initial_efa(const MatrixXd& rows, int k, const EmOptions& opts) {
    VectorXd mean;
    MatrixXd cov;
    group_moments(rows, mean, cov);
    const auto p = cov.rows();
    Eigen::SelfAdjointEigenSolver<MatrixXd> second(cov + mean * mean.transpose());
    MatrixXd basis = second.eigenvectors().rightCols(k).rowwise().reverse();
    Eigen::SelfAdjointEigenSolver<MatrixXd> within(basis.transpose() * cov * basis);
    basis = basis * within.eigenvectors();
    const VectorXd spread = within.eigenvalues();
    const double tail = p > k ? std::max((cov.trace() - spread.sum()) / static_cast<double>(p - k), 0.0) : 0.0;

    EfaParams efa;
    efa.loadings.resize(p, k);
    for (int c = 0; c < k; ++c) {
        VectorXd v = basis.col(c);
        if (v.sum() < 0.0) {
            v = -v;
        }
        efa.loadings.col(c) = v * std::sqrt(std::max({spread(c) - tail, 0.05 * spread(c), 1e-6}));
    }
    const MatrixXd implied = efa.loadings * efa.loadings.transpose();
    efa.uniquenesses.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        efa.uniquenesses(j) = std::max({cov(j, j) - implied(j, j), 0.05 * cov(j, j), opts.uniqueness_floor});
    }
    efa.factor_means = least_squares_means(efa.loadings, mean);
    return efa;
}

double logit(double share) {
    const double s = std::clamp(share, 0.01, 0.99);
    return std::log(s / (1.0 - s));
}

std::vector<std::string> as_names(const Dataset& data) {
    return data.covariate_names;
}

}  // namespace

CfaParams cfa_start(const VectorXd& mean, const MatrixXd& cov, const FactorStructure& structure,
                    bool means_fixed_zero, const EmOptions& opts) {
    const int p = structure.p();
    const int q = structure.q();
    CfaParams cfa;
    cfa.means_fixed_zero = means_fixed_zero;
    cfa.loadings = MatrixXd::Zero(p, q);
    std::vector<std::vector<int>> items(static_cast<std::size_t>(q));
    for (int f = 0; f < q; ++f) {
        for (int j = 0; j < p; ++j) {
            if (structure.is_free(j, f)) {
                items[static_cast<std::size_t>(f)].push_back(j);
            }
        }
        const auto& idx = items[static_cast<std::size_t>(f)];
        const auto m = static_cast<Eigen::Index>(idx.size());
        MatrixXd sub(m, m);
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b < m; ++b) {
                sub(a, b) = cov(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
            }
        }
        VectorXd lambda;
        if (m == 1) {
            lambda = VectorXd::Constant(1, std::sqrt(0.5 * sub(0, 0)));
        } else {
            Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sub);
            const double top = eig.eigenvalues()(m - 1);
            const double rest = (eig.eigenvalues().sum() - top) / static_cast<double>(m - 1);
            lambda = eig.eigenvectors().col(m - 1) * std::sqrt(std::max(top - rest, 0.05 * top));
            if (lambda.sum() < 0.0) {
                lambda = -lambda;
            }
        }
        for (Eigen::Index a = 0; a < m; ++a) {
            cfa.loadings(idx[static_cast<std::size_t>(a)], f) = lambda(a);
        }
    }

    cfa.factor_corr = MatrixXd::Identity(q, q);
    for (int f = 0; f < q; ++f) {
        for (int g = f + 1; g < q; ++g) {
            const VectorXd lf = cfa.loadings.col(f);
            const VectorXd lg = cfa.loadings.col(g);
            const double denom = lf.squaredNorm() * lg.squaredNorm();
            double r = denom > 0.0 ? lf.dot(cov * lg) / denom : 0.0;
            r = std::clamp(r, -0.9, 0.9);
            cfa.factor_corr(f, g) = r;
            cfa.factor_corr(g, f) = r;
        }
    }
    for (int attempt = 0; attempt < 60 && first_failing_minor(cfa.factor_corr) != 0; ++attempt) {
        cfa.factor_corr = 0.5 * cfa.factor_corr + 0.5 * MatrixXd::Identity(q, q);
    }

    const MatrixXd implied = cfa.loadings * cfa.factor_corr * cfa.loadings.transpose();
    cfa.uniquenesses.resize(p);
    for (int j = 0; j < p; ++j) {
        const double resid = cov(j, j) - implied(j, j);
        cfa.uniquenesses(j) = std::max({resid, 0.1 * cov(j, j), opts.uniqueness_floor});
    }
    cfa.factor_means = means_fixed_zero ? VectorXd::Zero(q) : least_squares_means(cfa.loadings, mean);
    return cfa;
}

void validate(const EmOptions& opts) {
    if (opts.max_iter < 1 || !(opts.tol > 0.0) || opts.n_starts < 1 || !(opts.ridge >= 0.0) ||
        !(opts.uniqueness_floor > 0.0) || !(opts.jitter_sd >= 0.0) || !(opts.min_component_weight >= 0.0)) {
        throw InvalidArgument("EM options out of range (need max_iter>=1, tol>0, n_starts>=1, ridge>=0, "
                              "uniqueness_floor>0)");
    }
}

MatrixXd EStepMoments::cfa_second_moment(int i) const {
    return cfa_cov + cfa_means.row(i).transpose() * cfa_means.row(i);
}

MatrixXd EStepMoments::efa_second_moment(int i) const {
    return efa_cov + efa_means.row(i).transpose() * efa_means.row(i);
}

EStepMoments e_step(const Dataset& data, const MixtureParams& params) {
    EStepMoments m;
    const auto parts = component_log_densities(data, params);
    m.responsibilities = responsibilities_from_log(parts.log_pi + parts.cfa, parts.log_1m_pi + parts.efa);
    const VectorXd per_obs = observation_loglik(parts);
    m.loglik = pairwise_sum({per_obs.data(), static_cast<std::size_t>(per_obs.size())});

    conditional_moments(data.responses, params.cfa.loadings, params.cfa.factor_corr, params.cfa.factor_means,
                        params.cfa.uniquenesses, "CFA covariance", m.cfa_means, m.cfa_cov);
    const int k = params.efa.k();
    conditional_moments(data.responses, params.efa.loadings, MatrixXd::Identity(k, k), params.efa.factor_means,
                        params.efa.uniquenesses, "EFA covariance", m.efa_means, m.efa_cov);
    return m;
}

void solve_loadings(const FactorSuffStats& stats, const MatrixXi& pattern, const EmOptions& opts,
                    MatrixXd& loadings, VectorXd& uniquenesses) {
    const auto p = pattern.rows();
    const auto f = pattern.cols();
    loadings = MatrixXd::Zero(p, f);
    uniquenesses.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        std::vector<Eigen::Index> free;
        for (Eigen::Index c = 0; c < f; ++c) {
            if (pattern(j, c) != 0) {
                free.push_back(c);
            }
        }
        const auto m = static_cast<Eigen::Index>(free.size());
        MatrixXd a(m, m);
        VectorXd b(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            b(r) = stats.cross(j, free[static_cast<std::size_t>(r)]);
            for (Eigen::Index c = 0; c < m; ++c) {
                a(r, c) = stats.sum_second(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(c)]);
            }
        }
        Eigen::LLT<MatrixXd> llt(a);
        if (llt.info() != Eigen::Success) {
            throw SingularSystem("singular loading normal equations", static_cast<int>(j));
        }
        const VectorXd lambda = llt.solve(b);
        if (!lambda.allFinite()) {
            throw SingularSystem("non-finite loading solution", static_cast<int>(j));
        }
        for (Eigen::Index r = 0; r < m; ++r) {
            loadings(j, free[static_cast<std::size_t>(r)]) = lambda(r);
        }
        const double resid = (stats.sum_sq(j) - 2.0 * lambda.dot(b) + lambda.dot(a * lambda)) / stats.weight;
        uniquenesses(j) = std::max(resid + opts.ridge, opts.uniqueness_floor);
    }
}

CfaParams cfa_update(const FactorSuffStats& stats, const FactorStructure& structure, bool means_fixed_zero,
                     const EmOptions& opts) {
    CfaParams cfa;
    cfa.means_fixed_zero = means_fixed_zero;
    solve_loadings(stats, structure.pattern(), opts, cfa.loadings, cfa.uniquenesses);

    const int q = structure.q();
    MatrixXd phi_raw;
    if (means_fixed_zero) {
        cfa.factor_means = VectorXd::Zero(q);
        phi_raw = stats.sum_second / stats.weight;
    } else {
        cfa.factor_means = stats.sum_means / stats.weight;
        phi_raw = stats.sum_second / stats.weight - cfa.factor_means * cfa.factor_means.transpose();
    }
    const VectorXd d = phi_raw.diagonal();
    if (!(d.array() > 0.0).all()) {
        throw NotPositiveDefinite("updated factor covariance", 1 + static_cast<int>([&] {
                                      Eigen::Index idx = 0;
                                      d.minCoeff(&idx);
                                      return idx;
                                  }()));
    }
    const VectorXd s = d.array().sqrt();
    cfa.factor_corr = symmetric(phi_raw.array() / (s * s.transpose()).array());
    cfa.factor_corr.diagonal().setOnes();
    cfa.loadings = cfa.loadings * s.asDiagonal();
    cfa.factor_means = cfa.factor_means.cwiseQuotient(s);
    return cfa;
}

CfaParams m_step_cfa(const Dataset& data, const EStepMoments& moments, const FactorStructure& structure,
                     bool means_fixed_zero, const EmOptions& opts) {
    const VectorXd w = moments.responsibilities.col(0);
    if ((w.array() < 0.0).any() || (w.array() > 1.0).any()) {
        throw InvalidArgument("responsibilities must lie in [0,1]");
    }
    const auto stats = suff_stats(data.responses, w, moments.cfa_means, moments.cfa_cov);
    check_weight(stats.weight, "CFA", opts);
    return cfa_update(stats, structure, means_fixed_zero, opts);
}

EfaParams m_step_efa(const Dataset& data, const EStepMoments& moments, const EmOptions& opts) {
    const VectorXd w = moments.responsibilities.col(1);
    if ((w.array() < 0.0).any() || (w.array() > 1.0).any()) {
        throw InvalidArgument("responsibilities must lie in [0,1]");
    }
    const auto stats = suff_stats(data.responses, w, moments.efa_means, moments.efa_cov);
    check_weight(stats.weight, "EFA", opts);
    EfaParams efa;
    const MatrixXi all_free = MatrixXi::Ones(data.p(), moments.efa_means.cols());
    solve_loadings(stats, all_free, opts, efa.loadings, efa.uniquenesses);
    efa.factor_means = stats.sum_means / stats.weight;
    return efa;
}

BetaStep m_step_beta(const MatrixXd& design, const MatrixXd& responsibilities, const MixtureReg& init) {
    if (design.cols() != init.beta.size() || design.rows() != responsibilities.rows()) {
        throw InvalidArgument("m_step_beta: dimension mismatch");
    }
    const VectorXd target = responsibilities.col(0);
    auto objective = [&](const VectorXd& eta) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            s += target(i) * log_sigmoid(eta(i)) + (1.0 - target(i)) * log_sigmoid(-eta(i));
        }
        return s;
    };

    BetaStep out;
    out.reg = init;
    VectorXd beta = init.beta;
    VectorXd eta = design * beta;
    if (eta.cwiseAbs().maxCoeff() > kEtaClamp) {
        const double scale = kEtaClamp / eta.cwiseAbs().maxCoeff();
        beta *= scale;
        eta *= scale;
        out.separated = true;
    }
    double value = objective(eta);
    for (int it = 0; it < 50; ++it) {
        const VectorXd pi = eta.unaryExpr([](double x) { return logistic(x); });
        const VectorXd grad = design.transpose() * (target - pi);
        if (grad.cwiseAbs().maxCoeff() <= 1e-8) {
            break;
        }
        out.iterations = it + 1;
        const VectorXd w = pi.array() * (1.0 - pi.array());
        MatrixXd hessian = design.transpose() * (design.array().colwise() * w.array()).matrix();
        Eigen::LLT<MatrixXd> llt(hessian);
        if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() < 1e-12) {
            hessian.diagonal().array() += 1e-8;
            llt.compute(hessian);
            out.ridged = true;
        }
        const VectorXd delta = llt.solve(grad);
        const VectorXd d_eta = design * delta;

        double step = 1.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            const double reach = eta(i) + step * d_eta(i);
            if (std::abs(reach) > kEtaClamp && d_eta(i) != 0.0) {
                const double bound = ((d_eta(i) > 0 ? kEtaClamp : -kEtaClamp) - eta(i)) / d_eta(i);
                step = std::max(0.0, std::min(step, bound));
                out.separated = true;
            }
        }
        bool improved = false;
        for (int halving = 0; halving < 40 && step > 0.0; ++halving) {
            const VectorXd candidate_eta = eta + step * d_eta;
            const double candidate = objective(candidate_eta);
            if (candidate >= value) {
                improved = candidate > value + 1e-15 * std::abs(value);
                beta += step * delta;
                eta = candidate_eta;
                value = candidate;
                break;
            }
            step *= 0.5;
        }
        if (!improved) {
            break;  // at the optimum to working precision
        }
    }
    out.reg.beta = beta;
    return out;
}

namespace {

void check_inputs(const Dataset& data, const ModelSpec& spec) {
    validate(data);
    validate(spec.structure);
    if (spec.structure.p() != data.p()) {
        throw InvalidArgument("factor structure has p=" + std::to_string(spec.structure.p()) +
                              " but data has p=" + std::to_string(data.p()));
    }
    if (spec.k < 1 || spec.k >= data.p()) {
        throw InvalidArgument("EFA factor count K must satisfy 0 < K < p");
    }
}

}  // namespace

MixtureParams initialize(const Dataset& data, const ModelSpec& spec, const EmOptions& opts, int start) {
    check_inputs(data, spec);
    if (data.n() < data.p() + 1) {
        std::clog << "warning: covariance rank-deficient (n=" << data.n() << " < p+1=" << data.p() + 1
                  << "); proceeding with ridge\n";
    }

    Rng init_rng = Rng::stream(opts.seed, {kInitStream});
    Eigen::VectorXi label = two_means(data.responses, init_rng);
    const auto smaller = std::min((label.array() == 0).count(), (label.array() == 1).count());
    if (smaller < 2) {
        label = principal_split(data.responses);
    }
    const MatrixXd group[2] = {rows_with_label(data.responses, label, 0),
                               rows_with_label(data.responses, label, 1)};

    // Both orientations of the split; odd starts take the one with the lower
    // initial log-likelihood so multi-start fits explore both labelings.
    MixtureParams candidates[2];
    double ll[2];
    for (int orient = 0; orient < 2; ++orient) {
        const MatrixXd& cfa_rows = group[orient];
        const MatrixXd& efa_rows = group[1 - orient];
        MixtureParams& candidate = candidates[orient];
        candidate.cfa = initial_cfa(cfa_rows, spec.structure, spec.means_fixed_zero, opts);
        candidate.efa = initial_efa(efa_rows, spec.k, opts);
        candidate.reg.covariate_names = as_names(data);
        candidate.reg.beta = VectorXd::Zero(data.design.cols());
        candidate.reg.beta(0) = logit(static_cast<double>(cfa_rows.rows()) / data.n());
        ll[orient] = -std::numeric_limits<double>::infinity();
        try {
            ll[orient] = mixture_loglik(data, candidate);
        } catch (const std::exception&) {
        }
    }
    const int preferred = ll[1] > ll[0] ? 1 : 0;
    const int orientations = opts.alternate_orientation ? 2 : 1;
    MixtureParams best = candidates[start % orientations == 0 ? preferred : 1 - preferred];

    if (opts.jitter_sd > 0.0 && start >= orientations) {
        // Factor means are re-solved afterwards so the implied item means
        // L mu and L2 nu survive the perturbation.
        const VectorXd cfa_mean = best.cfa.loadings * best.cfa.factor_means;
        const VectorXd efa_mean = best.efa.loadings * best.efa.factor_means;
        Rng jitter = Rng::stream(opts.seed, {kJitterStream, static_cast<std::uint64_t>(start)});
        auto perturb = [&](MatrixXd& loadings, const MatrixXi* pattern) {
            for (Eigen::Index c = 0; c < loadings.cols(); ++c) {
                const Eigen::Index free = pattern ? pattern->col(c).count() : loadings.rows();
                const double scale = std::sqrt(loadings.col(c).squaredNorm() / static_cast<double>(free));
                for (Eigen::Index j = 0; j < loadings.rows(); ++j) {
                    if (!pattern || (*pattern)(j, c) != 0) {
                        loadings(j, c) += jitter.normal(0.0, opts.jitter_sd * scale);
                    }
                }
            }
        };
        perturb(best.cfa.loadings, &spec.structure.pattern());
        perturb(best.efa.loadings, nullptr);
        if (!spec.means_fixed_zero) {
            best.cfa.factor_means = least_squares_means(best.cfa.loadings, cfa_mean);
        }
        best.efa.factor_means = least_squares_means(best.efa.loadings, efa_mean);
    }
    return best;
}

FitResult run_em(const Dataset& data, const ModelSpec& spec, const MixtureParams& start, const EmOptions& opts) {
    validate(opts);
    validate(data);
    validate(start, spec.structure);

    FitResult result;
    MixtureParams params = start;
    EStepMoments moments;
    for (int it = 0;; ++it) {
        moments = e_step(data, params);
        if (!std::isfinite(moments.loglik)) {
            throw NotPositiveDefinite("log-likelihood is not finite", 0);
        }
        result.loglik_trace.push_back(moments.loglik);
        const auto t = result.loglik_trace.size();
        if (t >= 2 && std::abs(result.loglik_trace[t - 1] - result.loglik_trace[t - 2]) < opts.tol) {
            result.converged = true;
            break;
        }
        if (it == opts.max_iter) {
            break;
        }
        MixtureParams next;
        next.cfa = m_step_cfa(data, moments, spec.structure, spec.means_fixed_zero, opts);
        next.efa = m_step_efa(data, moments, opts);
        const BetaStep beta = m_step_beta(data.design, moments.responsibilities, params.reg);
        next.reg = beta.reg;
        result.beta_separated = result.beta_separated || beta.separated;
        result.beta_ridged = result.beta_ridged || beta.ridged;
        params = std::move(next);
        result.n_iter = it + 1;
    }
    result.params = std::move(params);
    result.responsibilities = std::move(moments.responsibilities);
    result.assignments = classify(result.responsibilities);
    result.n_params = count_params(spec, data.n_covariates());
    result.entropy_raw = entropy_raw(result.responsibilities);
    return result;
}

FitResult fit_em(const Dataset& data, const ModelSpec& spec, const EmOptions& opts) {
    validate(opts);
    check_inputs(data, spec);
    const auto n_starts = static_cast<std::size_t>(opts.n_starts);
    std::vector<std::optional<FitResult>> chains(n_starts);
    std::vector<std::string> causes(n_starts);
    parallel_for(n_starts, [&](std::size_t s) {
        try {
            const MixtureParams init = initialize(data, spec, opts, static_cast<int>(s));
            chains[s] = run_em(data, spec, init, opts);
        } catch (const std::exception& e) {
            // inputs were checked above, so anything here is specific to the start
            causes[s] = e.what();
        }
    });

    std::optional<std::size_t> best;
    for (std::size_t s = 0; s < n_starts; ++s) {
        if (chains[s] && (!best || chains[s]->loglik() > chains[*best]->loglik())) {
            best = s;
        }
    }
    if (!best) {
        throw FitFailure(causes);
    }
    FitResult result = std::move(*chains[*best]);
    result.best_start = static_cast<int>(*best);
    result.start_failures = std::move(causes);
    return result;
}

MatrixXd varimax_rotation(const MatrixXd& loadings, int max_iter, double tol) {
    const auto p = static_cast<double>(loadings.rows());
    const auto k = loadings.cols();
    MatrixXd rotation = MatrixXd::Identity(k, k);
    if (k < 2) {
        return rotation;
    }
    double criterion = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const MatrixXd l = loadings * rotation;
        const MatrixXd cubed = l.array().cube().matrix();
        const VectorXd col_ss = l.array().square().colwise().sum().transpose();
        const MatrixXd target = loadings.transpose() * (cubed - l * (col_ss / p).asDiagonal());
        Eigen::JacobiSVD<MatrixXd> svd(target, Eigen::ComputeFullU | Eigen::ComputeFullV);
        rotation = svd.matrixU() * svd.matrixV().transpose();
        const double next = svd.singularValues().sum();
        if (next < criterion * (1.0 + tol)) {
            break;
        }
        criterion = next;
    }
    return rotation;
}

EfaParams rotate_efa(const EfaParams& efa, const MatrixXd& rotation) {
    EfaParams out = efa;
    out.loadings = efa.loadings * rotation;
    out.factor_means = rotation.transpose() * efa.factor_means;
    return out;
}

}  // namespace aberrant_mix
