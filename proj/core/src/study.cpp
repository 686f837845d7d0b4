#include "aberrant_mix/study.hpp"

#include "aberrant_mix/error.hpp"
#include "aberrant_mix/io.hpp"
#include "aberrant_mix/linalg.hpp"
#include "aberrant_mix/parallel.hpp"
#include "aberrant_mix/rng.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace aberrant_mix {

namespace {

ReplicationRecord fit_and_score(const SimulatedData& sim, int k, double true_pi, const StudyOptions& opts,
                                std::uint64_t seed) {
    ReplicationRecord rec;
    rec.seed = seed;
    const Dataset data = opts.standardize ? standardize_columns(sim.data, true) : sim.data;
    EmOptions em = opts.em;
    em.seed = seed;
    const ModelSpec spec{sim.structure, k, false};
    const FitResult fit = fit_em(data, spec, em);
    rec.ok = true;
    rec.metrics = score_classification(*sim.data.truth, fit.assignments);
    rec.recovery = score_recovery(sim.cfa, fit.params.cfa, sim.structure, true_pi, logistic(fit.params.reg.beta(0)));
    rec.loglik = fit.loglik();
    rec.n_iter = fit.n_iter;
    rec.converged = fit.converged;
    return rec;
}

std::vector<ReplicationRecord> run_reps(int reps, std::uint64_t base_seed, bool keep_data,
                                        const std::function<SimulatedData(std::uint64_t)>& generate,
                                        const std::function<ReplicationRecord(const SimulatedData&,
                                                                              std::uint64_t)>& fit) {
    if (reps < 1) {
        throw InvalidArgument("need at least one replication");
    }
    std::vector<ReplicationRecord> records(static_cast<std::size_t>(reps));
    parallel_for(records.size(), [&](std::size_t r) {
        const std::uint64_t seed = replication_seed(base_seed, static_cast<int>(r));
        ReplicationRecord rec;
        std::optional<SimulatedData> sim;
        try {
            sim = generate(seed);
            rec = fit(*sim, seed);
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.failure = e.what();
        }
        rec.rep = static_cast<int>(r);
        rec.seed = seed;
        if (keep_data) {
            rec.data = std::move(sim);
        }
        records[r] = std::move(rec);
    });
    return records;
}

MeanSd mean_sd(const std::vector<ReplicationRecord>& records, const std::function<double(const ReplicationRecord&)>& f) {
    MeanSd out;
    std::vector<double> v;
    for (const auto& r : records) {
        if (r.ok) {
            v.push_back(f(r));
        }
    }
    if (v.empty()) {
        return out;
    }
    for (double x : v) {
        out.mean += x;
    }
    out.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) {
            ss += (x - out.mean) * (x - out.mean);
        }
        out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return out;
}

}  // namespace

std::uint64_t replication_seed(std::uint64_t base, int rep) {
    return Rng::mix(Rng::mix(base) ^ Rng::mix(static_cast<std::uint64_t>(rep) + 0x5EEDULL));
}

std::vector<ReplicationRecord> run_study1(const Study1Config& cfg, const StudyOptions& opts) {
    validate(cfg);
    return run_reps(
        opts.reps, cfg.seed, opts.keep_data,
        [&](std::uint64_t seed) {
            Study1Config c = cfg;
            c.seed = seed;
            return gen_study1(c);
        },
        [&](const SimulatedData& sim, std::uint64_t seed) { return fit_and_score(sim, cfg.k, cfg.pi, opts, seed); });
}

std::vector<ReplicationRecord> run_study2(const Study2Config& cfg, const StudyOptions& opts) {
    validate(cfg);
    return run_reps(
        opts.reps, cfg.seed, opts.keep_data,
        [&](std::uint64_t seed) {
            Study2Config c = cfg;
            c.seed = seed;
            return gen_study2(c);
        },
        [&](const SimulatedData& sim, std::uint64_t seed) { return fit_and_score(sim, cfg.k, cfg.pi, opts, seed); });
}

StudySummary summarize(const std::vector<ReplicationRecord>& records) {
    StudySummary s;
    for (const auto& r : records) {
        (r.ok ? s.n_ok : s.n_failed) += 1;
    }
    s.se = mean_sd(records, [](const auto& r) { return r.metrics.se; });
    s.sp = mean_sd(records, [](const auto& r) { return r.metrics.sp; });
    s.bacc = mean_sd(records, [](const auto& r) { return r.metrics.bacc; });
    s.mcc = mean_sd(records, [](const auto& r) { return r.metrics.mcc; });
    s.lambda_bias = mean_sd(records, [](const auto& r) { return r.recovery.loadings.bias; });
    s.lambda_rmse = mean_sd(records, [](const auto& r) { return r.recovery.loadings.rmse; });
    s.theta_bias = mean_sd(records, [](const auto& r) { return r.recovery.uniquenesses.bias; });
    s.theta_rmse = mean_sd(records, [](const auto& r) { return r.recovery.uniquenesses.rmse; });
    s.phi_bias = mean_sd(records, [](const auto& r) { return r.recovery.factor_corr.bias; });
    s.phi_rmse = mean_sd(records, [](const auto& r) { return r.recovery.factor_corr.rmse; });
    s.mu_bias = mean_sd(records, [](const auto& r) { return r.recovery.factor_means.bias; });
    s.mu_rmse = mean_sd(records, [](const auto& r) { return r.recovery.factor_means.rmse; });
    s.pi_bias = mean_sd(records, [](const auto& r) { return r.recovery.pi.bias; });
    s.pi_rmse = mean_sd(records, [](const auto& r) { return r.recovery.pi.rmse; });
    return s;
}

std::string replications_csv(const std::vector<ReplicationRecord>& records) {
    std::ostringstream out;
    out << "rep,seed,status,SE,SP,BACC,MCC,lambda_bias,lambda_rmse,theta_bias,theta_rmse,phi_bias,phi_rmse,"
           "mu_bias,mu_rmse,pi_bias,pi_rmse,loglik,n_iter,converged\n";
    for (const auto& r : records) {
        out << r.rep << ',' << r.seed << ',' << (r.ok ? "ok" : "failed");
        if (r.ok) {
            const auto& rc = r.recovery;
            for (double v : {r.metrics.se, r.metrics.sp, r.metrics.bacc, r.metrics.mcc, rc.loadings.bias,
                             rc.loadings.rmse, rc.uniquenesses.bias, rc.uniquenesses.rmse, rc.factor_corr.bias,
                             rc.factor_corr.rmse, rc.factor_means.bias, rc.factor_means.rmse, rc.pi.bias,
                             rc.pi.rmse}) {
                out << ',' << format_fixed(v, 6);
            }
            out << ',' << format_fixed(r.loglik, 6) << ',' << r.n_iter << ',' << (r.converged ? 1 : 0);
        } else {
            out << std::string(16, ',');
        }
        out << "\n";
    }
    return out.str();
}

std::string summary_csv(const StudySummary& s) {
    std::ostringstream out;
    out << "statistic,mean,sd\n";
    const std::pair<const char*, MeanSd> rows[] = {
        {"SE", s.se},
        {"SP", s.sp},
        {"BACC", s.bacc},
        {"MCC", s.mcc},
        {"lambda_bias", s.lambda_bias},
        {"lambda_rmse", s.lambda_rmse},
        {"theta_bias", s.theta_bias},
        {"theta_rmse", s.theta_rmse},
        {"phi_bias", s.phi_bias},
        {"phi_rmse", s.phi_rmse},
        {"mu_bias", s.mu_bias},
        {"mu_rmse", s.mu_rmse},
        {"pi_bias", s.pi_bias},
        {"pi_rmse", s.pi_rmse},
    };
    for (const auto& [name, v] : rows) {
        out << name << ',' << format_fixed(v.mean, 6) << ',' << format_fixed(v.sd, 6) << "\n";
    }
    out << "n_ok," << s.n_ok << ",\n";
    out << "n_failed," << s.n_failed << ",\n";
    return out.str();
}

}  // namespace aberrant_mix
