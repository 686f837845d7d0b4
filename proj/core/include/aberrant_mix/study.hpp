#pragma once

#include "aberrant_mix/em.hpp"
#include "aberrant_mix/metrics.hpp"
#include "aberrant_mix/simulation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aberrant_mix {

struct StudyOptions {
    int reps = 50;
    EmOptions em;                // em.seed is replaced per replication
    bool standardize = false;    // z-score the responses before fitting
    bool keep_data = false;      // keep each replication's generated data
};

struct ReplicationRecord {
    int rep = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string failure;
    ClassMetrics metrics;
    Recovery recovery;
    double loglik = 0.0;
    int n_iter = 0;
    bool converged = false;
    std::optional<SimulatedData> data;
};

/// Seed of replication `rep` derived from a base seed.
std::uint64_t replication_seed(std::uint64_t base, int rep);

/// Generates, fits (true K and q, simple structure) and scores each
/// replication. Failed fits are recorded, not thrown.
std::vector<ReplicationRecord> run_study1(const Study1Config& cfg, const StudyOptions& opts);
std::vector<ReplicationRecord> run_study2(const Study2Config& cfg, const StudyOptions& opts);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

struct StudySummary {
    int n_ok = 0;
    int n_failed = 0;
    MeanSd se, sp, bacc, mcc;
    MeanSd lambda_bias, lambda_rmse, theta_bias, theta_rmse, phi_bias, phi_rmse, mu_bias, mu_rmse, pi_bias,
        pi_rmse;
};

StudySummary summarize(const std::vector<ReplicationRecord>& records);

/// One row per replication: rep, seed, status, SE, SP, BACC, MCC, then bias
/// and RMSE per recovery block, loglik, n_iter, converged.
std::string replications_csv(const std::vector<ReplicationRecord>& records);

/// statistic,mean,sd rows for the summary (6 decimals).
std::string summary_csv(const StudySummary& summary);

}  // namespace aberrant_mix
