#pragma once

#include "aberrant_mix/em.hpp"
#include "aberrant_mix/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace aberrant_mix {

/// One reported parameter. Blocks: lambda1 (free entries), theta_delta, phi
/// (strict lower triangle), mu (when free), lambda2, psi_eps, nu, beta.
/// Vector blocks use col = 0.
struct ParamEntry {
    std::string block;
    int row = 0;
    int col = 0;
    double value = 0.0;
};

std::vector<ParamEntry> param_entries(const MixtureParams& params, const ModelSpec& spec);

/// Entries of `params` after aligning CFA signs and EFA columns to `reference`.
std::vector<ParamEntry> aligned_entries(const MixtureParams& params, const MixtureParams& reference,
                                        const ModelSpec& spec);

struct SeEntry {
    std::string block;
    int row = 0;
    int col = 0;
    double estimate = 0.0;
    double se = 0.0;
    int n_effective = 0;
};

struct BootstrapOptions {
    int replicates = 200;
    std::uint64_t seed = 0;
    EmOptions em;                      // refits run one chain from the point estimate
    double max_drop_fraction = 0.2;
};

struct BootstrapResult {
    std::vector<SeEntry> table;
    int n_effective = 0;
    int n_dropped = 0;
    std::vector<std::string> drop_causes;  // one per dropped replicate
};

/// Row resamples of (Y, X) drawn from the stream (seed, replicate).
BootstrapResult bootstrap_se(const Dataset& data, const ModelSpec& spec, const MixtureParams& estimate,
                             const BootstrapOptions& opts);

/// Same, with the resampled row indices supplied by the caller.
BootstrapResult bootstrap_se(const Dataset& data, const ModelSpec& spec, const MixtureParams& estimate,
                             const std::vector<std::vector<int>>& resamples, const BootstrapOptions& opts);

}  // namespace aberrant_mix
