#include "aberrant_mix/bootstrap.hpp"

#include "aberrant_mix/error.hpp"
#include "aberrant_mix/model.hpp"
#include "aberrant_mix/parallel.hpp"
#include "aberrant_mix/rng.hpp"

#include <cmath>
#include <optional>

namespace aberrant_mix {

namespace {

constexpr std::uint64_t kBootstrapStream = 0xB007;

}  // namespace

std::vector<ParamEntry> param_entries(const MixtureParams& params, const ModelSpec& spec) {
    std::vector<ParamEntry> out;
    const auto& cfa = params.cfa;
    const auto& efa = params.efa;
    for (int j = 0; j < cfa.p(); ++j) {
        for (int f = 0; f < cfa.q(); ++f) {
            if (spec.structure.is_free(j, f)) {
                out.push_back({"lambda1", j, f, cfa.loadings(j, f)});
            }
        }
    }
    for (int j = 0; j < cfa.p(); ++j) {
        out.push_back({"theta_delta", j, 0, cfa.uniquenesses(j)});
    }
    for (int f = 0; f < cfa.q(); ++f) {
        for (int g = 0; g < f; ++g) {
            out.push_back({"phi", f, g, cfa.factor_corr(f, g)});
        }
    }
    if (!spec.means_fixed_zero) {
        for (int f = 0; f < cfa.q(); ++f) {
            out.push_back({"mu", f, 0, cfa.factor_means(f)});
        }
    }
    for (int j = 0; j < efa.p(); ++j) {
        for (int c = 0; c < efa.k(); ++c) {
            out.push_back({"lambda2", j, c, efa.loadings(j, c)});
        }
    }
    for (int j = 0; j < efa.p(); ++j) {
        out.push_back({"psi_eps", j, 0, efa.uniquenesses(j)});
    }
    for (int c = 0; c < efa.k(); ++c) {
        out.push_back({"nu", c, 0, efa.factor_means(c)});
    }
    for (Eigen::Index b = 0; b < params.reg.beta.size(); ++b) {
        out.push_back({"beta", static_cast<int>(b), 0, params.reg.beta(b)});
    }
    return out;
}

std::vector<ParamEntry> aligned_entries(const MixtureParams& params, const MixtureParams& reference,
                                        const ModelSpec& spec) {
    MixtureParams aligned = params;
    aligned.cfa = align_cfa_signs(params.cfa, reference.cfa.loadings);
    aligned.efa = align_efa_columns(params.efa, reference.efa.loadings);
    return param_entries(aligned, spec);
}

BootstrapResult bootstrap_se(const Dataset& data, const ModelSpec& spec, const MixtureParams& estimate,
                             const BootstrapOptions& opts) {
    if (opts.replicates < 2) {
        throw InvalidArgument("bootstrap needs at least 2 replicates");
    }
    std::vector<std::vector<int>> resamples(static_cast<std::size_t>(opts.replicates));
    for (int b = 0; b < opts.replicates; ++b) {
        Rng rng = Rng::stream(opts.seed, {kBootstrapStream, static_cast<std::uint64_t>(b)});
        auto& rows = resamples[static_cast<std::size_t>(b)];
        rows.resize(static_cast<std::size_t>(data.n()));
        for (auto& r : rows) {
            r = rng.uniform_int(0, data.n() - 1);
        }
    }
    return bootstrap_se(data, spec, estimate, resamples, opts);
}

BootstrapResult bootstrap_se(const Dataset& data, const ModelSpec& spec, const MixtureParams& estimate,
                             const std::vector<std::vector<int>>& resamples, const BootstrapOptions& opts) {
    if (resamples.size() < 2) {
        throw InvalidArgument("bootstrap needs at least 2 replicates");
    }
    validate(data);
    validate(estimate, spec.structure);
    const auto reference = param_entries(estimate, spec);
    std::vector<std::optional<std::vector<ParamEntry>>> reps(resamples.size());
    std::vector<std::string> causes(resamples.size());

    parallel_for(resamples.size(), [&](std::size_t b) {
        try {
            const Dataset sample = take_rows(data, resamples[b]);
            const FitResult fit = run_em(sample, spec, estimate, opts.em);
            if (!fit.converged) {
                causes[b] = "did not converge in " + std::to_string(fit.n_iter) + " iterations";
                return;
            }
            reps[b] = aligned_entries(fit.params, estimate, spec);
        } catch (const std::exception& e) {
            causes[b] = e.what();
        }
    });

    BootstrapResult result;
    std::vector<const std::vector<ParamEntry>*> kept;
    for (std::size_t b = 0; b < reps.size(); ++b) {
        if (reps[b]) {
            kept.push_back(&*reps[b]);
        } else {
            result.drop_causes.push_back("replicate " + std::to_string(b) + ": " + causes[b]);
        }
    }
    result.n_effective = static_cast<int>(kept.size());
    result.n_dropped = static_cast<int>(result.drop_causes.size());
    if (result.n_dropped > opts.max_drop_fraction * static_cast<double>(resamples.size()) || kept.size() < 2) {
        throw FitFailure("bootstrap dropped " + std::to_string(result.n_dropped) + " of " +
                             std::to_string(resamples.size()) + " replicates",
                         result.drop_causes);
    }

    const auto m = static_cast<double>(kept.size());
    for (std::size_t e = 0; e < reference.size(); ++e) {
        double mean = 0.0;
        for (const auto* rep : kept) {
            mean += (*rep)[e].value;
        }
        mean /= m;
        double ss = 0.0;
        for (const auto* rep : kept) {
            const double d = (*rep)[e].value - mean;
            ss += d * d;
        }
        const auto& ref = reference[e];
        result.table.push_back({ref.block, ref.row, ref.col, ref.value, std::sqrt(ss / (m - 1.0)),
                                result.n_effective});
    }
    return result;
}

}  // namespace aberrant_mix
