#include "aberrant_mix_tools/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using aberrant_mix::cli::RunConfig;

void add_common(CLI::App& app, RunConfig& cfg) {
    app.add_option("--out", cfg.out, "Output directory")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Random seed");
    app.add_option("--config", cfg.config, "JSON file with optional \"em\" and \"study\" blocks");
    app.add_option("--format", cfg.format, "Tabular report format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
}

void add_data(CLI::App& app, RunConfig& cfg) {
    app.add_option("--data", cfg.data, "Responses CSV with a header of item labels")->required();
    app.add_option("--design", cfg.design, "Covariate CSV with a header; the intercept is added");
    app.add_option("--truth", cfg.truth, "One-column 0/1 CSV (1 = CFA) used for SE/SP/BACC/MCC");
    app.add_flag("--standardize,!--no-standardize", cfg.standardize, "z-score the responses before fitting");
}

void add_em(CLI::App& app, RunConfig& cfg) {
    app.add_option("--starts", cfg.starts, "EM starts")->check(CLI::PositiveNumber);
    app.add_option("--tol", cfg.tol, "Absolute log-likelihood change for convergence")->check(CLI::PositiveNumber);
    app.add_option("--max-iter", cfg.max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
}

void add_model(CLI::App& app, RunConfig& cfg) {
    app.add_option("--structure", cfg.structure, "Factor structure JSON ({p, q, pattern})");
    app.add_option("--k", cfg.k, "EFA factors in the aberrant component")->check(CLI::PositiveNumber);
    app.add_option("--covariates", cfg.covariates, "Covariate subset, comma separated, or none");
    app.add_flag("--means-fixed-zero", cfg.means_fixed_zero, "Pin the CFA factor means at zero");
}

void add_simulation(CLI::App& app, RunConfig& cfg) {
    app.add_option("--n", cfg.n, "Observations")->check(CLI::PositiveNumber);
    app.add_option("--p", cfg.p, "Items")->check(CLI::PositiveNumber);
    app.add_option("--pi", cfg.pi, "Baseline probability of the CFA component");
    app.add_option("--q", cfg.q, "CFA factors")->check(CLI::PositiveNumber);
    app.add_option("--k", cfg.k, "EFA factors")->check(CLI::PositiveNumber);
    app.add_option("--reps", cfg.reps, "Run a replication study (generate, fit, score) instead of one dataset")
        ->check(CLI::PositiveNumber);
    app.add_flag("--standardize,!--no-standardize", cfg.standardize, "z-score the responses before fitting");
    add_em(app, cfg);
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"CFA+EFA mixture for aberrant responding"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ABERRANT_MIX_VERSION);

    auto* sim1 = app.add_subcommand("simulate1", "Study 1 data (or a replication study with --reps)");
    add_common(*sim1, cfg);
    add_simulation(*sim1, cfg);
    sim1->add_option("--c", cfg.c, "Covariates in the mixture logit (1 or 2)");

    auto* sim2 = app.add_subcommand("simulate2", "Study 2 faking data (or a replication study with --reps)");
    add_common(*sim2, cfg);
    add_simulation(*sim2, cfg);
    sim2->add_option("--gamma", cfg.gamma, "Beta shape gamma of the replacement distribution");
    sim2->add_option("--delta", cfg.delta, "Beta shape delta of the replacement distribution");
    sim2->add_option("--kappa", cfg.kappa, "Faking direction weight in [0, 1]");

    auto* fit = app.add_subcommand("fit", "Fit the CFA+EFA mixture");
    add_common(*fit, cfg);
    add_data(*fit, cfg);
    add_model(*fit, cfg);
    add_em(*fit, cfg);
    fit->get_option("--structure")->required();

    auto* select = app.add_subcommand("select", "Scan K and covariate subsets and select a model");
    add_common(*select, cfg);
    add_data(*select, cfg);
    add_model(*select, cfg);
    add_em(*select, cfg);
    select->get_option("--structure")->required();
    select->get_option("--k")->description("unused; see --k-grid");
    select->add_option("--k-grid", cfg.k_grid, "EFA factor counts to scan")->delimiter(',');

    auto* cls = app.add_subcommand("classify", "Posterior classification from a saved fit");
    add_common(*cls, cfg);
    add_data(*cls, cfg);
    cls->add_option("--params", cfg.params, "fit.json from `fit`")->required();

    auto* boot = app.add_subcommand("bootstrap", "Bootstrap standard errors");
    add_common(*boot, cfg);
    add_data(*boot, cfg);
    add_model(*boot, cfg);
    add_em(*boot, cfg);
    boot->add_option("--params", cfg.params, "fit.json to bootstrap around (otherwise fit first)");
    boot->add_option("--bootstrap-reps", cfg.bootstrap_reps, "Replicates")->check(CLI::PositiveNumber);

    auto* base = app.add_subcommand("cfa-baseline", "Single-group CFA with CFI and RMSEA");
    add_common(*base, cfg);
    add_data(*base, cfg);
    base->add_option("--structure", cfg.structure, "Factor structure JSON")->required();
    base->add_option("--tol", cfg.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
    base->add_option("--max-iter", cfg.max_iter, "Iteration cap")->check(CLI::PositiveNumber);

    auto* corr = app.add_subcommand("corr-by-class", "Inter-item correlations per predicted class");
    add_common(*corr, cfg);
    add_data(*corr, cfg);
    corr->add_option("--assignments", cfg.assignments, "classification CSV with an `assigned` column");
    corr->add_option("--params", cfg.params, "fit.json to classify with");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    cfg.command = app.get_subcommands().front()->get_name();
    try {
        const int status = aberrant_mix::cli::run(cfg);
        if (status != 0) {
            std::cerr << "error: see " << (cfg.out / "error.json").string() << "\n";
        }
        return status;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
