#include "aberrant_mix_tools/harness.hpp"

#include "aberrant_mix/bootstrap.hpp"
#include "aberrant_mix/diagnostics.hpp"
#include "aberrant_mix/em.hpp"
#include "aberrant_mix/error.hpp"
#include "aberrant_mix/model.hpp"
#include "aberrant_mix/parallel.hpp"
#include "aberrant_mix/simulation.hpp"
#include "aberrant_mix/study.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#ifndef ABERRANT_MIX_VERSION
#define ABERRANT_MIX_VERSION "unknown"
#endif

namespace aberrant_mix::cli {

namespace {

constexpr int kBootstrapMaxIter = 5000;

/// A configuration problem detected before any module runs (exit status 2).
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Files produced by a command, held in memory until the command succeeds.
struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;
    json summary = json::object();

    void add(const std::string& name, std::string content) { files.emplace_back(name, std::move(content)); }
    void add(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }
};

const fs::path& require_path(const std::optional<fs::path>& path, const std::string& flag, const RunConfig& cfg) {
    if (!path) {
        throw ConfigError(cfg.command + " needs " + flag);
    }
    if (!fs::exists(*path)) {
        throw ConfigError(flag + " " + path->string() + " does not exist");
    }
    return *path;
}

std::uint64_t require_seed(const RunConfig& cfg) {
    if (!cfg.seed) {
        throw ConfigError(cfg.command + " needs --seed");
    }
    return *cfg.seed;
}

json config_file(const RunConfig& cfg) {
    if (!cfg.config) {
        return json::object();
    }
    return read_json(require_path(cfg.config, "--config", cfg));
}

json block(const json& j, const std::string& key) {
    return j.contains(key) ? j.at(key) : json::object();
}

EmOptions em_options(const RunConfig& cfg, const json& file) {
    EmOptions opts = em_options_from_json(block(file, "em"));
    if (cfg.starts) opts.n_starts = *cfg.starts;
    if (cfg.tol) opts.tol = *cfg.tol;
    if (cfg.max_iter) opts.max_iter = *cfg.max_iter;
    if (cfg.seed) opts.seed = *cfg.seed;
    validate(opts);
    return opts;
}

void add_table(Outputs& out, const std::string& stem, const Table& table, const RunConfig& cfg) {
    if (cfg.format == "json") {
        out.add(stem + ".json", to_json(table));
    } else {
        out.add(stem + ".csv", to_csv(table));
    }
}

std::string matrix_csv(const MatrixXd& values, const std::vector<std::string>& labels) {
    std::ostringstream os;
    for (std::size_t j = 0; j < labels.size(); ++j) {
        os << (j ? "," : "") << labels[j];
    }
    if (!labels.empty()) {
        os << "\n";
    }
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            os << (j ? "," : "") << format_double(values(i, j));
        }
        os << "\n";
    }
    return os.str();
}

std::vector<std::string> default_labels(const std::string& prefix, int count) {
    std::vector<std::string> out;
    for (int j = 0; j < count; ++j) {
        out.push_back(prefix + std::to_string(j + 1));
    }
    return out;
}

Dataset load_input(const RunConfig& cfg) {
    std::optional<fs::path> design;
    std::optional<fs::path> truth;
    if (cfg.design) design = require_path(cfg.design, "--design", cfg);
    if (cfg.truth) truth = require_path(cfg.truth, "--truth", cfg);
    return load_dataset(require_path(cfg.data, "--data", cfg), design, truth);
}

FactorStructure load_structure(const RunConfig& cfg) {
    return structure_from_json(read_json(require_path(cfg.structure, "--structure", cfg)));
}

/// Covariate subset for single-model commands: the one given, else all.
std::vector<std::string> single_subset(const RunConfig& cfg, const Dataset& data) {
    if (cfg.covariates.empty()) {
        return data.covariate_names;
    }
    if (cfg.covariates.size() != 1) {
        throw ConfigError(cfg.command + " takes one --covariates subset");
    }
    return parse_covariate_subsets(cfg.covariates).front();
}

Dataset prepare(const Dataset& data, const std::vector<std::string>& covariates, bool standardize) {
    Dataset out = select_covariates(data, covariates);
    return standardize ? standardize_columns(out, true) : out;
}

void add_classification(Outputs& out, const Dataset& data, const MatrixXd& responsibilities,
                        const Eigen::VectorXi& assignments, const RunConfig& cfg) {
    add_table(out, "classification", classification_table(responsibilities, assignments), cfg);
    out.summary["n_cfa"] = assignments.count();
    out.summary["n_aberrant"] = assignments.size() - assignments.count();
    if (data.truth) {
        const ClassMetrics metrics = score_classification(*data.truth, assignments);
        add_table(out, "metrics", metrics_table(metrics), cfg);
        out.summary["metrics"] = {{"SE", metrics.se}, {"SP", metrics.sp}, {"BACC", metrics.bacc}, {"MCC", metrics.mcc}};
    }
}

struct FitFile {
    ModelSpec spec;
    MixtureParams params;
    std::vector<std::string> covariates;
    bool standardize = false;
};

FitFile load_fit(const RunConfig& cfg) {
    const json j = read_json(require_path(cfg.params, "--params", cfg));
    FitFile f{ModelSpec{structure_from_json(j.at("structure")), j.at("k").get<int>(),
                        j.value("means_fixed_zero", false)},
              params_from_json(j), j.value("covariates", std::vector<std::string>{}),
              j.value("standardize", false)};
    validate(f.params, f.spec.structure);
    return f;
}

void write_dataset(Outputs& out, const SimulatedData& sim, const json& config) {
    const Dataset& d = sim.data;
    out.add("responses.csv", matrix_csv(d.responses, d.item_labels));
    if (d.n_covariates() > 0) {
        out.add("design.csv", matrix_csv(d.design.rightCols(d.n_covariates()), d.covariate_names));
    }
    out.add("truth.csv", matrix_csv(d.truth->cast<double>(), {"z"}));
    out.add("structure.json", json{{"structure", to_json(sim.structure)}});
    json truth = to_json(sim);
    truth["config"] = config;
    out.add("truth.json", truth);
    out.summary["n"] = d.n();
    out.summary["p"] = d.p();
    out.summary["n_cfa"] = d.truth->count();
}

void write_study(Outputs& out, const std::vector<ReplicationRecord>& records) {
    out.add("replications.csv", replications_csv(records));
    const StudySummary summary = summarize(records);
    out.add("summary.csv", summary_csv(summary));
    out.summary["n_ok"] = summary.n_ok;
    out.summary["n_failed"] = summary.n_failed;
    out.summary["BACC"] = summary.bacc.mean;
    out.summary["MCC"] = summary.mcc.mean;
}

StudyOptions study_options(const RunConfig& cfg, const json& file, bool standardize_default) {
    StudyOptions opts;
    opts.reps = *cfg.reps;
    opts.em = em_options(cfg, file);
    opts.standardize = cfg.standardize.value_or(standardize_default);
    return opts;
}

void cmd_simulate1(const RunConfig& cfg, Outputs& out) {
    const json file = config_file(cfg);
    Study1Config s = study1_from_json(block(file, "study"));
    s.seed = require_seed(cfg);
    if (cfg.n) s.n = *cfg.n;
    if (cfg.p) s.p = *cfg.p;
    if (cfg.pi) s.pi = *cfg.pi;
    if (cfg.q) s.q = *cfg.q;
    if (cfg.k) s.k = *cfg.k;
    if (cfg.c) s.c = *cfg.c;
    validate(s);
    if (cfg.reps) {
        const StudyOptions opts = study_options(cfg, file, false);
        out.add("study.json", json{{"study", to_json(s)}, {"em", to_json(opts.em)}, {"reps", opts.reps},
                                   {"standardize", opts.standardize}});
        write_study(out, run_study1(s, opts));
    } else {
        write_dataset(out, gen_study1(s), to_json(s));
    }
}

void cmd_simulate2(const RunConfig& cfg, Outputs& out) {
    const json file = config_file(cfg);
    Study2Config s = study2_from_json(block(file, "study"));
    s.seed = require_seed(cfg);
    if (cfg.n) s.n = *cfg.n;
    if (cfg.p) s.p = *cfg.p;
    if (cfg.pi) s.pi = *cfg.pi;
    if (cfg.q) s.q = *cfg.q;
    if (cfg.k) s.k = *cfg.k;
    if (cfg.gamma) s.gamma = *cfg.gamma;
    if (cfg.delta) s.delta = *cfg.delta;
    if (cfg.kappa) s.kappa = *cfg.kappa;
    validate(s);
    if (cfg.reps) {
        const StudyOptions opts = study_options(cfg, file, true);
        out.add("study.json", json{{"study", to_json(s)}, {"em", to_json(opts.em)}, {"reps", opts.reps},
                                   {"standardize", opts.standardize}});
        write_study(out, run_study2(s, opts));
    } else {
        write_dataset(out, gen_study2(s), to_json(s));
    }
}

void cmd_fit(const RunConfig& cfg, Outputs& out) {
    const json file = config_file(cfg);
    const Dataset raw = load_input(cfg);
    const std::vector<std::string> covariates = single_subset(cfg, raw);
    const bool standardize = cfg.standardize.value_or(false);
    const Dataset data = prepare(raw, covariates, standardize);
    const ModelSpec spec{load_structure(cfg), cfg.k.value_or(1), cfg.means_fixed_zero};
    const EmOptions opts = em_options(cfg, file);
    const FitResult fit = fit_em(data, spec, opts);
    json j = to_json(fit, spec);
    j["means_fixed_zero"] = spec.means_fixed_zero;
    j["covariates"] = covariates;
    j["standardize"] = standardize;
    j["em"] = to_json(opts);
    out.add("fit.json", j);
    add_classification(out, data, fit.responsibilities, fit.assignments, cfg);
    out.summary["loglik"] = fit.loglik();
    out.summary["converged"] = fit.converged;
    out.summary["n_iter"] = fit.n_iter;
}

void cmd_select(const RunConfig& cfg, Outputs& out) {
    const json file = config_file(cfg);
    const Dataset raw = load_input(cfg);
    std::vector<int> k_grid = cfg.k_grid;
    if (k_grid.empty()) {
        k_grid = file.value("k_grid", std::vector<int>{});
    }
    if (k_grid.empty()) {
        throw ConfigError("select needs --k-grid");
    }
    const auto subsets =
        cfg.covariates.empty() ? std::vector<std::vector<std::string>>{raw.covariate_names}
                               : parse_covariate_subsets(cfg.covariates);
    ScanOptions opts;
    opts.em = em_options(cfg, file);
    opts.means_fixed_zero = cfg.means_fixed_zero;
    opts.entropy_band = file.value("entropy_band", opts.entropy_band);
    const bool standardize = cfg.standardize.value_or(false);
    const Dataset data = standardize ? standardize_columns(raw, true) : raw;
    const auto rows = scan(data, load_structure(cfg), k_grid, subsets, opts);
    const Selection selection = select_model(rows, opts.entropy_band);
    add_table(out, "scan", scan_table(rows), cfg);
    const json sel = selection_json(rows, selection, opts.entropy_band);
    out.add("selection.json", sel);
    out.summary["selected"] = sel.at("selected");
}

void cmd_classify(const RunConfig& cfg, Outputs& out) {
    const FitFile fit = load_fit(cfg);
    const Dataset raw = load_input(cfg);
    const Dataset data = prepare(raw, fit.covariates, cfg.standardize.value_or(fit.standardize));
    const MatrixXd resp = posterior_probs(data, fit.params);
    add_classification(out, data, resp, classify(resp), cfg);
}

void cmd_bootstrap(const RunConfig& cfg, Outputs& out) {
    const json file = config_file(cfg);
    BootstrapOptions opts;
    opts.seed = require_seed(cfg);
    opts.em = em_options(cfg, file);
    if (!cfg.max_iter && !block(file, "em").contains("max_iter")) {
        // Replicates restart near a converged point and creep back linearly.
        opts.em.max_iter = kBootstrapMaxIter;
    }
    opts.replicates = cfg.bootstrap_reps.value_or(opts.replicates);
    const Dataset raw = load_input(cfg);
    ModelSpec spec;
    MixtureParams estimate;
    Dataset data;
    if (cfg.params) {
        const FitFile fit = load_fit(cfg);
        spec = fit.spec;
        estimate = fit.params;
        data = prepare(raw, fit.covariates, cfg.standardize.value_or(fit.standardize));
    } else {
        data = prepare(raw, single_subset(cfg, raw), cfg.standardize.value_or(false));
        spec = ModelSpec{load_structure(cfg), cfg.k.value_or(1), cfg.means_fixed_zero};
        estimate = fit_em(data, spec, opts.em).params;
    }
    const BootstrapResult result = bootstrap_se(data, spec, estimate, opts);
    if (cfg.format == "json") {
        json rows = json::array();
        for (const auto& e : result.table) {
            rows.push_back({{"block", e.block}, {"row", e.row}, {"col", e.col}, {"estimate", e.estimate},
                            {"se", e.se}, {"n_effective_replicates", e.n_effective}});
        }
        out.add("bootstrap.json", rows);
    } else {
        out.add("bootstrap.csv", bootstrap_csv(result));
    }
    out.summary["replicates"] = opts.replicates;
    out.summary["n_effective"] = result.n_effective;
    out.summary["n_dropped"] = result.n_dropped;
    out.summary["drop_causes"] = result.drop_causes;
}

void cmd_cfa_baseline(const RunConfig& cfg, Outputs& out) {
    const Dataset raw = load_input(cfg);
    const Dataset data = cfg.standardize.value_or(false) ? standardize_columns(raw, true) : raw;
    EmOptions opts = baseline_options();
    if (cfg.tol) opts.tol = *cfg.tol;
    if (cfg.max_iter) opts.max_iter = *cfg.max_iter;
    const CfaBaseline base = fit_cfa_single(data, load_structure(cfg), opts);
    const FitIndices& fi = base.indices;
    json indices = {{"discrepancy", fi.discrepancy}, {"chi_square", fi.chi_square}, {"df", fi.df},
                    {"chi_square_null", fi.chi_square_null}, {"df_null", fi.df_null},
                    {"CFI", fi.cfi}, {"RMSEA", fi.rmsea}};
    out.add("baseline.json", json{{"params", to_json(base.params)}, {"indices", indices},
                                  {"n_iter", base.n_iter}, {"converged", base.converged}});
    Table t{{"chi_square", "df", "chi_square_null", "df_null", "CFI", "RMSEA"},
            {{fi.chi_square, static_cast<long long>(fi.df), fi.chi_square_null, static_cast<long long>(fi.df_null),
              fi.cfi, fi.rmsea}},
            6};
    add_table(out, "fit_indices", t, cfg);
    out.summary["CFI"] = fi.cfi;
    out.summary["RMSEA"] = fi.rmsea;
    out.summary["converged"] = base.converged;
}

Eigen::VectorXi read_assignments(const fs::path& path, int n) {
    const CsvTable t = ingest_csv(path, true);
    const auto it = std::find(t.labels.begin(), t.labels.end(), "assigned");
    if (it == t.labels.end()) {
        throw IoError(path.string() + ": no 'assigned' column");
    }
    if (t.values.rows() != n) {
        throw IoError(path.string() + ": " + std::to_string(t.values.rows()) + " rows but the data have " +
                      std::to_string(n));
    }
    const VectorXd col = t.values.col(it - t.labels.begin());
    Eigen::VectorXi out(n);
    for (int i = 0; i < n; ++i) {
        if (col(i) != 0.0 && col(i) != 1.0) {
            throw IoError(path.string() + ": assigned must be 0 or 1 (row " + std::to_string(i + 1) + ")");
        }
        out(i) = static_cast<int>(col(i));
    }
    return out;
}

void cmd_corr_by_class(const RunConfig& cfg, Outputs& out) {
    const Dataset raw = load_input(cfg);
    Eigen::VectorXi assignments;
    if (cfg.assignments) {
        assignments = read_assignments(require_path(cfg.assignments, "--assignments", cfg), raw.n());
    } else if (cfg.params) {
        const FitFile fit = load_fit(cfg);
        const Dataset data = prepare(raw, fit.covariates, cfg.standardize.value_or(fit.standardize));
        assignments = classify(posterior_probs(data, fit.params));
    } else {
        throw ConfigError("corr-by-class needs --assignments or --params");
    }
    const ClassCorrelations corr = corr_by_class(raw, assignments);
    const auto labels = raw.item_labels.empty() ? default_labels("y", raw.p()) : raw.item_labels;
    out.add("corr_cfa.csv", matrix_csv(corr.cfa, labels));
    out.add("corr_efa.csv", matrix_csv(corr.efa, labels));
    out.summary["n_cfa"] = assignments.count();
    out.summary["n_aberrant"] = assignments.size() - assignments.count();
}

const std::map<std::string, std::function<void(const RunConfig&, Outputs&)>>& dispatch() {
    static const std::map<std::string, std::function<void(const RunConfig&, Outputs&)>> table = {
        {"simulate1", cmd_simulate1},   {"simulate2", cmd_simulate2},       {"fit", cmd_fit},
        {"select", cmd_select},         {"classify", cmd_classify},         {"bootstrap", cmd_bootstrap},
        {"cfa-baseline", cmd_cfa_baseline}, {"corr-by-class", cmd_corr_by_class}};
    return table;
}

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    if (dynamic_cast<const InvalidArgument*>(&e)) return "InvalidArgument";
    if (dynamic_cast<const NotPositiveDefinite*>(&e)) return "NotPositiveDefinite";
    if (dynamic_cast<const EmptyComponent*>(&e)) return "EmptyComponent";
    if (dynamic_cast<const SingularSystem*>(&e)) return "SingularSystem";
    if (dynamic_cast<const FitFailure*>(&e)) return "FitFailure";
    if (dynamic_cast<const IoError*>(&e)) return "IoError";
    if (dynamic_cast<const json::exception*>(&e)) return "JsonError";
    return "Error";
}

json versions() {
    return {{"aberrant_mix", ABERRANT_MIX_VERSION},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}};
}

void remove_if_present(const fs::path& path) {
    std::error_code ec;
    fs::remove(path, ec);
}

}  // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = {"simulate1", "simulate2",    "fit",          "select",
                                                   "classify",  "bootstrap", "cfa-baseline", "corr-by-class"};
    return names;
}

json to_json(const RunConfig& c) {
    auto path = [](const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); };
    auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
    return {{"command", c.command},
            {"data", path(c.data)},
            {"design", path(c.design)},
            {"truth", path(c.truth)},
            {"structure", path(c.structure)},
            {"params", path(c.params)},
            {"assignments", path(c.assignments)},
            {"config", path(c.config)},
            {"out", c.out.string()},
            {"seed", opt(c.seed)},
            {"k", opt(c.k)},
            {"k_grid", c.k_grid},
            {"covariates", c.covariates},
            {"starts", opt(c.starts)},
            {"tol", opt(c.tol)},
            {"max_iter", opt(c.max_iter)},
            {"bootstrap_reps", opt(c.bootstrap_reps)},
            {"gamma", opt(c.gamma)},
            {"delta", opt(c.delta)},
            {"kappa", opt(c.kappa)},
            {"pi", opt(c.pi)},
            {"n", opt(c.n)},
            {"p", opt(c.p)},
            {"q", opt(c.q)},
            {"c", opt(c.c)},
            {"reps", opt(c.reps)},
            {"standardize", opt(c.standardize)},
            {"means_fixed_zero", c.means_fixed_zero},
            {"format", c.format}};
}

int run(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    int status = 0;
    json error;
    Outputs out;
    try {
        const auto it = dispatch().find(cfg.command);
        if (it == dispatch().end()) {
            throw ConfigError("unknown command '" + cfg.command + "'");
        }
        if (cfg.format != "csv" && cfg.format != "json") {
            throw ConfigError("--format must be csv or json");
        }
        it->second(cfg, out);
    } catch (const std::exception& e) {
        status = dynamic_cast<const ConfigError*>(&e) ? 2 : 1;
        error = {{"status", "error"}, {"command", cfg.command}, {"error_type", error_type(e)},
                 {"message", e.what()}, {"exit_code", status}};
        if (const auto* f = dynamic_cast<const FitFailure*>(&e)) {
            error["causes"] = f->causes();
        }
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        fs::create_directories(cfg.out);
        if (status != 0) {
            remove_if_present(cfg.out / "manifest.json");
            write_json(cfg.out / "error.json", error);
            return status;
        }
        remove_if_present(cfg.out / "error.json");
        json files = json::array();
        for (const auto& [name, content] : out.files) {
            write_text(cfg.out / name, content);
            files.push_back(name);
        }
        write_json(cfg.out / "manifest.json", json{{"status", "ok"},
                                                  {"command", cfg.command},
                                                  {"config", to_json(cfg)},
                                                  {"seed", cfg.seed ? json(*cfg.seed) : json(nullptr)},
                                                  {"versions", versions()},
                                                  {"threads", thread_count()},
                                                  {"wall_time_seconds", seconds},
                                                  {"outputs", files},
                                                  {"summary", out.summary}});
    } catch (const std::exception& e) {
        // A partial set of outputs must not survive a failed write.
        for (const auto& [name, content] : out.files) {
            remove_if_present(cfg.out / name);
        }
        remove_if_present(cfg.out / "manifest.json");
        try {
            write_json(cfg.out / "error.json", json{{"status", "error"}, {"command", cfg.command},
                                                   {"error_type", error_type(e)}, {"message", e.what()},
                                                   {"exit_code", 1}});
        } catch (const std::exception&) {
        }
        throw;
    }
    return 0;
}

std::string to_csv(const Table& table) {
    std::ostringstream os;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        os << (j ? "," : "") << table.columns[j];
    }
    os << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            os << (j ? "," : "");
            const Cell& cell = row[j];
            if (const auto* s = std::get_if<std::string>(&cell)) {
                os << *s;
            } else if (const auto* i = std::get_if<long long>(&cell)) {
                os << *i;
            } else if (const auto* d = std::get_if<double>(&cell)) {
                os << (table.decimals < 0 ? format_double(*d) : format_fixed(*d, table.decimals));
            }
        }
        os << "\n";
    }
    return os.str();
}

json to_json(const Table& table) {
    json rows = json::array();
    for (const auto& row : table.rows) {
        json obj = json::object();
        for (std::size_t j = 0; j < row.size(); ++j) {
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, std::monostate>) {
                        obj[table.columns[j]] = nullptr;
                    } else {
                        obj[table.columns[j]] = v;
                    }
                },
                row[j]);
        }
        rows.push_back(std::move(obj));
    }
    return rows;
}

Table scan_table(const std::vector<ScanRow>& rows) {
    const bool with_metrics = std::any_of(rows.begin(), rows.end(), [](const ScanRow& r) { return r.metrics.has_value(); });
    Table t;
    t.decimals = 6;
    t.columns = {"model", "loglik"};
    for (const auto& [index, name] : index_names()) {
        t.columns.push_back(name);
    }
    if (with_metrics) {
        t.columns.insert(t.columns.end(), {"SE", "SP", "BACC", "MCC"});
    }
    t.columns.insert(t.columns.end(), {"n_params", "status"});
    for (const auto& row : rows) {
        std::vector<Cell> cells{row.candidate.label()};
        if (row.ok) {
            cells.emplace_back(row.report.loglik);
            for (const auto& [index, name] : index_names()) {
                cells.emplace_back(index_value(row.report, index));
            }
        } else {
            cells.resize(cells.size() + 1 + index_names().size());
        }
        if (with_metrics) {
            if (row.ok && row.metrics) {
                cells.insert(cells.end(), {row.metrics->se, row.metrics->sp, row.metrics->bacc, row.metrics->mcc});
            } else {
                cells.resize(cells.size() + 4);
            }
        }
        cells.emplace_back(row.ok ? Cell{static_cast<long long>(row.report.n_params)} : Cell{});
        cells.emplace_back(row.ok ? std::string("ok") : "failed: " + row.failure);
        t.rows.push_back(std::move(cells));
    }
    return t;
}

json selection_json(const std::vector<ScanRow>& rows, const Selection& selection, double entropy_band) {
    auto label = [&](const std::optional<std::size_t>& r) { return r ? json(rows[*r].candidate.label()) : json(nullptr); };
    json eligible = json::array();
    for (std::size_t r : selection.eligible) {
        eligible.push_back(rows[r].candidate.label());
    }
    json winners = json::object();
    for (const auto& [index, row] : selection.winners) {
        const auto& names = index_names();
        const auto it = std::find_if(names.begin(), names.end(), [&](const auto& e) { return e.first == index; });
        winners[it->second] = label(row);
    }
    json failed = json::array();
    for (const auto& row : rows) {
        if (!row.ok) {
            failed.push_back({{"model", row.candidate.label()}, {"failure", row.failure}});
        }
    }
    json out = {{"rule", "minimum ICL_BIC among rows with H within entropy_band of the maximum H"},
                {"entropy_band", entropy_band},
                {"selected", label(selection.selected)},
                {"eligible", eligible},
                {"winners", winners},
                {"failed", failed}};
    if (selection.selected) {
        const ScanRow& row = rows[*selection.selected];
        out["selected_k"] = row.candidate.k;
        out["selected_covariates"] = row.candidate.covariates;
    }
    return out;
}

Table classification_table(const MatrixXd& responsibilities, const Eigen::VectorXi& assignments) {
    Table t;
    t.columns = {"row", "p_cfa", "p_efa", "assigned"};
    for (Eigen::Index i = 0; i < responsibilities.rows(); ++i) {
        t.rows.push_back({static_cast<long long>(i + 1), responsibilities(i, 0), responsibilities(i, 1),
                          static_cast<long long>(assignments(i))});
    }
    return t;
}

Table metrics_table(const ClassMetrics& m) {
    return Table{{"TP", "FP", "TN", "FN", "SE", "SP", "BACC", "MCC"},
                 {{static_cast<long long>(m.counts.tp), static_cast<long long>(m.counts.fp),
                   static_cast<long long>(m.counts.tn), static_cast<long long>(m.counts.fn), m.se, m.sp, m.bacc,
                   m.mcc}},
                 6};
}

std::vector<std::vector<std::string>> parse_covariate_subsets(const std::vector<std::string>& specs) {
    std::vector<std::vector<std::string>> out;
    for (const auto& spec : specs) {
        std::vector<std::string> names;
        if (spec != "none") {
            std::stringstream ss(spec);
            std::string name;
            while (std::getline(ss, name, ',')) {
                if (!name.empty()) {
                    names.push_back(name);
                }
            }
        }
        out.push_back(std::move(names));
    }
    return out;
}

}  // namespace aberrant_mix::cli
