#pragma once

#include "aberrant_mix/io.hpp"
#include "aberrant_mix/metrics.hpp"
#include "aberrant_mix/selection.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace aberrant_mix::cli {

namespace fs = std::filesystem;

/// One invocation of the command-line front end. Unset optionals fall back
/// to the --config file, then to the library defaults.
struct RunConfig {
    std::string command;  // simulate1, simulate2, fit, select, classify, bootstrap, cfa-baseline, corr-by-class
    std::optional<fs::path> data;
    std::optional<fs::path> design;
    std::optional<fs::path> truth;
    std::optional<fs::path> structure;
    std::optional<fs::path> params;       // fit.json from an earlier `fit`
    std::optional<fs::path> assignments;  // classification CSV with an `assigned` column
    std::optional<fs::path> config;       // JSON with optional "em" and "study" blocks
    fs::path out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> k;
    std::vector<int> k_grid;
    // One entry per covariate subset, names separated by commas; "none" is
    // the intercept-only subset. Empty means every covariate in the design.
    std::vector<std::string> covariates;
    std::optional<int> starts;
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::optional<int> bootstrap_reps;
    std::optional<double> gamma, delta, kappa, pi;
    std::optional<int> n, p, q, c, reps;
    std::optional<bool> standardize;
    bool means_fixed_zero = false;
    std::string format = "csv";  // csv or json for tabular reports
};

const std::vector<std::string>& commands();

json to_json(const RunConfig& config);

/// Executes the command. On success writes the outputs plus manifest.json
/// and returns 0. On failure writes only error.json and returns 1 (2 for an
/// invalid configuration).
int run(const RunConfig& config);

/// Missing values (failed scan rows, undefined metrics) are monostate.
using Cell = std::variant<std::monostate, std::string, long long, double>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    int decimals = -1;  // doubles in CSV: fixed decimals, or -1 for round-trip precision
};

std::string to_csv(const Table& table);
json to_json(const Table& table);

/// Model label, loglik, AIC, CAIC, BIC, ssBIC, CLC, ICL_BIC, H, then SE, SP,
/// BACC, MCC when any row carries metrics, then n_params and status.
Table scan_table(const std::vector<ScanRow>& rows);
json selection_json(const std::vector<ScanRow>& rows, const Selection& selection, double entropy_band);

/// row, p_cfa, p_efa, assigned (1 = CFA, 0 = aberrant).
Table classification_table(const MatrixXd& responsibilities, const Eigen::VectorXi& assignments);

/// TP, FP, TN, FN, SE, SP, BACC, MCC.
Table metrics_table(const ClassMetrics& metrics);

/// Splits "x1,x2" style subsets; "none" or "" gives the empty subset.
std::vector<std::vector<std::string>> parse_covariate_subsets(const std::vector<std::string>& specs);

}  // namespace aberrant_mix::cli
