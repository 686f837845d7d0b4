#pragma once

#include "aberrant_mix/bootstrap.hpp"
#include "aberrant_mix/em.hpp"
#include "aberrant_mix/simulation.hpp"
#include "aberrant_mix/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace aberrant_mix {

using json = nlohmann::json;

struct CsvTable {
    MatrixXd values;
    std::vector<std::string> labels;  // header cells, empty without a header
};

/// Rectangular numeric CSV. Errors (IoError) name the file and the 1-based
/// data row / column of a ragged row or non-numeric cell.
CsvTable ingest_csv(const std::filesystem::path& path, bool has_header);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

/// Fixed notation with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Header row of labels (optional) then one line per row, full precision.
void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& values,
                      const std::vector<std::string>& labels = {});

/// Responses CSV (with header), optional covariate CSV (header gives the
/// covariate names; the intercept is added here), optional truth CSV (one
/// 0/1 column with a header).
Dataset load_dataset(const std::filesystem::path& responses, const std::optional<std::filesystem::path>& design,
                     const std::optional<std::filesystem::path>& truth = std::nullopt);

json to_json(const MatrixXd& m);
json to_json(const VectorXd& v);
json to_json(const Eigen::VectorXi& v);
MatrixXd matrix_from_json(const json& j);
VectorXd vector_from_json(const json& j);

json to_json(const FactorStructure& structure);
/// Accepts {"structure": {...}} or the bare {p, q, pattern} object.
FactorStructure structure_from_json(const json& j);

json to_json(const CfaParams& cfa);
json to_json(const EfaParams& efa);
json to_json(const MixtureReg& reg);
CfaParams cfa_from_json(const json& j);
EfaParams efa_from_json(const json& j);
MixtureReg reg_from_json(const json& j);

json params_to_json(const MixtureParams& params, const FactorStructure& structure);
MixtureParams params_from_json(const json& j);

json to_json(const FitResult& fit, const ModelSpec& spec);

json to_json(const EmOptions& opts);
/// Fields missing from `j` keep the values in `base`.
EmOptions em_options_from_json(const json& j, EmOptions base = {});

json to_json(const Study1Config& cfg);
json to_json(const Study2Config& cfg);
Study1Config study1_from_json(const json& j, Study1Config base = {});
Study2Config study2_from_json(const json& j, Study2Config base = {});

json to_json(const SimulatedData& sim);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

/// Columns block,row,col,estimate,se,n_effective_replicates.
std::string bootstrap_csv(const BootstrapResult& result);

}  // namespace aberrant_mix
