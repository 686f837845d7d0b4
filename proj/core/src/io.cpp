#include "aberrant_mix/io.hpp"

#include "aberrant_mix/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace aberrant_mix {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(first, last - first + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                             : comma - start)));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

bool parse_double(const std::string& cell, double& out) {
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    if (begin != end && *begin == '+') {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

CsvTable ingest_csv(const std::filesystem::path& path, bool has_header) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    CsvTable table;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t width = 0;
    bool header_pending = has_header;
    int data_row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        auto cells = split(line);
        if (header_pending) {
            table.labels = cells;
            width = cells.size();
            header_pending = false;
            continue;
        }
        ++data_row;
        if (width == 0) {
            width = cells.size();
        }
        if (cells.size() != width) {
            throw IoError(path.string() + ": row " + std::to_string(data_row) + " has " +
                          std::to_string(cells.size()) + " cells, expected " + std::to_string(width));
        }
        std::vector<double> values(width);
        for (std::size_t c = 0; c < width; ++c) {
            if (!parse_double(cells[c], values[c])) {
                throw IoError(path.string() + ": non-numeric or missing cell '" + cells[c] + "' at (row " +
                              std::to_string(data_row) + ", col " + std::to_string(c + 1) + ")");
            }
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) {
        throw IoError(path.string() + ": no data rows");
    }
    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return table;
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& values,
                      const std::vector<std::string>& labels) {
    std::ostringstream out;
    for (std::size_t c = 0; c < labels.size(); ++c) {
        out << (c ? "," : "") << labels[c];
    }
    if (!labels.empty()) {
        out << "\n";
    }
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            out << (c ? "," : "") << format_double(values(r, c));
        }
        out << "\n";
    }
    write_text(path, out.str());
}

Dataset load_dataset(const std::filesystem::path& responses, const std::optional<std::filesystem::path>& design,
                     const std::optional<std::filesystem::path>& truth) {
    CsvTable y = ingest_csv(responses, true);
    Dataset data = Dataset::from_responses(std::move(y.values));
    data.item_labels = std::move(y.labels);
    if (design) {
        CsvTable x = ingest_csv(*design, true);
        if (x.values.rows() != data.n()) {
            throw IoError(design->string() + ": " + std::to_string(x.values.rows()) + " rows but responses have " +
                          std::to_string(data.n()));
        }
        data.design.resize(data.n(), x.values.cols() + 1);
        data.design.col(0).setOnes();
        data.design.rightCols(x.values.cols()) = x.values;
        data.covariate_names = std::move(x.labels);
    }
    if (truth) {
        CsvTable z = ingest_csv(*truth, true);
        if (z.values.rows() != data.n() || z.values.cols() != 1) {
            throw IoError(truth->string() + ": truth must be one column with one row per observation");
        }
        Eigen::VectorXi t(data.n());
        for (int i = 0; i < data.n(); ++i) {
            const double v = z.values(i, 0);
            if (v != 0.0 && v != 1.0) {
                throw IoError(truth->string() + ": truth must be 0 or 1 (row " + std::to_string(i + 1) + ")");
            }
            t(i) = static_cast<int>(v);
        }
        data.truth = t;
    }
    validate(data);
    return data;
}

json to_json(const MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        out.push_back(std::move(row));
    }
    return out;
}

json to_json(const VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json to_json(const Eigen::VectorXi& v) {
    return json(std::vector<int>(v.data(), v.data() + v.size()));
}

MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array()) {
        throw InvalidArgument("matrix must be an array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw InvalidArgument("matrix rows must have equal length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
    }
    return m;
}

VectorXd vector_from_json(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json to_json(const FactorStructure& structure) {
    json pattern = json::array();
    for (int j = 0; j < structure.p(); ++j) {
        json row = json::array();
        for (int f = 0; f < structure.q(); ++f) {
            row.push_back(structure.pattern()(j, f));
        }
        pattern.push_back(std::move(row));
    }
    return {{"p", structure.p()}, {"q", structure.q()}, {"pattern", pattern}};
}

FactorStructure structure_from_json(const json& j) {
    const json& s = j.contains("structure") ? j.at("structure") : j;
    const int p = s.at("p").get<int>();
    const int q = s.at("q").get<int>();
    const json& pattern = s.at("pattern");
    if (!pattern.is_array() || static_cast<int>(pattern.size()) != p) {
        throw InvalidArgument("structure pattern must have p rows");
    }
    MatrixXi m(p, q);
    for (int r = 0; r < p; ++r) {
        const json& row = pattern.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<int>(row.size()) != q) {
            throw InvalidArgument("structure pattern rows must have q entries");
        }
        for (int c = 0; c < q; ++c) {
            m(r, c) = row.at(static_cast<std::size_t>(c)).get<int>();
        }
    }
    return FactorStructure(std::move(m));
}

json to_json(const CfaParams& cfa) {
    return {{"loadings", to_json(cfa.loadings)},
            {"factor_corr", to_json(cfa.factor_corr)},
            {"uniquenesses", to_json(cfa.uniquenesses)},
            {"factor_means", to_json(cfa.factor_means)},
            {"means_fixed_zero", cfa.means_fixed_zero}};
}

json to_json(const EfaParams& efa) {
    return {{"loadings", to_json(efa.loadings)},
            {"uniquenesses", to_json(efa.uniquenesses)},
            {"factor_means", to_json(efa.factor_means)}};
}

json to_json(const MixtureReg& reg) {
    return {{"beta", to_json(reg.beta)}, {"covariate_names", reg.covariate_names}};
}

CfaParams cfa_from_json(const json& j) {
    CfaParams cfa;
    cfa.loadings = matrix_from_json(j.at("loadings"));
    cfa.factor_corr = matrix_from_json(j.at("factor_corr"));
    cfa.uniquenesses = vector_from_json(j.at("uniquenesses"));
    cfa.factor_means = vector_from_json(j.at("factor_means"));
    cfa.means_fixed_zero = get_or(j, "means_fixed_zero", false);
    return cfa;
}

EfaParams efa_from_json(const json& j) {
    EfaParams efa;
    efa.loadings = matrix_from_json(j.at("loadings"));
    efa.uniquenesses = vector_from_json(j.at("uniquenesses"));
    efa.factor_means = vector_from_json(j.at("factor_means"));
    return efa;
}

MixtureReg reg_from_json(const json& j) {
    MixtureReg reg;
    reg.beta = vector_from_json(j.at("beta"));
    reg.covariate_names = get_or(j, "covariate_names", std::vector<std::string>{});
    return reg;
}

json params_to_json(const MixtureParams& params, const FactorStructure& structure) {
    return {{"structure", to_json(structure)},
            {"means_fixed_zero", params.cfa.means_fixed_zero},
            {"cfa", to_json(params.cfa)},
            {"efa", to_json(params.efa)},
            {"reg", to_json(params.reg)}};
}

MixtureParams params_from_json(const json& j) {
    MixtureParams params;
    params.cfa = cfa_from_json(j.at("cfa"));
    params.cfa.means_fixed_zero = get_or(j, "means_fixed_zero", params.cfa.means_fixed_zero);
    params.efa = efa_from_json(j.at("efa"));
    params.reg = reg_from_json(j.at("reg"));
    if (j.contains("structure")) {
        validate(params, structure_from_json(j));
    }
    return params;
}

json to_json(const FitResult& fit, const ModelSpec& spec) {
    json out = params_to_json(fit.params, spec.structure);
    out["k"] = spec.k;
    out["loglik"] = fit.loglik();
    out["loglik_trace"] = fit.loglik_trace;
    out["converged"] = fit.converged;
    out["n_iter"] = fit.n_iter;
    out["n_params"] = fit.n_params;
    out["entropy_raw"] = fit.entropy_raw;
    out["best_start"] = fit.best_start;
    out["start_failures"] = fit.start_failures;
    out["beta_separated"] = fit.beta_separated;
    out["beta_ridged"] = fit.beta_ridged;
    out["assignments"] = to_json(fit.assignments);
    out["responsibilities"] = to_json(fit.responsibilities);
    return out;
}

json to_json(const EmOptions& opts) {
    return {{"max_iter", opts.max_iter},
            {"tol", opts.tol},
            {"n_starts", opts.n_starts},
            {"ridge", opts.ridge},
            {"uniqueness_floor", opts.uniqueness_floor},
            {"seed", opts.seed},
            {"jitter_sd", opts.jitter_sd},
            {"alternate_orientation", opts.alternate_orientation},
            {"min_component_weight", opts.min_component_weight}};
}

EmOptions em_options_from_json(const json& j, EmOptions base) {
    base.max_iter = get_or(j, "max_iter", base.max_iter);
    base.tol = get_or(j, "tol", base.tol);
    base.n_starts = get_or(j, "n_starts", base.n_starts);
    base.ridge = get_or(j, "ridge", base.ridge);
    base.uniqueness_floor = get_or(j, "uniqueness_floor", base.uniqueness_floor);
    base.seed = get_or(j, "seed", base.seed);
    base.jitter_sd = get_or(j, "jitter_sd", base.jitter_sd);
    base.alternate_orientation = get_or(j, "alternate_orientation", base.alternate_orientation);
    base.min_component_weight = get_or(j, "min_component_weight", base.min_component_weight);
    validate(base);
    return base;
}

json to_json(const Study1Config& cfg) {
    return {{"n", cfg.n}, {"p", cfg.p}, {"pi", cfg.pi}, {"q", cfg.q},
            {"k", cfg.k}, {"c", cfg.c}, {"seed", cfg.seed}};
}

json to_json(const Study2Config& cfg) {
    return {{"n", cfg.n},         {"p", cfg.p},
            {"pi", cfg.pi},       {"gamma", cfg.gamma},
            {"delta", cfg.delta}, {"q", cfg.q},
            {"k", cfg.k},         {"categories", cfg.categories},
            {"kappa", cfg.kappa}, {"thresholds", cfg.thresholds},
            {"seed", cfg.seed}};
}

Study1Config study1_from_json(const json& j, Study1Config base) {
    base.n = get_or(j, "n", base.n);
    base.p = get_or(j, "p", base.p);
    base.pi = get_or(j, "pi", base.pi);
    base.q = get_or(j, "q", base.q);
    base.k = get_or(j, "k", base.k);
    base.c = get_or(j, "c", base.c);
    base.seed = get_or(j, "seed", base.seed);
    validate(base);
    return base;
}

Study2Config study2_from_json(const json& j, Study2Config base) {
    base.n = get_or(j, "n", base.n);
    base.p = get_or(j, "p", base.p);
    base.pi = get_or(j, "pi", base.pi);
    base.gamma = get_or(j, "gamma", base.gamma);
    base.delta = get_or(j, "delta", base.delta);
    base.q = get_or(j, "q", base.q);
    base.k = get_or(j, "k", base.k);
    base.categories = get_or(j, "categories", base.categories);
    base.kappa = get_or(j, "kappa", base.kappa);
    base.thresholds = get_or(j, "thresholds", base.thresholds);
    base.seed = get_or(j, "seed", base.seed);
    validate(base);
    return base;
}

json to_json(const SimulatedData& sim) {
    json out = {{"structure", to_json(sim.structure)}, {"cfa", to_json(sim.cfa)}, {"reg", to_json(sim.reg)}};
    out["efa"] = sim.efa ? to_json(*sim.efa) : json(nullptr);
    return out;
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

std::string bootstrap_csv(const BootstrapResult& result) {
    std::ostringstream out;
    out << "block,row,col,estimate,se,n_effective_replicates\n";
    for (const auto& e : result.table) {
        out << e.block << ',' << e.row << ',' << e.col << ',' << format_double(e.estimate) << ','
            << format_double(e.se) << ',' << e.n_effective << "\n";
    }
    return out.str();
}

}  // namespace aberrant_mix
