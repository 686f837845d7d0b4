#include "aberrant_mix/io.hpp"
#include "aberrant_mix/metrics.hpp"
#include "aberrant_mix_tools/harness.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace am = aberrant_mix;
namespace cli = aberrant_mix::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "aberrant_mix_cli_tests" / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int count_lines(const fs::path& path) {
    const std::string text = slurp(path);
    return static_cast<int>(std::count(text.begin(), text.end(), '\n'));
}

cli::RunConfig simulate1_config(const fs::path& out) {
    cli::RunConfig c;
    c.command = "simulate1";
    c.seed = 17;
    c.n = 400;
    c.p = 12;
    c.q = 2;
    c.k = 2;
    c.c = 1;
    c.pi = 0.6;
    c.out = out;
    return c;
}

cli::RunConfig fit_config(const fs::path& sim, const fs::path& out) {
    cli::RunConfig c;
    c.command = "fit";
    c.data = sim / "responses.csv";
    c.design = sim / "design.csv";
    c.truth = sim / "truth.csv";
    c.structure = sim / "structure.json";
    c.k = 2;
    c.starts = 3;
    c.seed = 5;
    c.out = out;
    return c;
}

}  // namespace

TEST(Cli, SimulateThenFit) {
    const fs::path root = fresh_dir("fit");
    ASSERT_EQ(cli::run(simulate1_config(root / "sim")), 0);
    for (const char* f : {"responses.csv", "design.csv", "truth.csv", "structure.json", "truth.json", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(root / "sim" / f)) << f;
    }
    ASSERT_EQ(cli::run(fit_config(root / "sim", root / "fit")), 0);
    EXPECT_TRUE(fs::exists(root / "fit" / "fit.json"));
    EXPECT_TRUE(fs::exists(root / "fit" / "classification.csv"));
    EXPECT_TRUE(fs::exists(root / "fit" / "metrics.csv"));
    EXPECT_FALSE(fs::exists(root / "fit" / "error.json"));
    EXPECT_EQ(count_lines(root / "fit" / "classification.csv"), 401);

    const am::json manifest = am::read_json(root / "fit" / "manifest.json");
    EXPECT_EQ(manifest.at("status"), "ok");
    EXPECT_EQ(manifest.at("command"), "fit");
    EXPECT_EQ(manifest.at("seed"), 5);
    EXPECT_TRUE(manifest.at("versions").contains("eigen"));
    EXPECT_TRUE(manifest.contains("wall_time_seconds"));
    EXPECT_EQ(manifest.at("config").at("k"), 2);

    const am::json fit = am::read_json(root / "fit" / "fit.json");
    EXPECT_TRUE(fit.contains("loglik_trace"));
    EXPECT_EQ(fit.at("assignments").size(), 400U);
    EXPECT_EQ(fit.at("responsibilities").size(), 400U);
}

TEST(Cli, SelectEmitsOneRowPerCandidate) {
    const fs::path root = fresh_dir("select");
    ASSERT_EQ(cli::run(simulate1_config(root / "sim")), 0);
    cli::RunConfig c = fit_config(root / "sim", root / "select");
    c.command = "select";
    c.k.reset();
    c.k_grid = {1, 2};
    ASSERT_EQ(cli::run(c), 0);
    EXPECT_EQ(count_lines(root / "select" / "scan.csv"), 3);
    const std::string header = slurp(root / "select" / "scan.csv").substr(0, 60);
    EXPECT_EQ(header.rfind("model,loglik,AIC,CAIC,BIC,ssBIC,CLC,ICL_BIC,H,", 0), 0U) << header;
    const am::json sel = am::read_json(root / "select" / "selection.json");
    EXPECT_EQ(sel.at("rule").get<std::string>().empty(), false);
    EXPECT_TRUE(sel.at("selected_k") == 1 || sel.at("selected_k") == 2);
}

TEST(Cli, ExtremeFakingPipeline) {
    const fs::path root = fresh_dir("pipeline");
    cli::RunConfig sim;
    sim.command = "simulate2";
    sim.seed = 2024;
    sim.gamma = 4.0;
    sim.delta = 1.5;
    sim.pi = 0.6;
    sim.p = 30;
    sim.n = 1000;
    sim.out = root / "sim";
    ASSERT_EQ(cli::run(sim), 0);

    cli::RunConfig fit;
    fit.command = "fit";
    fit.data = root / "sim" / "responses.csv";
    fit.structure = root / "sim" / "structure.json";
    fit.seed = 1;
    fit.out = root / "fit";
    ASSERT_EQ(cli::run(fit), 0);

    cli::RunConfig cls;
    cls.command = "classify";
    cls.data = root / "sim" / "responses.csv";
    cls.truth = root / "sim" / "truth.csv";
    cls.params = root / "fit" / "fit.json";
    cls.out = root / "classify";
    ASSERT_EQ(cli::run(cls), 0);
    const am::json manifest = am::read_json(root / "classify" / "manifest.json");
    EXPECT_GE(manifest.at("summary").at("metrics").at("BACC").get<double>(), 0.95);
}

TEST(Cli, CorrByClassAndBaseline) {
    const fs::path root = fresh_dir("corr");
    ASSERT_EQ(cli::run(simulate1_config(root / "sim")), 0);
    ASSERT_EQ(cli::run(fit_config(root / "sim", root / "fit")), 0);
    cli::RunConfig corr;
    corr.command = "corr-by-class";
    corr.data = root / "sim" / "responses.csv";
    corr.assignments = root / "fit" / "classification.csv";
    corr.out = root / "corr";
    ASSERT_EQ(cli::run(corr), 0);
    const am::CsvTable c = am::ingest_csv(root / "corr" / "corr_cfa.csv", true);
    EXPECT_EQ(c.values.rows(), 12);
    EXPECT_TRUE((c.values.diagonal().array() == 1.0).all());

    cli::RunConfig base;
    base.command = "cfa-baseline";
    base.data = root / "sim" / "responses.csv";
    base.structure = root / "sim" / "structure.json";
    base.out = root / "baseline";
    ASSERT_EQ(cli::run(base), 0);
    EXPECT_TRUE(fs::exists(root / "baseline" / "fit_indices.csv"));
    EXPECT_TRUE(am::read_json(root / "baseline" / "baseline.json").at("indices").contains("CFI"));
}

TEST(Cli, BootstrapFromFit) {
    const fs::path root = fresh_dir("bootstrap");
    cli::RunConfig sim = simulate1_config(root / "sim");
    sim.k = 1;
    sim.q = 1;
    sim.p = 8;
    ASSERT_EQ(cli::run(sim), 0);
    cli::RunConfig fit = fit_config(root / "sim", root / "fit");
    fit.k = 1;
    ASSERT_EQ(cli::run(fit), 0);
    cli::RunConfig boot;
    boot.command = "bootstrap";
    boot.data = root / "sim" / "responses.csv";
    boot.design = root / "sim" / "design.csv";
    boot.params = root / "fit" / "fit.json";
    boot.seed = 3;
    boot.bootstrap_reps = 10;
    boot.out = root / "boot";
    ASSERT_EQ(cli::run(boot), 0) << slurp(root / "boot" / "error.json");
    const std::string csv = slurp(root / "boot" / "bootstrap.csv");
    EXPECT_EQ(csv.rfind("block,row,col,estimate,se,n_effective_replicates\n", 0), 0U);
}

TEST(Cli, ErrorsWriteStructuredRecord) {
    const fs::path root = fresh_dir("errors");
    cli::RunConfig sim = simulate1_config(root / "nosseed");
    sim.seed.reset();
    EXPECT_EQ(cli::run(sim), 2);
    const am::json err = am::read_json(root / "nosseed" / "error.json");
    EXPECT_EQ(err.at("status"), "error");
    EXPECT_EQ(err.at("exit_code"), 2);
    EXPECT_FALSE(fs::exists(root / "nosseed" / "manifest.json"));

    cli::RunConfig fit;
    fit.command = "fit";
    fit.data = root / "missing.csv";
    fit.out = root / "missing";
    EXPECT_EQ(cli::run(fit), 2);

    cli::RunConfig unknown;
    unknown.command = "explode";
    unknown.out = root / "unknown";
    EXPECT_EQ(cli::run(unknown), 2);
}

TEST(Cli, ModuleFailureReplacesStaleOutputs) {
    const fs::path root = fresh_dir("stale");
    ASSERT_EQ(cli::run(simulate1_config(root / "sim")), 0);
    ASSERT_EQ(cli::run(fit_config(root / "sim", root / "out")), 0);
    ASSERT_TRUE(fs::exists(root / "out" / "manifest.json"));
    // Every row in one class: the other class has no rows.
    {
        std::ofstream assigned(root / "assigned.csv");
        assigned << "assigned\n";
        for (int i = 0; i < 400; ++i) assigned << "1\n";
    }
    cli::RunConfig corr;
    corr.command = "corr-by-class";
    corr.data = root / "sim" / "responses.csv";
    corr.assignments = root / "assigned.csv";
    corr.out = root / "out";
    EXPECT_EQ(cli::run(corr), 1);
    EXPECT_FALSE(fs::exists(root / "out" / "manifest.json"));
    const am::json err = am::read_json(root / "out" / "error.json");
    EXPECT_EQ(err.at("error_type"), "InvalidArgument");
    EXPECT_NE(err.at("message").get<std::string>().find("class 0"), std::string::npos);
}

TEST(Cli, SameSeedSameBytes) {
    const fs::path root = fresh_dir("determinism");
    for (const char* run : {"a", "b"}) {
        ASSERT_EQ(cli::run(simulate1_config(root / run / "sim")), 0);
        ASSERT_EQ(cli::run(fit_config(root / run / "sim", root / run / "fit")), 0);
    }
    for (const char* f : {"sim/responses.csv", "sim/truth.json", "fit/fit.json", "fit/classification.csv",
                          "fit/metrics.csv"}) {
        EXPECT_EQ(slurp(root / "a" / f), slurp(root / "b" / f)) << f;
    }
}

TEST(Reports, EmptyScanIsHeaderOnly) {
    const std::string csv = cli::to_csv(cli::scan_table({}));
    EXPECT_EQ(csv, "model,loglik,AIC,CAIC,BIC,ssBIC,CLC,ICL_BIC,H,n_params,status\n");
}

TEST(Reports, JsonTableReparses) {
    cli::Table t{{"a", "b", "c"}, {{1.0 / 3.0, static_cast<long long>(7), std::string("x")}, {std::monostate{}, 2.5, std::string("y")}}, 6};
    const am::json j = am::json::parse(cli::to_json(t).dump());
    EXPECT_EQ(j.at(0).at("a").get<double>(), 1.0 / 3.0);
    EXPECT_EQ(j.at(0).at("b").get<long long>(), 7);
    EXPECT_TRUE(j.at(1).at("a").is_null());
    EXPECT_EQ(cli::to_csv(t), "a,b,c\n0.333333,7,x\n,2.500000,y\n");
}

TEST(Reports, MetricsTableColumns) {
    am::ClassMetrics m;
    m.counts.tp = 1;
    const cli::Table t = cli::metrics_table(m);
    EXPECT_EQ(t.columns, (std::vector<std::string>{"TP", "FP", "TN", "FN", "SE", "SP", "BACC", "MCC"}));
}

TEST(Reports, CovariateSubsets) {
    const auto subsets = cli::parse_covariate_subsets({"none", "x1,x2", "age"});
    ASSERT_EQ(subsets.size(), 3U);
    EXPECT_TRUE(subsets[0].empty());
    EXPECT_EQ(subsets[1], (std::vector<std::string>{"x1", "x2"}));
    EXPECT_EQ(subsets[2], std::vector<std::string>{"age"});
}
