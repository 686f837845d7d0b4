// Acceptance suite: one PASS/FAIL (or SKIP) line per criterion, nonzero exit
// on any FAIL. Every threshold and seed below is fixed.

#include "properties.hpp"

#include "aberrant_mix/diagnostics.hpp"
#include "aberrant_mix/em.hpp"
#include "aberrant_mix/io.hpp"
#include "aberrant_mix/metrics.hpp"
#include "aberrant_mix/selection.hpp"
#include "aberrant_mix/study.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace am = aberrant_mix;
namespace amt = aberrant_mix::testing;
namespace fs = std::filesystem;

namespace {

enum class Outcome { pass, fail, skip };

struct Verdict {
    Outcome outcome = Outcome::fail;
    std::string detail;
};

constexpr int kReps = 50;
constexpr int kStarts = 4;

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

am::StudyOptions study_options(bool standardize) {
    am::StudyOptions opts;
    opts.reps = kReps;
    opts.em.n_starts = kStarts;
    opts.standardize = standardize;
    return opts;
}

std::string counts(const am::StudySummary& s) {
    return "ok " + std::to_string(s.n_ok) + "/" + std::to_string(s.n_ok + s.n_failed);
}

am::Study2Config extreme(int n, int p, double pi, std::uint64_t seed) {
    am::Study2Config cfg;
    cfg.n = n;
    cfg.p = p;
    cfg.pi = pi;
    cfg.gamma = 4.0;
    cfg.delta = 1.5;
    cfg.seed = seed;
    return cfg;
}

Verdict criterion1() {
    const am::StudySummary s = am::summarize(am::run_study2(extreme(1000, 30, 0.60, 9101), study_options(true)));
    const bool ok = s.n_ok > 0 && s.bacc.mean >= 0.97 && s.mcc.mean >= 0.97;
    return {ok ? Outcome::pass : Outcome::fail,
            "mean BACC " + fmt(s.bacc.mean) + " (>= 0.97), mean MCC " + fmt(s.mcc.mean) + " (>= 0.97), " + counts(s)};
}

Verdict criterion2() {
    const am::StudySummary s = am::summarize(am::run_study2(extreme(250, 16, 0.60, 9102), study_options(true)));
    const bool ok = s.n_ok > 0 && s.bacc.mean >= 0.93;
    return {ok ? Outcome::pass : Outcome::fail, "mean BACC " + fmt(s.bacc.mean) + " (>= 0.93), " + counts(s)};
}

Verdict criterion3() {
    const am::StudySummary s = am::summarize(am::run_study2(extreme(1000, 16, 0.80, 9103), study_options(true)));
    const bool ok = s.n_ok > 0 && std::abs(s.lambda_bias.mean) <= 0.05 && s.theta_bias.mean >= -0.05 &&
                    s.theta_bias.mean <= 0.01 && s.mu_bias.mean <= -0.4;
    return {ok ? Outcome::pass : Outcome::fail,
            "Lambda bias " + fmt(s.lambda_bias.mean) + " (|.| <= 0.05), Theta bias " + fmt(s.theta_bias.mean) +
                " (in [-0.05, 0.01]), mu bias " + fmt(s.mu_bias.mean) + " (<= -0.4), " + counts(s)};
}

Verdict criterion4() {
    am::Study1Config a;
    a.pi = 0.60;
    a.k = 4;
    a.q = 1;
    a.c = 2;
    a.seed = 9104;
    am::Study1Config b;
    b.pi = 0.40;
    b.k = 2;
    b.q = 1;
    b.c = 1;
    b.seed = 9105;
    const am::StudySummary sa = am::summarize(am::run_study1(a, study_options(false)));
    const am::StudySummary sb = am::summarize(am::run_study1(b, study_options(false)));
    const bool ok = sa.n_ok > 0 && sb.n_ok > 0 && sa.bacc.mean >= 0.95 && sb.bacc.mean >= 0.85;
    return {ok ? Outcome::pass : Outcome::fail,
            "(pi .60, K 4, q 1, C 2) BACC " + fmt(sa.bacc.mean) + " (>= 0.95), " + counts(sa) +
                "; (pi .40, K 2, q 1, C 1) BACC " + fmt(sb.bacc.mean) + " (>= 0.85), " + counts(sb)};
}

Verdict criterion5() {
    const am::CriteriaReport r = am::criteria(-31202.9928, 180, 763, 0.3520);
    const bool ok = std::abs(r.clc - 62406.6896) <= 0.01 && std::abs((r.icl_bic - r.bic) - 0.7040) <= 1e-6 &&
                    std::abs(r.h - 0.9993) <= 5e-4 && std::abs(r.bic - 63600.5623) <= 1.0;
    return {ok ? Outcome::pass : Outcome::fail,
            "CLC " + fmt(r.clc) + ", ICL_BIC - BIC " + fmt(r.icl_bic - r.bic, 7) + ", H " + fmt(r.h) + ", BIC " +
                fmt(r.bic)};
}

// Expects responses.csv (763 x 42, header), structure.json, design.csv with
// an age column and truth.csv (1 = honest condition).
Verdict criterion6() {
    const char* env = std::getenv("ABERRANT_MIX_CASE1_DIR");
    if (!env || !fs::exists(fs::path(env) / "responses.csv")) {
        return {Outcome::skip, "set ABERRANT_MIX_CASE1_DIR to a directory with the case-study files"};
    }
    const fs::path dir(env);
    const am::FactorStructure structure = am::structure_from_json(am::read_json(dir / "structure.json"));
    const am::Dataset data = am::load_dataset(dir / "responses.csv", dir / "design.csv", dir / "truth.csv");
    const am::CfaBaseline base = am::fit_cfa_single(data, structure);

    am::EmOptions opts;
    opts.seed = 9106;
    const am::FitResult fit = am::fit_em(data, am::ModelSpec{structure, 1, false}, opts);
    const am::ClassMetrics m = am::score_classification(*data.truth, fit.assignments);
    const bool ok = std::abs(base.indices.cfi - 0.543) <= 0.03 && std::abs(base.indices.rmsea - 0.117) <= 0.01 &&
                    m.se == 1.0 && m.sp >= 0.88;
    return {ok ? Outcome::pass : Outcome::fail,
            "CFI " + fmt(base.indices.cfi) + " (0.543 +- 0.03), RMSEA " + fmt(base.indices.rmsea) +
                " (0.117 +- 0.01), SE " + fmt(m.se) + " (= 1), SP " + fmt(m.sp) + " (>= 0.88)"};
}

Verdict criterion7(const fs::path& scratch) {
    const std::vector<amt::PropertyCheck> checks = amt::property_suite(scratch / "properties", 9107);
    bool ok = !checks.empty();
    std::string detail;
    for (const auto& c : checks) {
        ok = ok && c.pass;
        detail += "\n    " + std::string(c.pass ? "ok   " : "FAIL ") + c.name + ": " + c.detail;
    }
    return {ok ? Outcome::pass : Outcome::fail, std::to_string(checks.size()) + " properties" + detail};
}

Verdict criterion8() {
    constexpr int reps = 25;
    int hits = 0;
    std::string picks;
    for (int r = 0; r < reps; ++r) {
        am::Study1Config cfg;
        cfg.k = 2;
        cfg.pi = 0.60;
        cfg.seed = am::replication_seed(9108, r);
        const am::SimulatedData sim = am::gen_study1(cfg);
        am::ScanOptions opts;
        opts.em.n_starts = kStarts;
        opts.em.seed = cfg.seed;
        const std::vector<am::ScanRow> rows = am::scan(sim.data, sim.structure, {1, 2, 3}, {{}}, opts);
        const am::Selection sel = am::select_model(rows, opts.entropy_band);
        const int k = sel.selected ? rows[*sel.selected].candidate.k : 0;
        hits += k == 2;
        picks += std::to_string(k);
    }
    const bool ok = hits * 100 >= 80 * reps;
    return {ok ? Outcome::pass : Outcome::fail,
            "K = 2 selected in " + std::to_string(hits) + "/" + std::to_string(reps) + " (>= 80%), picks " + picks};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria 1-8"};
    fs::path scratch = fs::temp_directory_path() / "aberrant_mix_acceptance";
    std::vector<int> only;
    app.add_option("--scratch", scratch, "Directory for intermediate files")->capture_default_str();
    app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 8));
    CLI11_PARSE(app, argc, argv);

    fs::create_directories(scratch);
    const std::set<int> selected(only.begin(), only.end());
    const std::vector<std::function<Verdict()>> criteria{
        criterion1, criterion2, criterion3, criterion4, criterion5, criterion6,
        [&] { return criterion7(scratch); }, criterion8};

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i]();
        } catch (const std::exception& e) {
            v = {Outcome::fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* tag = v.outcome == Outcome::pass ? "PASS" : v.outcome == Outcome::skip ? "SKIP" : "FAIL";
        failures += v.outcome == Outcome::fail;
        std::cout << tag << " criterion " << id << ": " << v.detail << " [" << fmt(secs, 1) << " s]" << std::endl;
    }
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
