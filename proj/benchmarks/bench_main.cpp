#include "aberrant_mix/em.hpp"
#include "aberrant_mix/model.hpp"
#include "aberrant_mix/simulation.hpp"

#include <benchmark/benchmark.h>

namespace am = aberrant_mix;

namespace {

am::SimulatedData study1(int n, int p) {
    am::Study1Config cfg;
    cfg.n = n;
    cfg.p = p;
    cfg.seed = 11;
    return am::gen_study1(cfg);
}

void BM_MixtureLoglik(benchmark::State& state) {
    const am::SimulatedData sim = study1(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const am::MixtureParams params{sim.cfa, *sim.efa, sim.reg};
    for (auto _ : state) benchmark::DoNotOptimize(am::mixture_loglik(sim.data, params));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MixtureLoglik)->Args({1000, 30})->Args({5000, 30})->Args({1000, 60});

void BM_EStep(benchmark::State& state) {
    const am::SimulatedData sim = study1(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const am::MixtureParams params{sim.cfa, *sim.efa, sim.reg};
    for (auto _ : state) benchmark::DoNotOptimize(am::e_step(sim.data, params));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EStep)->Args({1000, 30})->Args({5000, 30});

void BM_FitEmSingleStart(benchmark::State& state) {
    const am::SimulatedData sim = study1(1000, 30);
    const am::ModelSpec spec{sim.structure, 2, false};
    am::EmOptions opts;
    opts.n_starts = 1;
    opts.seed = 3;
    for (auto _ : state) benchmark::DoNotOptimize(am::fit_em(sim.data, spec, opts));
}
BENCHMARK(BM_FitEmSingleStart)->Unit(benchmark::kMillisecond);

void BM_Study2Generate(benchmark::State& state) {
    am::Study2Config cfg;
    cfg.n = 1000;
    cfg.p = 30;
    cfg.seed = 5;
    for (auto _ : state) benchmark::DoNotOptimize(am::gen_study2(cfg));
}
BENCHMARK(BM_Study2Generate)->Unit(benchmark::kMillisecond);

void BM_SgrMatrix(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(am::sgr_replacement_matrix(11, 4.0, 1.5, 1.0));
}
BENCHMARK(BM_SgrMatrix);

}  // namespace

BENCHMARK_MAIN();
