#include <benchmark/benchmark.h>

#include "pdm/cmapss.hpp"
#include "pdm/env.hpp"

namespace {

void BM_SyntheticStep(benchmark::State& state) {
    pdm::env::SyntheticEnv env(pdm::env::SyntheticEnvConfig{}, 1);
    env.reset();
    int k = 0;
    for (auto _ : state) {
        auto out = env.step(++k % 7 == 0 ? 1 : 0);
        if (out.done) env.reset();
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_SyntheticStep);

void BM_DatasetStep(benchmark::State& state) {
    pdm::env::DatasetEnvConfig cfg;
    cfg.trajectories = pdm::cmapss::synth_generate(pdm::cmapss::SynthConfig{}, 1);
    pdm::env::DatasetEnv env(cfg, 2);
    env.reset();
    for (auto _ : state) {
        auto out = env.step(pdm::env::DatasetEnv::kHold);
        if (out.done) env.reset();
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_DatasetStep);

}  // namespace
