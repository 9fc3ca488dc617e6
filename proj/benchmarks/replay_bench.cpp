#include <random>

#include <benchmark/benchmark.h>

#include "pdm/replay.hpp"

namespace {

void BM_SumTreeSet(benchmark::State& state) {
    pdm::replay::SumTree tree(static_cast<std::size_t>(state.range(0)));
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto _ : state) {
        tree.set(gen() % tree.capacity(), unit(gen));
    }
}
BENCHMARK(BM_SumTreeSet)->Range(1 << 6, 1 << 20);

void BM_SumTreeFind(benchmark::State& state) {
    pdm::replay::SumTree tree(static_cast<std::size_t>(state.range(0)));
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < tree.capacity(); ++i) tree.set(i, unit(gen));
    for (auto _ : state) {
        benchmark::DoNotOptimize(tree.find_prefix(unit(gen) * tree.total()));
    }
}
BENCHMARK(BM_SumTreeFind)->Range(1 << 6, 1 << 20);

void BM_PrioritizedSample(benchmark::State& state) {
    pdm::replay::PERConfig cfg;
    cfg.capacity = 1 << 16;
    pdm::replay::PrioritizedReplay buffer(cfg);
    for (std::size_t i = 0; i < cfg.capacity; ++i) {
        pdm::replay::Transition t;
        t.state = Eigen::VectorXd::Zero(1);
        t.next_state = t.state;
        buffer.push(std::move(t));
    }
    pdm::Rng rng(3);
    const auto batch = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(buffer.sample(batch, 0, rng));
    }
}
BENCHMARK(BM_PrioritizedSample)->Arg(32)->Arg(128);

}  // namespace
