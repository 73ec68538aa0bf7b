// Serial vs OpenMP timings for the data-parallel kernels and one batch.

#include <benchmark/benchmark.h>

#include "oal/harness.hpp"

using namespace oal;

namespace {

const World& bench_world() {
  static const World world = [] {
    const auto c = benchmark_config(1);
    return make_world(load_corpus(c.corpus), c);
  }();
  return world;
}

// A snapshot with every predicate labeled on 60 regions.
const AgentState& labeled_agent() {
  static const AgentState agent = [] {
    const auto& w = bench_world();
    AgentState a;
    SeedStream s(5);
    for (std::size_t p = 0; p < 24; ++p) {
      const std::string name = (p < 10 ? "p0" : "p") + std::to_string(p);
      auto& m = a.models[name];
      m.predicate = name;
      for (int i = 0; i < 60; ++i) {
        const RegionId r{std::uint32_t(s.index(w.corpus.size()))};
        if (!m.is_labeled(r)) m.add_label(r, label_from_bool(w.corpus[r].has(name)));
      }
    }
    return a;
  }();
  return agent;
}

void density(benchmark::State& state, kernels::Execution exec) {
  const auto& w = bench_world();
  const DensityConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::build_density_index(w.corpus, config, exec));
}

void refresh(benchmark::State& state, kernels::Execution exec) {
  const auto& w = bench_world();
  const auto names = labeled_agent().predicates();
  for (auto _ : state) {
    auto models = labeled_agent().models;
    kernels::refresh_models(models, names, w.corpus, ClassifierConfig{}, exec);
    benchmark::DoNotOptimize(models);
  }
}

void batch(benchmark::State& state, kernels::Execution exec) {
  const auto& w = bench_world();
  auto config = benchmark_config(1);
  auto agent = labeled_agent();
  const auto names = agent.predicates();
  kernels::refresh_models(agent.models, names, w.corpus, config.env.classifier);
  BatchSpec spec;
  spec.phase = Phase::Train;
  spec.acting = PolicyKind::Learned;
  for (auto _ : state)
    benchmark::DoNotOptimize(run_batch(w, agent, initial_params(config), spec, config, exec));
}

}  // namespace

BENCHMARK_CAPTURE(density, serial, kernels::Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(density, parallel, kernels::Execution::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(refresh, serial, kernels::Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(refresh, parallel, kernels::Execution::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(batch, serial, kernels::Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(batch, parallel, kernels::Execution::Parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
