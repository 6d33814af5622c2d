#include <benchmark/benchmark.h>

#include <random>

#include "pmcmc/balancer.hpp"
#include "pmcmc/executor.hpp"
#include "pmcmc/filter.hpp"
#include "pmcmc/ibm.hpp"
#include "pmcmc/registry.hpp"

namespace pmcmc {
namespace {

void BM_ComputeRouting(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const auto W = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 gen(1);
  std::vector<std::uint64_t> counts(p, 0);
  std::uniform_int_distribution<std::size_t> any(0, p - 1);
  for (std::size_t k = 0; k < p; ++k) ++counts[any(gen)];
  const auto loc = block_locations(p, W);
  for (auto _ : state) benchmark::DoNotOptimize(compute_routing(counts, loc, W));
}
BENCHMARK(BM_ComputeRouting)->Args({64, 4})->Args({1024, 16})->Args({16384, 200});

void BM_ResampleMultinomial(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  std::vector<double> probs(p, 1.0 / static_cast<double>(p));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(resample_multinomial(probs, p, ++seed));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ResampleMultinomial)->Arg(128)->Arg(4096);

void BM_IbmStep(benchmark::State& state) {
  const ModelSpec spec{"ibm", state.range(0) ? "full" : "desk", {}, 0.0};
  const auto factory = make_factory(spec);
  auto model = factory();
  model->init(reference_parameters(spec), 1);
  ModelTime t = default_schedule(spec).front();
  model->advance(t);
  const Bytes start = model->save();
  for (auto _ : state) {
    model->advance(++t);
    if (t % 64 == 0) {
      state.PauseTiming();
      model->load(start);
      t = model->time();
      state.ResumeTiming();
    }
  }
  state.SetLabel(spec.preset);
}
BENCHMARK(BM_IbmStep)->Arg(0)->Arg(1);

void BM_ParticleFilter(benchmark::State& state) {
  const ModelSpec spec{"ibm", "desk", {}, 0.0};
  const auto factory = make_factory(spec);
  const auto theta = reference_parameters(spec);
  const auto series = synthesize(factory, theta, default_schedule(spec), 1);
  Executor ex(factory, {.workers = static_cast<std::size_t>(state.range(1))});
  std::uint64_t sample = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ex.run_particle_filter(theta, series, static_cast<std::size_t>(state.range(0)), {0, ++sample}));
  }
}
BENCHMARK(BM_ParticleFilter)->Args({128, 1})->Args({128, 4})->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace pmcmc

BENCHMARK_MAIN();
