// Serial reference kernels against their OpenMP counterparts on one fixture.

#include <benchmark/benchmark.h>

#include "navee/executor.hpp"
#include "navee/fixtures.hpp"
#include "navee/profiler.hpp"

namespace {

const navee::Fixture& fixture() {
  static const navee::Fixture f = [] {
    navee::SyntheticFixtureSpec spec;
    spec.model.hidden_dim = 128;
    spec.model.num_layers = 16;
    spec.model.num_classes = 4;
    spec.model.seed = 11;
    spec.model.planted_depths = {{"near", 5}, {"far", 12}};
    spec.model.overthink_rate = 0.1;
    spec.samples_per_task = 128;
    return navee::gen_synthetic(spec);
  }();
  return f;
}

const std::vector<navee::Sample>& far_samples() {
  static const auto samples = navee::partition_by_task(fixture().dataset).at("far");
  return samples;
}

void BM_ProfileSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(navee::layerwise_accuracy_serial(f.model, far_samples(), "far"));
}

void BM_ProfileParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(navee::layerwise_accuracy(f.model, far_samples(), "far"));
}

void BM_BatchRunSerial(benchmark::State& state) {
  const auto& f = fixture();
  const navee::ExitStrategy s = navee::ConfidenceThreshold{0.9, 1};
  for (auto _ : state) benchmark::DoNotOptimize(navee::batch_run_serial(f.model, f.dataset, s));
}

void BM_BatchRunParallel(benchmark::State& state) {
  const auto& f = fixture();
  const navee::ExitStrategy s = navee::ConfidenceThreshold{0.9, 1};
  for (auto _ : state) benchmark::DoNotOptimize(navee::batch_run(f.model, f.dataset, s));
}

}  // namespace

BENCHMARK(BM_ProfileSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProfileParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchRunSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchRunParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
