#include <benchmark/benchmark.h>

#include "efl/experiments.hpp"
#include "efl/integrator.hpp"

using namespace efl;

namespace {

void BM_Rhs(benchmark::State& state) {
  const FlowConfig config = FlowConfig::from_dimension(4, CurvatureSign::Positive, 1.3);
  const FlowState s{0.5, 0.4, 0.3, 0.6, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(rhs(config, s));
}
BENCHMARK(BM_Rhs);

void BM_IntegrateEquilibrium(benchmark::State& state) {
  const FlowConfig config = FlowConfig::from_dimension(4, CurvatureSign::Positive, 1.3);
  IntegratorSettings settings;
  settings.t_max = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(integrate(config, settings));
}
BENCHMARK(BM_IntegrateEquilibrium)->Arg(10)->Arg(50)->Unit(benchmark::kMicrosecond);

void BM_IntegrateOracle(benchmark::State& state) {
  const FlowConfig config = FlowConfig::from_dimension(4, CurvatureSign::Positive, 1.3);
  for (auto _ : state) benchmark::DoNotOptimize(integrate_oracle(config, 1e-4, 10.0));
}
BENCHMARK(BM_IntegrateOracle)->Unit(benchmark::kMillisecond);

void BM_ClassifyRecollapse(benchmark::State& state) {
  const FlowConfig config = FlowConfig::from_dimension(4, CurvatureSign::Positive, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(classify(config));
}
BENCHMARK(BM_ClassifyRecollapse)->Unit(benchmark::kMicrosecond);

void BM_Bisect(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(bisect_critical(4, CurvatureSign::Positive, 1.4, 1.6, 1e-4, 50.0));
  }
}
BENCHMARK(BM_Bisect)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
