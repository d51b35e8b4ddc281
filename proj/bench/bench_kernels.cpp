// Serial reference vs OpenMP kernels: Monte Carlo sweep and density grid.
// Thread count follows OMP_NUM_THREADS.

#include "cdf/grid.hpp"
#include "cdf/scenario.hpp"
#include "cdf/simulator.hpp"

#include <benchmark/benchmark.h>

#include <string>

namespace {

cdf::Scenario shipped(const std::string& name) {
  return cdf::load_scenario(std::string(CDF_SOURCE_DIR) + "/scenarios/" + name + ".scenario");
}

void sweep(benchmark::State& state, cdf::Execution exec) {
  const cdf::Scenario sc = shipped("duffing");
  const auto sys = sc.make_system();
  const auto df = sc.make_density();
  const auto cfg = sc.make_config();
  const auto runs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto report = cdf::monte_carlo_sweep(sys, df, cfg, *sc.sampler, runs, 42, exec);
    benchmark::DoNotOptimize(report.fraction_converged);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void grid(benchmark::State& state, cdf::Execution exec) {
  const cdf::Scenario sc = shipped("dubin");
  const auto df = sc.make_density();
  const cdf::GridSpec spec = sc.grid_spec(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto samples = cdf::density_grid(df, spec, exec);
    benchmark::DoNotOptimize(samples.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(sweep, serial, cdf::Execution::serial)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(sweep, parallel, cdf::Execution::parallel)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(grid, serial, cdf::Execution::serial)->Arg(101)->Arg(401)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(grid, parallel, cdf::Execution::parallel)->Arg(101)->Arg(401)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
