// Serial reference path vs OpenMP ensemble kernel, same trajectories.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "pspde/harness.hpp"

using namespace pspde;

namespace {

void run(benchmark::State& state, Execution execution) {
  const auto space = SpectralSpace::finite_difference_modes(static_cast<std::size_t>(state.range(0)));
  const auto nl = Nonlinearity::cosine();
  const EnsembleProblem problem{space, nl, TestFunction(TestFunctionKind::ExpNorm), 2.0};
  const auto scheme = SchemeSpec::leimkuhler_matthews(0.0625);
  const std::uint64_t samples = 2000;
  for (auto _ : state) {
    auto v = trajectory_observables(problem, scheme, {samples, 0, 0, execution});
    benchmark::DoNotOptimize(v.data());
  }
  const auto steps = samples * steps_for_horizon(problem.T, scheme.dt);
  state.counters["steps/s"] =
      benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsIterationInvariantRate);
  state.counters["threads"] = execution == Execution::Parallel ? omp_get_max_threads() : 1;
}

void BM_Serial(benchmark::State& state) { run(state, Execution::Serial); }
void BM_Parallel(benchmark::State& state) { run(state, Execution::Parallel); }

}  // namespace

BENCHMARK(BM_Serial)->Arg(9)->Arg(49)->Arg(255)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Parallel)->Arg(9)->Arg(49)->Arg(255)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
