#include <benchmark/benchmark.h>

#include "common.hpp"
#include "irkit/solver.hpp"

namespace {

void BM_SolveExact(benchmark::State& state) {
  const auto g = irkit::generate(bench::square_config(static_cast<double>(state.range(0))));
  for (auto _ : state) {
    auto v = irkit::solve_exact(g);
    benchmark::DoNotOptimize(v.volts.data());
  }
  state.counters["nodes"] = static_cast<double>(g.node_count());
  state.SetComplexityN(static_cast<std::int64_t>(g.node_count()));
}
BENCHMARK(BM_SolveExact)->Arg(50)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond)->Complexity();

void BM_GoldenMap(benchmark::State& state) {
  const auto g = irkit::generate(bench::square_config(static_cast<double>(state.range(0))));
  const auto v = irkit::solve_exact(g);
  const auto spec = irkit::GridSpec::for_graph(g, 1.0);
  for (auto _ : state) {
    auto m = irkit::golden_ir_map(v, g, spec);
    benchmark::DoNotOptimize(m.values().data());
  }
}
BENCHMARK(BM_GoldenMap)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
