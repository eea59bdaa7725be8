#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "common.hpp"
#include "irkit/hird.hpp"

namespace {

void BM_LocalizedSolve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> r(n - 1), taps(n);
  for (auto& x : r) x = 0.01 + u(rng);
  for (auto& x : taps) x = 0.001 * u(rng);
  std::vector<std::size_t> pins;
  for (std::size_t k = 0; k < n; k += 20) pins.push_back(k);
  const std::vector<double> pin_v(pins.size(), 0.0);
  for (auto _ : state) {
    auto s = irkit::localized_solve({r, pins, pin_v, taps, {}});
    benchmark::DoNotOptimize(s.voltage.data());
  }
  state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_LocalizedSolve)->RangeMultiplier(4)->Range(64, 1 << 16)->Complexity(benchmark::oN);

void BM_Hird(benchmark::State& state) {
  const auto g = irkit::generate(bench::stripe_config(static_cast<double>(state.range(0))));
  const auto spec = irkit::GridSpec::for_graph(g, 1.0);
  for (auto _ : state) {
    auto h = irkit::run_hird(g, spec);
    benchmark::DoNotOptimize(h.maps.maps.data());
  }
  state.counters["nodes"] = static_cast<double>(g.node_count());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hird)->Arg(500)->Arg(1000)->Arg(2000)->Arg(4000)->Arg(8000)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oN);

void BM_HirdSquare(benchmark::State& state) {
  const auto g = irkit::generate(bench::square_config(static_cast<double>(state.range(0))));
  const auto spec = irkit::GridSpec::for_graph(g, 1.0);
  for (auto _ : state) {
    auto h = irkit::run_hird(g, spec);
    benchmark::DoNotOptimize(h.maps.maps.data());
  }
  state.counters["nodes"] = static_cast<double>(g.node_count());
}
BENCHMARK(BM_HirdSquare)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace
