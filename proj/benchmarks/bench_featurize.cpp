#include <benchmark/benchmark.h>

#include <random>

#include "common.hpp"
#include "irkit/featurize.hpp"
#include "irkit/hird.hpp"

namespace {

void BM_DistanceTransform(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  std::mt19937_64 rng(9);
  std::bernoulli_distribution occupied(0.01);
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(side) * side);
  for (auto& o : occ) o = occupied(rng);
  for (auto _ : state) {
    auto d = irkit::l1_distance_transform(occ, side, side);
    benchmark::DoNotOptimize(d);
  }
  state.SetComplexityN(static_cast<std::int64_t>(occ.size()));
}
BENCHMARK(BM_DistanceTransform)->RangeMultiplier(2)->Range(64, 1024)->Complexity(benchmark::oN);

void BM_AssembleFeatures(benchmark::State& state) {
  const auto g = irkit::generate(bench::square_config(static_cast<double>(state.range(0))));
  const auto spec = irkit::GridSpec::for_graph(g, 1.0);
  const auto h = irkit::run_hird(g, spec);
  for (auto _ : state) {
    auto f = irkit::assemble_features(g, spec, h.maps, true);
    benchmark::DoNotOptimize(f);
  }
  state.counters["nodes"] = static_cast<double>(g.node_count());
}
BENCHMARK(BM_AssembleFeatures)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
