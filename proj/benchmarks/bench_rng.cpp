#include <benchmark/benchmark.h>

#include "sdelab/rng.hpp"

namespace {

void BM_NormalDraw(benchmark::State& state) {
  std::uint64_t k = 0;
  double acc = 0.0;
  for (auto _ : state) {
    acc += sdelab::normal_draw(42, 1, k++);
  }
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_NormalDraw);

void BM_Philox(benchmark::State& state) {
  std::uint64_t k = 0;
  std::uint32_t acc = 0;
  for (auto _ : state) {
    acc ^= sdelab::philox(42, 1, k++).v[0];
  }
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Philox);

}  // namespace

BENCHMARK_MAIN();
