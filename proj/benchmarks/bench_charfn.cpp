#include <benchmark/benchmark.h>

#include <vector>

#include "sdelab/charfn.hpp"
#include "sdelab/parallel.hpp"
#include "sdelab/rng.hpp"

namespace {

using namespace sdelab;

void BM_LocalizedCharFn(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  std::vector<double> samples(n);
  for (std::int64_t i = 0; i < n; ++i)
    samples[i] = normal_draw(3, 0, static_cast<std::uint64_t>(i));
  std::vector<double> thetas;
  for (double th = 0.0; th <= 8.0; th += 0.25) thetas.push_back(th);
  set_workers(1);
  for (auto _ : state) {
    const CharFnTable t = localized_charfn(samples, thetas, 0.0, 6.0, 0.0, 1.0);
    benchmark::DoNotOptimize(t.re.data());
  }
  state.SetItemsProcessed(state.iterations() * n * thetas.size());
}
BENCHMARK(BM_LocalizedCharFn)->Arg(1 << 14)->Arg(1 << 17);

}  // namespace
