#include <benchmark/benchmark.h>

#include "sdelab/mollifier.hpp"
#include "sdelab/parallel.hpp"
#include "sdelab/sde.hpp"

namespace {

using namespace sdelab;

CoefficientSpec bench_spec(const char* sigma, const char* b) {
  CoefficientSpec spec;
  spec.sigma = FnDescriptor::parse(sigma);
  spec.b = FnDescriptor::parse(b);
  spec.eps = 1.0;
  return spec;
}

void BM_EulerPaths(benchmark::State& state) {
  const CoefficientSpec spec = bench_spec("poly(1)", "poly()");
  const SimGrid grid{0.0, 1.0, state.range(0)};
  set_workers(1);
  for (auto _ : state) {
    const PathEnsemble ens = simulate_euler(spec, grid, 1024, 7);
    benchmark::DoNotOptimize(ens.x_terminal.data());
  }
  state.SetItemsProcessed(state.iterations() * 1024 * state.range(0));
}
BENCHMARK(BM_EulerPaths)->Arg(256)->Arg(1024);

void BM_EulerHolderDrift(benchmark::State& state) {
  const CoefficientSpec spec = bench_spec("poly(1)", "abspow(1,0,0.5)");
  const SimGrid grid{0.0, 1.0, 1024};
  set_workers(1);
  for (auto _ : state) {
    const PathEnsemble ens = simulate_euler(spec, grid, 256, 7);
    benchmark::DoNotOptimize(ens.x_terminal.data());
  }
  state.SetItemsProcessed(state.iterations() * 256 * 1024);
}
BENCHMARK(BM_EulerHolderDrift);

void BM_MollifierValue(benchmark::State& state) {
  const Mollifier phi(1.0, 1.5);
  double x = -2.5;
  double acc = 0.0;
  for (auto _ : state) {
    acc += phi.value(x);
    x += 0.001;
    if (x > 2.5) x = -2.5;
  }
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_MollifierValue);

}  // namespace
