#include <benchmark/benchmark.h>

#include <vector>

#include "embedhom/corrector.hpp"
#include "embedhom/kernels.hpp"

using namespace embedhom;

namespace {

const DiscreteSystem& system_for(int cpu) {
  static std::vector<std::pair<int, DiscreteSystem>> cache;
  for (auto& [c, s] : cache) {
    if (c == cpu) return s;
  }
  const EllipticityBounds b(1.0, 4.0);
  const auto field = CoefficientField::checkerboard(2, 1.0, 4.0, b);
  cache.emplace_back(cpu, assemble(field, SymMatrix::scalar(2, 2.0), Grid::make(2, 16.0, cpu, 4.0)));
  return cache.back().second;
}

void BM_apply(benchmark::State& st) {
  const auto& sys = system_for(static_cast<int>(st.range(0)));
  const Backend be = st.range(1) == 0 ? Backend::serial : Backend::omp;
  std::vector<double> v(sys.size(), 1.0), y(sys.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 17);
  for (auto _ : st) {
    kernels::apply(be, sys.op, v, y);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(sys.size()));
}

void BM_dot(benchmark::State& st) {
  const std::size_t n = static_cast<std::size_t>(st.range(0)) * st.range(0);
  const Backend be = st.range(1) == 0 ? Backend::serial : Backend::omp;
  std::vector<double> a(n, 0.5), b(n, 2.0);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::dot(be, a, b));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(n));
}

void BM_solve(benchmark::State& st) {
  const auto& sys = system_for(static_cast<int>(st.range(0)));
  SolverOptions opts;
  opts.backend = st.range(1) == 0 ? Backend::serial : Backend::omp;
  const double p[2] = {1.0, 0.0};
  for (auto _ : st) benchmark::DoNotOptimize(solve_corrector(sys, p, opts).residual);
}

}  // namespace

// Args: cells per unit (box [-16,16]^2) or vector side, backend (0 serial, 1 omp).
BENCHMARK(BM_apply)->ArgsProduct({{8, 16, 32}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_dot)->ArgsProduct({{256, 1024, 2048}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_solve)->ArgsProduct({{8, 16}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
