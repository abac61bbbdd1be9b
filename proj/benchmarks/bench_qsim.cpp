#include <benchmark/benchmark.h>

#include "qtl/qsim.hpp"
#include "qtl/rng.hpp"

using namespace qtl;

static void BM_Apply1Q(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  qsim::StateVector s(n);
  const qsim::Gate1Q g = qsim::rot(0.3, 1.1, -0.7);
  int q = 0;
  for (auto _ : state) {
    s.apply_1q(q, g);
    q = (q + 1) % n;
  }
  state.SetItemsProcessed(state.iterations() << n);
}
BENCHMARK(BM_Apply1Q)->DenseRange(4, 12, 2);

static void BM_ApplyCnot(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  qsim::StateVector s(n);
  s.apply_1q(0, qsim::hadamard());
  int q = 0;
  for (auto _ : state) {
    s.apply_cnot(q, (q + 1) % n);
    q = (q + 1) % n;
  }
  state.SetItemsProcessed(state.iterations() << n);
}
BENCHMARK(BM_ApplyCnot)->DenseRange(4, 12, 2);

static void BM_ExpectZ(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  qsim::StateVector s(n);
  for (int q = 0; q < n; ++q) s.apply_1q(q, qsim::ry(0.4 * q));
  for (auto _ : state) {
    double z = s.expect_z(0);
    benchmark::DoNotOptimize(z);
  }
}
BENCHMARK(BM_ExpectZ)->DenseRange(4, 12, 2);
