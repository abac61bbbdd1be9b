#include <benchmark/benchmark.h>

#include <vector>

#include "qtl/rng.hpp"
#include "qtl/vqc.hpp"

using namespace qtl;

static vqc::VqcConfig config_for(int n_qubits, int n_layers) {
  vqc::VqcConfig c;
  c.n_qubits = n_qubits;
  c.n_layers = n_layers;
  c.ranges.clear();
  return c;
}

static std::vector<double> features_for(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> f(n);
  for (double& x : f) x = rng.uniform(-1.0, 1.0);
  return f;
}

static void BM_VqcForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const vqc::VqcConfig c = config_for(n, 3);
  const vqc::VqcWeights w = vqc::VqcWeights::random(c.n_layers, c.n_qubits, 1);
  const std::vector<double> f = features_for(n, 2);
  for (auto _ : state) {
    vqc::VqcForward out = vqc::vqc_forward(c, w, f);
    benchmark::DoNotOptimize(out.outputs.data());
  }
}
BENCHMARK(BM_VqcForward)->Arg(4)->Arg(5)->Arg(8)->Arg(10);

// One full parameter-shift sweep: two circuit evaluations per angle plus two
// per feature, so the 5-qubit 3-layer default costs 100 forwards.
static void BM_VqcGradients(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const vqc::VqcConfig c = config_for(n, 3);
  const vqc::VqcWeights w = vqc::VqcWeights::random(c.n_layers, c.n_qubits, 1);
  const std::vector<double> f = features_for(n, 2);
  const std::vector<double> upstream(n, 1.0);
  for (auto _ : state) {
    vqc::VqcGradients g = vqc::vqc_gradients(c, w, f, upstream);
    benchmark::DoNotOptimize(g.features.data());
  }
}
BENCHMARK(BM_VqcGradients)->Arg(4)->Arg(5)->Arg(8);
