#include <benchmark/benchmark.h>

#include <vector>

#include "qtl/autonet.hpp"
#include "qtl/dressed.hpp"
#include "qtl/rng.hpp"
#include "qtl/tensor.hpp"
#include "qtl/vqc.hpp"

using namespace qtl;

static Tensor random_batch(std::vector<std::size_t> shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (double& v : t.v) v = rng.uniform(-1.0, 1.0);
  return t;
}

static void BM_Cm2Forward(benchmark::State& state) {
  autonet::LayerGraph g = autonet::preset("CM-2");
  g.init_params(1);
  const Tensor x = random_batch({2, 1, 200, 200}, 2);
  for (auto _ : state) {
    Tensor probs = autonet::forward(g, x, /*train=*/false);
    benchmark::DoNotOptimize(probs.v.data());
  }
  state.SetItemsProcessed(state.iterations() * 2);
}
BENCHMARK(BM_Cm2Forward)->Unit(benchmark::kMillisecond);

static void BM_TinyTrainStep(benchmark::State& state) {
  autonet::LayerGraph g = autonet::preset("tiny");
  g.init_params(1);
  const Tensor x = random_batch({16, 1, 32, 32}, 2);
  const std::vector<int> labels{0, 1, 0, 1, 0, 1, 0, 1,
                                0, 1, 0, 1, 0, 1, 0, 1};
  autonet::AdamState adam({.lr = 1e-3}, autonet::trainable_sizes(g));
  Rng rng(3);
  for (auto _ : state) {
    autonet::Tape tape;
    const Tensor probs = autonet::forward(g, x, /*train=*/true, &tape, &rng);
    Tensor grad;
    double loss = autonet::batch_cross_entropy(probs, labels, &grad);
    benchmark::DoNotOptimize(loss);
    const autonet::Gradients grads = autonet::backward(g, tape, grad);
    autonet::adam_step(g, grads, adam);
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_TinyTrainStep)->Unit(benchmark::kMillisecond);

static void BM_DqnForwardBackward(benchmark::State& state) {
  const int n_ip = static_cast<int>(state.range(0));
  dressed::DressedQuantumNet net =
      dressed::make_dressed(n_ip, vqc::VqcConfig{}, 2, 1);
  Rng rng(2);
  std::vector<double> x(n_ip);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  const std::vector<double> upstream{1.0, -1.0};
  for (auto _ : state) {
    dressed::DqnTape tape;
    std::vector<double> probs = dressed::dqn_forward(net, x, &tape);
    benchmark::DoNotOptimize(probs.data());
    dressed::DqnGradients grads = dressed::dqn_backward(net, tape, upstream);
    benchmark::DoNotOptimize(grads.pre_w.data());
  }
}
BENCHMARK(BM_DqnForwardBackward)->Arg(64)->Arg(512)->Arg(2048);

BENCHMARK_MAIN();
