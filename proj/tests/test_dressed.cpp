#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qtl/dressed.hpp"
#include "qtl/error.hpp"
#include "qtl/rng.hpp"

using namespace qtl;

namespace {

vqc::VqcConfig tiny_vqc() {
  vqc::VqcConfig c;
  c.n_qubits = 3;
  c.n_layers = 2;
  return c;
}

std::vector<double> random_features(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> f(n);
  for (double& x : f) x = rng.uniform(-1.0, 1.0);
  return f;
}

double upstream_dot(const dressed::DressedQuantumNet& net,
                    std::span<const double> features,
                    std::span<const double> upstream) {
  const std::vector<double> probs = dressed::dqn_forward(net, features);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) acc += upstream[i] * probs[i];
  return acc;
}

}  // namespace

TEST_CASE("parameter count formula") {
  CHECK(dressed::dqn_param_count(2048, 5, 3, 2) == 10302);
  CHECK(dressed::dqn_param_count(64, 5, 3, 2) == 382);
  CHECK(dressed::dqn_param_count(128, 5, 3, 2) == 702);
  CHECK(dressed::dqn_param_count(8192, 5, 3, 2) == 41022);
  CHECK(dressed::dqn_param_count(3200, 5, 3, 2) == 16062);
  CHECK(dressed::dqn_param_count(144, 5, 3, 2) == 782);
  CHECK(dressed::dqn_param_count(1, 1, 1, 1) == 7);
  CHECK_THROWS_AS(dressed::dqn_param_count(0, 5, 3, 2), ConfigError);

  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n_ip = 1 + static_cast<int>(rng.uniform_int(300));
    const int n_q = 2 + static_cast<int>(rng.uniform_int(6));
    const int n_d = 1 + static_cast<int>(rng.uniform_int(4));
    const int n_c = 1 + static_cast<int>(rng.uniform_int(5));
    const std::size_t want = std::size_t(n_ip) * n_q + n_q + 3u * n_q * n_d +
                             std::size_t(n_q) * n_c + n_c;
    CHECK(dressed::dqn_param_count(n_ip, n_q, n_d, n_c) == want);

    vqc::VqcConfig c;
    c.n_qubits = n_q;
    c.n_layers = n_d;
    const dressed::DressedQuantumNet net = dressed::make_dressed(n_ip, c, n_c, 1);
    CHECK(net.param_count() == want);
    std::size_t block_sum = 0;
    for (std::size_t s : dressed::dqn_block_sizes(net)) block_sum += s;
    CHECK(block_sum == want);
  }
}

TEST_CASE("zero weights give the uniform distribution") {
  vqc::VqcConfig c = tiny_vqc();
  c.hadamard_prefix = false;
  dressed::DressedQuantumNet net = dressed::make_dressed(6, c, 4, 0);
  std::fill(net.pre_w.begin(), net.pre_w.end(), 0.0);
  std::fill(net.pre_b.begin(), net.pre_b.end(), 0.0);
  std::fill(net.vqc_weights.angles.begin(), net.vqc_weights.angles.end(), 0.0);
  std::fill(net.post_w.begin(), net.post_w.end(), 0.0);
  std::fill(net.post_b.begin(), net.post_b.end(), 0.0);

  const std::vector<double> probs =
      dressed::dqn_forward(net, random_features(6, 2));
  for (double p : probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("forward composes the published stages") {
  const vqc::VqcConfig c = tiny_vqc();
  const dressed::DressedQuantumNet net = dressed::make_dressed(7, c, 2, 11);
  const std::vector<double> x = random_features(7, 12);

  dressed::DqnTape tape;
  const std::vector<double> probs = dressed::dqn_forward(net, x, &tape);

  // Manual composition with the public pieces.
  std::vector<double> t(c.n_qubits);
  for (int q = 0; q < c.n_qubits; ++q) {
    double acc = net.pre_b[q];
    for (int i = 0; i < 7; ++i) acc += net.pre_w[q * 7 + i] * x[i];
    t[q] = std::tanh(acc);
  }
  const vqc::VqcForward vf = vqc::vqc_forward(c, net.vqc_weights, t);
  std::vector<double> logits(2);
  for (int o = 0; o < 2; ++o) {
    logits[o] = net.post_b[o];
    for (int q = 0; q < c.n_qubits; ++q)
      logits[o] += net.post_w[o * c.n_qubits + q] * vf.outputs[q];
  }
  const double mx = std::max(logits[0], logits[1]);
  double z = 0.0;
  std::vector<double> want(2);
  for (int o = 0; o < 2; ++o) z += (want[o] = std::exp(logits[o] - mx));
  for (int o = 0; o < 2; ++o) want[o] /= z;

  for (int o = 0; o < 2; ++o) CHECK(std::abs(probs[o] - want[o]) < 1e-12);

  // Tape contents mirror the stages.
  CHECK(tape.features == x);
  for (int q = 0; q < c.n_qubits; ++q) {
    CHECK(tape.tanh_out[q] == doctest::Approx(t[q]).epsilon(1e-15));
    CHECK(tape.tanh_out[q] > -1.0);
    CHECK(tape.tanh_out[q] < 1.0);
  }
  CHECK(tape.probs == probs);
}

TEST_CASE("probabilities are a distribution for random nets") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const dressed::DressedQuantumNet net =
        dressed::make_dressed(9, tiny_vqc(), 3, seed);
    const std::vector<double> probs =
        dressed::dqn_forward(net, random_features(9, seed + 100));
    double sum = 0.0;
    for (double p : probs) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("construction is seeded and validates shapes") {
  const dressed::DressedQuantumNet a = dressed::make_dressed(5, tiny_vqc(), 2, 3);
  const dressed::DressedQuantumNet b = dressed::make_dressed(5, tiny_vqc(), 2, 3);
  const dressed::DressedQuantumNet c = dressed::make_dressed(5, tiny_vqc(), 2, 4);
  CHECK(a.pre_w == b.pre_w);
  CHECK(a.vqc_weights.angles == b.vqc_weights.angles);
  CHECK(a.post_w == b.post_w);
  CHECK(a.pre_w != c.pre_w);
  for (double bb : a.pre_b) CHECK(bb == 0.0);
  for (double bb : a.post_b) CHECK(bb == 0.0);

  CHECK_THROWS_AS(dressed::make_dressed(0, tiny_vqc(), 2, 1), ConfigError);
  CHECK_THROWS_AS(dressed::make_dressed(5, tiny_vqc(), 0, 1), ConfigError);

  const std::vector<double> wrong{0.1, 0.2};
  CHECK_THROWS_AS(dressed::dqn_forward(a, wrong), ShapeError);
}

TEST_CASE("backward matches finite differences on every parameter") {
  const vqc::VqcConfig c = tiny_vqc();
  dressed::DressedQuantumNet net = dressed::make_dressed(6, c, 2, 17);
  const std::vector<double> x = random_features(6, 18);
  const std::vector<double> upstream = random_features(2, 19);

  dressed::DqnTape tape;
  dressed::dqn_forward(net, x, &tape);
  const dressed::DqnGradients grads = dressed::dqn_backward(net, tape, upstream);

  const auto params = dressed::dqn_params(net);
  const auto gviews = dressed::dqn_grads(grads);
  REQUIRE(params.size() == gviews.size());
  for (std::size_t blk = 0; blk < params.size(); ++blk) {
    REQUIRE(params[blk].size() == gviews[blk].size());
    for (std::size_t j = 0; j < params[blk].size(); ++j) {
      double& slot = params[blk][j];
      const double keep = slot;
      const double h = 1e-6;
      slot = keep + h;
      const double up = upstream_dot(net, x, upstream);
      slot = keep - h;
      const double dn = upstream_dot(net, x, upstream);
      slot = keep;
      const double fd = (up - dn) / (2.0 * h);
      CHECK(std::abs(gviews[blk][j] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }

  // Input-feature gradient.
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> xp = x;
    const double fd = oracles::central_diff(
        [&](double v) {
          xp[i] = v;
          return upstream_dot(net, xp, upstream);
        },
        x[i]);
    CHECK(std::abs(grads.input[i] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("parameter views cover the blocks in serialization order") {
  dressed::DressedQuantumNet net = dressed::make_dressed(4, tiny_vqc(), 2, 23);
  const auto sizes = dressed::dqn_block_sizes(net);
  REQUIRE(sizes.size() == 5);
  CHECK(sizes[0] == net.pre_w.size());
  CHECK(sizes[1] == net.pre_b.size());
  CHECK(sizes[2] == net.vqc_weights.angles.size());
  CHECK(sizes[3] == net.post_w.size());
  CHECK(sizes[4] == net.post_b.size());
  const auto views = dressed::dqn_params(net);
  REQUIRE(views.size() == 5);
  CHECK(views[0].data() == net.pre_w.data());
  CHECK(views[2].data() == net.vqc_weights.angles.data());
  CHECK(views[4].data() == net.post_b.data());
}
