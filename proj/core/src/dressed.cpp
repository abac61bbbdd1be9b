#include "qtl/dressed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qtl/error.hpp"
#include "qtl/rng.hpp"

namespace qtl::dressed {

namespace {

void dense_apply(std::span<const double> w, std::span<const double> b,
                 std::span<const double> x, std::span<double> y) {
  const std::size_t out = b.size(), in = x.size();
  for (std::size_t o = 0; o < out; ++o) {
    double acc = b[o];
    const double* row = w.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

void check_net(const DressedQuantumNet& net) {
  net.vqc_config.validate();
  const std::size_t nq = net.vqc_config.n_qubits;
  if (net.n_inputs < 1 || net.n_classes < 1) {
    throw ConfigError("dressed net needs positive input and class counts");
  }
  if (net.pre_w.size() != nq * net.n_inputs || net.pre_b.size() != nq ||
      net.post_w.size() != static_cast<std::size_t>(net.n_classes) * nq ||
      net.post_b.size() != static_cast<std::size_t>(net.n_classes) ||
      net.vqc_weights.count() !=
          vqc::vqc_param_count(net.vqc_config.n_qubits, net.vqc_config.n_layers)) {
    throw ShapeError("dressed net parameter tensors do not match its shape");
  }
}

}  // namespace

std::size_t DressedQuantumNet::param_count() const {
  return pre_w.size() + pre_b.size() + vqc_weights.count() + post_w.size() +
         post_b.size();
}

DressedQuantumNet make_dressed(int n_inputs, const vqc::VqcConfig& config,
                               int n_classes, std::uint64_t seed) {
  config.validate();
  if (n_inputs < 1) {
    throw ConfigError("n_inputs must be positive, got " + std::to_string(n_inputs));
  }
  if (n_classes < 1) {
    throw ConfigError("n_classes must be positive, got " + std::to_string(n_classes));
  }
  DressedQuantumNet net;
  net.n_inputs = n_inputs;
  net.n_classes = n_classes;
  net.vqc_config = config;

  const std::size_t nq = config.n_qubits;
  Rng rng(seed);
  net.pre_w.resize(nq * n_inputs);
  net.pre_b.assign(nq, 0.0);
  const double pre_bound = std::sqrt(6.0 / static_cast<double>(n_inputs));
  for (double& w : net.pre_w) w = rng.uniform(-pre_bound, pre_bound);

  net.vqc_weights = vqc::VqcWeights::zeros(config.n_layers, config.n_qubits);
  for (double& a : net.vqc_weights.angles) {
    a = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  }

  net.post_w.resize(static_cast<std::size_t>(n_classes) * nq);
  net.post_b.assign(n_classes, 0.0);
  const double post_bound = std::sqrt(6.0 / static_cast<double>(nq));
  for (double& w : net.post_w) w = rng.uniform(-post_bound, post_bound);
  return net;
}

std::vector<double> dqn_forward(const DressedQuantumNet& net,
                                std::span<const double> features,
                                DqnTape* tape) {
  check_net(net);
  if (features.size() != static_cast<std::size_t>(net.n_inputs)) {
    throw ShapeError("feature length " + std::to_string(features.size()) +
                     " does not match n_inputs " + std::to_string(net.n_inputs));
  }
  for (double f : features) {
    if (!std::isfinite(f)) throw ShapeError("feature value is not finite");
  }

  const std::size_t nq = net.vqc_config.n_qubits;
  std::vector<double> pre(nq);
  dense_apply(net.pre_w, net.pre_b, features, pre);
  for (double& x : pre) x = std::tanh(x);

  vqc::VqcForward circuit = vqc::vqc_forward(net.vqc_config, net.vqc_weights, pre);

  std::vector<double> logits(net.n_classes);
  dense_apply(net.post_w, net.post_b, circuit.outputs, logits);

  double mx = -std::numeric_limits<double>::infinity();
  for (double x : logits) mx = std::max(mx, x);
  double sum = 0.0;
  std::vector<double> probs(net.n_classes);
  for (int c = 0; c < net.n_classes; ++c) {
    probs[c] = std::exp(logits[c] - mx);
    sum += probs[c];
  }
  for (double& p : probs) p /= sum;

  if (tape) {
    tape->features.assign(features.begin(), features.end());
    tape->tanh_out = std::move(pre);
    tape->vqc = std::move(circuit);
    tape->probs = probs;
  }
  return probs;
}

DqnGradients dqn_backward(const DressedQuantumNet& net, const DqnTape& tape,
                          std::span<const double> grad_output) {
  check_net(net);
  const std::size_t nq = net.vqc_config.n_qubits;
  const std::size_t nc = net.n_classes;
  if (tape.features.size() != static_cast<std::size_t>(net.n_inputs) ||
      tape.tanh_out.size() != nq || tape.probs.size() != nc ||
      tape.vqc.outputs.size() != nq) {
    throw ShapeError("tape does not match the net (stale or foreign tape)");
  }
  if (grad_output.size() != nc) {
    throw ShapeError("grad_output length does not match n_classes");
  }

  DqnGradients grads;
  grads.pre_w.assign(net.pre_w.size(), 0.0);
  grads.pre_b.assign(net.pre_b.size(), 0.0);
  grads.post_w.assign(net.post_w.size(), 0.0);
  grads.post_b.assign(net.post_b.size(), 0.0);
  grads.input.assign(net.n_inputs, 0.0);

  // Softmax jacobian: dL/dz_c = p_c * (g_c - sum_j g_j p_j).
  double dot = 0.0;
  for (std::size_t c = 0; c < nc; ++c) dot += grad_output[c] * tape.probs[c];
  std::vector<double> dlogits(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    dlogits[c] = tape.probs[c] * (grad_output[c] - dot);
  }

  // Post-net: z = post_w * q + post_b with q the circuit outputs.
  std::vector<double> dq(nq, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    grads.post_b[c] = dlogits[c];
    for (std::size_t i = 0; i < nq; ++i) {
      grads.post_w[c * nq + i] = dlogits[c] * tape.vqc.outputs[i];
      dq[i] += net.post_w[c * nq + i] * dlogits[c];
    }
  }

  // Quantum stage: parameter-shift gradients for the angles and the inputs.
  vqc::VqcGradients qg =
      vqc::vqc_gradients(net.vqc_config, net.vqc_weights, tape.tanh_out, dq);
  grads.vqc_weights = std::move(qg.weights);

  // Pre-net through tanh: d tanh(u) = (1 - t^2) du.
  std::vector<double> dpre(nq);
  for (std::size_t i = 0; i < nq; ++i) {
    dpre[i] = qg.features[i] * (1.0 - tape.tanh_out[i] * tape.tanh_out[i]);
  }
  const std::size_t nin = net.n_inputs;
  for (std::size_t o = 0; o < nq; ++o) {
    grads.pre_b[o] = dpre[o];
    for (std::size_t i = 0; i < nin; ++i) {
      grads.pre_w[o * nin + i] = dpre[o] * tape.features[i];
      grads.input[i] += net.pre_w[o * nin + i] * dpre[o];
    }
  }
  return grads;
}

std::vector<std::span<double>> dqn_params(DressedQuantumNet& net) {
  return {std::span<double>(net.pre_w), std::span<double>(net.pre_b),
          std::span<double>(net.vqc_weights.angles),
          std::span<double>(net.post_w), std::span<double>(net.post_b)};
}

std::vector<std::span<const double>> dqn_params(const DressedQuantumNet& net) {
  return {std::span<const double>(net.pre_w), std::span<const double>(net.pre_b),
          std::span<const double>(net.vqc_weights.angles),
          std::span<const double>(net.post_w), std::span<const double>(net.post_b)};
}

std::vector<std::span<const double>> dqn_grads(const DqnGradients& grads) {
  return {std::span<const double>(grads.pre_w), std::span<const double>(grads.pre_b),
          std::span<const double>(grads.vqc_weights.angles),
          std::span<const double>(grads.post_w), std::span<const double>(grads.post_b)};
}

std::vector<std::size_t> dqn_block_sizes(const DressedQuantumNet& net) {
  return {net.pre_w.size(), net.pre_b.size(), net.vqc_weights.count(),
          net.post_w.size(), net.post_b.size()};
}

std::size_t dqn_param_count(int n_ip, int n_q, int n_d, int n_c) {
  if (n_ip < 1 || n_q < 1 || n_d < 1 || n_c < 1) {
    throw ConfigError("dqn_param_count needs positive arguments");
  }
  const std::size_t pre = static_cast<std::size_t>(n_ip) * n_q + n_q;
  const std::size_t circuit = static_cast<std::size_t>(3) * n_q * n_d;
  const std::size_t post = static_cast<std::size_t>(n_q) * n_c + n_c;
  return pre + circuit + post;
}

}  // namespace qtl::dressed
