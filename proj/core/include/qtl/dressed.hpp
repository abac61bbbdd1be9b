#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qtl/vqc.hpp"

namespace qtl::dressed {

// pre-net dense (n_ip -> n_q) with tanh, VQC on n_q qubits, post-net dense
// (n_q -> n_c) with softmax. Weight matrices are row-major (out x in).
struct DressedQuantumNet {
  int n_inputs = 0;
  int n_classes = 0;
  vqc::VqcConfig vqc_config;

  std::vector<double> pre_w;   // n_q x n_ip
  std::vector<double> pre_b;   // n_q
  vqc::VqcWeights vqc_weights;
  std::vector<double> post_w;  // n_c x n_q
  std::vector<double> post_b;  // n_c

  std::size_t param_count() const;
};

/// Kaiming-uniform dense weights, zero biases, VQC angles uniform in
/// [0, 2*pi), all drawn from one generator seeded with `seed`.
DressedQuantumNet make_dressed(int n_inputs, const vqc::VqcConfig& config,
                               int n_classes, std::uint64_t seed);

struct DqnTape {
  std::vector<double> features;   // input, length n_ip
  std::vector<double> tanh_out;   // pre-net activations, length n_q
  vqc::VqcForward vqc;            // expectations + circuit tape
  std::vector<double> probs;      // softmax output, length n_c
};

/// softmax(post_net(vqc(tanh(pre_net(x))))). The tape, when given, records
/// every stage for dqn_backward.
std::vector<double> dqn_forward(const DressedQuantumNet& net,
                                std::span<const double> features,
                                DqnTape* tape = nullptr);

struct DqnGradients {
  std::vector<double> pre_w;
  std::vector<double> pre_b;
  vqc::VqcWeights vqc_weights;
  std::vector<double> post_w;
  std::vector<double> post_b;
  std::vector<double> input;  // length n_ip
};

/// Chains grad_output (w.r.t. the probabilities) through softmax, post-net,
/// the parameter-shift circuit gradients, tanh and pre-net.
DqnGradients dqn_backward(const DressedQuantumNet& net, const DqnTape& tape,
                          std::span<const double> grad_output);

/// Flat parameter/gradient views in a fixed order: pre_w, pre_b, angles,
/// post_w, post_b. Used by the optimizer and by serialization.
std::vector<std::span<double>> dqn_params(DressedQuantumNet& net);
std::vector<std::span<const double>> dqn_params(const DressedQuantumNet& net);
std::vector<std::span<const double>> dqn_grads(const DqnGradients& grads);
std::vector<std::size_t> dqn_block_sizes(const DressedQuantumNet& net);

/// (n_ip*n_q + n_q) + 3*n_q*n_d + (n_q*n_c + n_c).
std::size_t dqn_param_count(int n_ip, int n_q, int n_d, int n_c);

}  // namespace qtl::dressed
