#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qtl/qsim.hpp"

namespace qtl::vqc {

enum class OutputActivation { None, Relu };

// Ansatz shape: angle embedding followed by strongly-entangled layers (a
// three-parameter rotation on every qubit, then a ring of CNOTs at a
// layer-dependent offset) and an all-qubit Z readout.
struct VqcConfig {
  int n_qubits = 5;
  int n_layers = 3;
  /// Per-layer CNOT target offsets; empty selects (layer % (n_qubits-1)) + 1.
  std::vector<int> ranges;
  bool hadamard_prefix = true;
  double input_scale = 1.57079632679489661923;  // pi/2
  OutputActivation output_activation = OutputActivation::None;

  /// Throws ConfigError when the shape invariants do not hold.
  void validate() const;
  int range_for(int layer) const;
};

/// Rotation angles, layer-major: angles[(layer * n_qubits + qubit) * 3 + k].
struct VqcWeights {
  int n_layers = 0;
  int n_qubits = 0;
  std::vector<double> angles;

  static VqcWeights zeros(int n_layers, int n_qubits);
  /// Angles uniform in [0, 2*pi).
  static VqcWeights random(int n_layers, int n_qubits, std::uint64_t seed);

  double& at(int layer, int qubit, int k) {
    return angles[(static_cast<std::size_t>(layer) * n_qubits + qubit) * 3 + k];
  }
  double at(int layer, int qubit, int k) const {
    return angles[(static_cast<std::size_t>(layer) * n_qubits + qubit) * 3 + k];
  }
  std::size_t count() const { return angles.size(); }
};

/// Intermediate states for gradient replay: states[0] is the embedded state,
/// states[l + 1] the state after entangling layer l.
struct VqcTape {
  std::vector<qsim::StateVector> states;
};

/// Embeds a feature vector: optional Hadamard wall, then
/// RY(input_scale * feature) per qubit, on |0...0>.
qsim::StateVector embed(const VqcConfig& config, std::span<const double> features);

/// Applies every entangling layer in order. The state must match the config.
qsim::StateVector entangling_layers(const VqcConfig& config,
                                    const VqcWeights& weights,
                                    qsim::StateVector state);

/// Z expectation of every qubit, in order.
std::vector<double> measure_all_z(const qsim::StateVector& state);

struct VqcForward {
  std::vector<double> outputs;       // after optional output activation
  std::vector<double> expectations;  // raw <Z> readout
  VqcTape tape;
};

VqcForward vqc_forward(const VqcConfig& config, const VqcWeights& weights,
                       std::span<const double> features);

struct VqcGradients {
  std::vector<double> features;  // d(upstream . out)/d feature
  VqcWeights weights;            // same shape as the weights
};

/// Gradient of upstream . output with respect to every rotation angle and
/// every input feature, by the parameter-shift rule (exact for these gates).
VqcGradients vqc_gradients(const VqcConfig& config, const VqcWeights& weights,
                           std::span<const double> features,
                           std::span<const double> upstream);

std::size_t vqc_param_count(int n_qubits, int n_layers);

}  // namespace qtl::vqc
