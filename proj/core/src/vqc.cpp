#include "qtl/vqc.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "qtl/error.hpp"
#include "qtl/rng.hpp"

namespace qtl::vqc {

namespace {
constexpr double kHalfPi = 1.57079632679489661923;

void check_features(const VqcConfig& config, std::span<const double> features) {
  if (features.size() != static_cast<std::size_t>(config.n_qubits)) {
    throw ShapeError("feature length " + std::to_string(features.size()) +
                     " does not match n_qubits " +
                     std::to_string(config.n_qubits));
  }
  for (double f : features) {
    if (!std::isfinite(f)) throw ShapeError("feature value is not finite");
  }
}

void check_weights(const VqcConfig& config, const VqcWeights& weights) {
  if (weights.n_layers != config.n_layers ||
      weights.n_qubits != config.n_qubits ||
      weights.count() != vqc_param_count(config.n_qubits, config.n_layers)) {
    throw ShapeError("weight tensor shape does not match the ansatz config");
  }
}

// One entangling layer: Rot on every qubit, then the CNOT ring at this
// layer's offset.
void apply_layer(const VqcConfig& config, const VqcWeights& weights, int layer,
                 qsim::StateVector& state) {
  const int n = config.n_qubits;
  for (int q = 0; q < n; ++q) {
    state.apply_1q(q, qsim::rot(weights.at(layer, q, 0),
                                weights.at(layer, q, 1),
                                weights.at(layer, q, 2)));
  }
  const int r = config.range_for(layer);
  for (int q = 0; q < n; ++q) {
    state.apply_cnot(q, (q + r) % n);
  }
}

double relu_mask(double x) { return x > 0.0 ? 1.0 : 0.0; }

std::vector<double> activate(const VqcConfig& config,
                             std::span<const double> raw) {
  std::vector<double> out(raw.begin(), raw.end());
  if (config.output_activation == OutputActivation::Relu) {
    for (double& x : out) x = x > 0.0 ? x : 0.0;
  }
  return out;
}

// Replays the circuit from the cached state before `layer` with one angle
// shifted, returning upstream . <Z>.
double replay_from(const VqcConfig& config, const VqcWeights& weights,
                   const VqcTape& tape, int layer, int qubit, int k,
                   double shift, std::span<const double> upstream) {
  qsim::StateVector state = tape.states[layer];
  VqcWeights shifted = weights;
  shifted.at(layer, qubit, k) += shift;
  for (int l = layer; l < config.n_layers; ++l) {
    apply_layer(config, shifted, l, state);
  }
  double acc = 0.0;
  for (int q = 0; q < config.n_qubits; ++q) {
    acc += upstream[q] * state.expect_z(q);
  }
  return acc;
}

double forward_dot(const VqcConfig& config, const VqcWeights& weights,
                   std::span<const double> features,
                   std::span<const double> upstream) {
  qsim::StateVector state = embed(config, features);
  for (int l = 0; l < config.n_layers; ++l) {
    apply_layer(config, weights, l, state);
  }
  double acc = 0.0;
  for (int q = 0; q < config.n_qubits; ++q) {
    acc += upstream[q] * state.expect_z(q);
  }
  return acc;
}
}  // namespace

void VqcConfig::validate() const {
  if (n_qubits < 1 || n_qubits > qsim::kMaxQubits) {
    throw ConfigError("n_qubits must be in [1, " +
                      std::to_string(qsim::kMaxQubits) + "], got " +
                      std::to_string(n_qubits));
  }
  if (n_layers < 1) {
    throw ConfigError("n_layers must be >= 1, got " + std::to_string(n_layers));
  }
  if (n_qubits < 2) {
    throw ConfigError("entangling layers need n_qubits >= 2, got " +
                      std::to_string(n_qubits));
  }
  if (!ranges.empty() && ranges.size() != static_cast<std::size_t>(n_layers)) {
    throw ConfigError("ranges must list one offset per layer");
  }
  for (int l = 0; l < n_layers; ++l) {
    const int r = range_for(l);
    if (r < 1 || r > n_qubits - 1) {
      throw ConfigError("ranges[" + std::to_string(l) + "] = " +
                        std::to_string(r) + " outside [1, " +
                        std::to_string(n_qubits - 1) + "]");
    }
  }
  if (!std::isfinite(input_scale)) {
    throw ConfigError("input_scale is not finite");
  }
}

int VqcConfig::range_for(int layer) const {
  if (!ranges.empty()) return ranges[layer];
  return (layer % (n_qubits - 1)) + 1;
}

VqcWeights VqcWeights::zeros(int n_layers, int n_qubits) {
  VqcWeights w;
  w.n_layers = n_layers;
  w.n_qubits = n_qubits;
  w.angles.assign(vqc_param_count(n_qubits, n_layers), 0.0);
  return w;
}

VqcWeights VqcWeights::random(int n_layers, int n_qubits, std::uint64_t seed) {
  VqcWeights w = zeros(n_layers, n_qubits);
  Rng rng(seed);
  for (double& a : w.angles) a = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  return w;
}

qsim::StateVector embed(const VqcConfig& config,
                        std::span<const double> features) {
  config.validate();
  check_features(config, features);
  qsim::StateVector state(config.n_qubits);
  if (config.hadamard_prefix) {
    for (int q = 0; q < config.n_qubits; ++q) {
      state.apply_1q(q, qsim::hadamard());
    }
  }
  for (int q = 0; q < config.n_qubits; ++q) {
    state.apply_1q(q, qsim::ry(config.input_scale * features[q]));
  }
  return state;
}

qsim::StateVector entangling_layers(const VqcConfig& config,
                                    const VqcWeights& weights,
                                    qsim::StateVector state) {
  config.validate();
  check_weights(config, weights);
  if (state.n_qubits() != config.n_qubits) {
    throw ShapeError("state register size does not match the config");
  }
  for (int l = 0; l < config.n_layers; ++l) {
    apply_layer(config, weights, l, state);
  }
  return state;
}

std::vector<double> measure_all_z(const qsim::StateVector& state) {
  std::vector<double> out(state.n_qubits());
  for (int q = 0; q < state.n_qubits(); ++q) out[q] = state.expect_z(q);
  return out;
}

VqcForward vqc_forward(const VqcConfig& config, const VqcWeights& weights,
                       std::span<const double> features) {
  config.validate();
  check_weights(config, weights);
  VqcForward result;
  result.tape.states.reserve(config.n_layers + 1);
  result.tape.states.push_back(embed(config, features));
  for (int l = 0; l < config.n_layers; ++l) {
    qsim::StateVector next = result.tape.states.back();
    apply_layer(config, weights, l, next);
    result.tape.states.push_back(std::move(next));
  }
  result.expectations = measure_all_z(result.tape.states.back());
  result.outputs = activate(config, result.expectations);
  return result;
}

VqcGradients vqc_gradients(const VqcConfig& config, const VqcWeights& weights,
                           std::span<const double> features,
                           std::span<const double> upstream) {
  config.validate();
  check_weights(config, weights);
  check_features(config, features);
  if (upstream.size() != static_cast<std::size_t>(config.n_qubits)) {
    throw ShapeError("upstream length " + std::to_string(upstream.size()) +
                     " does not match n_qubits");
  }

  const VqcForward fwd = vqc_forward(config, weights, features);

  // Chain through the optional output ReLU: gradient flows only where the
  // raw expectation is positive.
  std::vector<double> up(upstream.begin(), upstream.end());
  if (config.output_activation == OutputActivation::Relu) {
    for (int q = 0; q < config.n_qubits; ++q) {
      up[q] *= relu_mask(fwd.expectations[q]);
    }
  }

  VqcGradients grads;
  grads.weights = VqcWeights::zeros(config.n_layers, config.n_qubits);
  grads.features.assign(config.n_qubits, 0.0);

  for (int l = 0; l < config.n_layers; ++l) {
    for (int q = 0; q < config.n_qubits; ++q) {
      for (int k = 0; k < 3; ++k) {
        const double plus = replay_from(config, weights, fwd.tape, l, q, k, kHalfPi, up);
        const double minus = replay_from(config, weights, fwd.tape, l, q, k, -kHalfPi, up);
        grads.weights.at(l, q, k) = 0.5 * (plus - minus);
      }
    }
  }

  // Embedding angles: theta_q = input_scale * feature_q, so the shifted
  // evaluation offsets the feature by pi/(2 * scale) and the chain rule
  // multiplies by the scale. A zero scale makes the output constant in the
  // features.
  if (config.input_scale != 0.0) {
    const double offset = kHalfPi / config.input_scale;
    std::vector<double> shifted(features.begin(), features.end());
    for (int q = 0; q < config.n_qubits; ++q) {
      const double saved = shifted[q];
      shifted[q] = saved + offset;
      const double plus = forward_dot(config, weights, shifted, up);
      shifted[q] = saved - offset;
      const double minus = forward_dot(config, weights, shifted, up);
      shifted[q] = saved;
      grads.features[q] = config.input_scale * 0.5 * (plus - minus);
    }
  }
  return grads;
}

std::size_t vqc_param_count(int n_qubits, int n_layers) {
  if (n_qubits < 1 || n_layers < 1) {
    throw ConfigError("vqc_param_count needs positive qubit and layer counts");
  }
  return static_cast<std::size_t>(3) * n_qubits * n_layers;
}

}  // namespace qtl::vqc
