#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qtl/rng.hpp"
#include "qtl/tensor.hpp"

namespace qtl::autonet {

enum class LayerKind { Conv2d, MaxPool2d, Flatten, Dense, Dropout, Activation };
enum class Activation { Relu, Tanh, Softmax };

struct LayerSpec {
  LayerKind kind;
  int in_ch = 0, out_ch = 0, kernel = 0, stride = 1;  // conv2d / maxpool2d
  int in_dim = 0, out_dim = 0;                        // dense
  double p = 0.0;                                     // dropout
  Activation act = Activation::Relu;
  bool frozen = false;

  static LayerSpec conv2d(int in_ch, int out_ch, int kernel, int stride);
  static LayerSpec maxpool2d(int kernel, int stride);
  static LayerSpec flatten();
  static LayerSpec dense(int in_dim, int out_dim);
  static LayerSpec dropout(double p);
  static LayerSpec activation(Activation act);

  /// conv2d: out*in*k^2 + out; dense: out*in + out; everything else 0.
  std::size_t param_count() const;
  std::string describe() const;
};

// Ordered layer list plus one weight/bias tensor pair per parametric layer
// (empty tensors elsewhere). `revision` increments on every parameter
// mutation so stale tapes can be detected.
struct LayerGraph {
  std::string name;
  std::vector<LayerSpec> layers;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
  std::uint64_t revision = 0;

  /// Kaiming-uniform weights (bound sqrt(6/fan_in)), zero biases, seeded.
  void init_params(std::uint64_t seed);
  std::size_t param_count() const;
  bool all_frozen() const;
};

/// Data shape without the batch dimension: {C, H, W} before flatten, {D} after.
using DataShape = std::vector<std::size_t>;

/// Output shape of every layer for the given input shape. Throws ShapeError
/// naming the offending layer when adjacent layers do not compose.
std::vector<DataShape> infer_shapes(const LayerGraph& graph, const DataShape& input);

// Activation record of one forward pass. acts[0] is the input batch,
// acts[i + 1] the output of layer i.
struct Tape {
  const LayerGraph* graph = nullptr;
  std::uint64_t revision = 0;
  bool train_mode = false;
  std::vector<Tensor> acts;
  std::vector<std::vector<std::size_t>> pool_argmax;  // flat input indices
  std::vector<std::vector<double>> dropout_mask;      // 0 or 1/(1-p)
};

/// Runs the graph on a batch ({N,C,H,W} or {N,D}). With train_mode, dropout
/// draws from `rng` (required if any dropout has p > 0); otherwise dropout is
/// the identity and the pass is deterministic.
Tensor forward(const LayerGraph& graph, const Tensor& batch, bool train_mode,
               Tape* tape = nullptr, Rng* rng = nullptr);

// Parameter gradients per layer (empty for frozen or non-parametric layers)
// plus the gradient with respect to the input batch.
struct Gradients {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
  Tensor input;
};

Gradients backward(const LayerGraph& graph, const Tape& tape,
                   const Tensor& grad_output);

/// -ln(probs[label]) with a 1e-12 floor. Throws on an out-of-range label or
/// when the probabilities do not sum to 1 within 1e-6.
double cross_entropy(std::span<const double> probs, int label);

/// Mean cross-entropy over a batch of probability rows {N, C}; when grad is
/// non-null it receives d(mean loss)/d probs with the same shape.
double batch_cross_entropy(const Tensor& probs, std::span<const int> labels,
                           Tensor* grad = nullptr);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second-moment buffers for an ordered list of flat parameter blocks.
class AdamState {
 public:
  AdamState(AdamConfig config, std::vector<std::size_t> block_sizes);

  /// Standard bias-corrected Adam update, in place.
  void step(std::span<const std::span<double>> params,
            std::span<const std::span<const double>> grads);

  std::uint64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Flat views of the trainable (non-frozen, parametric) tensors in layer
/// order, weights before biases per layer.
std::vector<std::span<double>> trainable_params(LayerGraph& graph);
std::vector<std::size_t> trainable_sizes(const LayerGraph& graph);
std::vector<std::span<const double>> trainable_grads(const LayerGraph& graph,
                                                     const Gradients& grads);

/// Applies one Adam step to the graph's trainable tensors and bumps revision.
void adam_step(LayerGraph& graph, const Gradients& grads, AdamState& state);

/// Architecture presets: CM-1, CM-2, CM-3 (200x200 grayscale input) and
/// tiny (32x32, for desk-scale runs). Throws ConfigError on unknown names.
LayerGraph preset(const std::string& name);
std::vector<std::string> preset_names();

/// Parameter total published for the preset in the original comparison table,
/// when one exists. CM-1's published figure does not match the architecture
/// as written; param_count() is authoritative there.
std::optional<std::size_t> published_param_count(const std::string& name);

}  // namespace qtl::autonet
