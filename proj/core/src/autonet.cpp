#include "qtl/autonet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qtl/error.hpp"

namespace qtl::autonet {

namespace {

std::size_t pool_out(std::size_t in, int kernel, int stride) {
  return (in - static_cast<std::size_t>(kernel)) / stride + 1;
}

std::string shape_str(const DataShape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ")";
  return os.str();
}

[[noreturn]] void shape_fail(std::size_t layer_idx, const LayerSpec& spec,
                             const std::string& msg) {
  throw ShapeError("layer " + std::to_string(layer_idx) + " (" +
                   spec.describe() + "): " + msg);
}

void softmax_row(std::span<double> row) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : row) mx = std::max(mx, x);
  double sum = 0.0;
  for (double& x : row) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : row) x /= sum;
}

}  // namespace

LayerSpec LayerSpec::conv2d(int in_ch, int out_ch, int kernel, int stride) {
  if (in_ch < 1 || out_ch < 1 || kernel < 1 || stride < 1) {
    throw ConfigError("conv2d dimensions must be positive");
  }
  LayerSpec s{LayerKind::Conv2d};
  s.in_ch = in_ch;
  s.out_ch = out_ch;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::maxpool2d(int kernel, int stride) {
  if (kernel < 1 || stride < 1) {
    throw ConfigError("maxpool2d kernel and stride must be positive");
  }
  LayerSpec s{LayerKind::MaxPool2d};
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::flatten() { return LayerSpec{LayerKind::Flatten}; }

LayerSpec LayerSpec::dense(int in_dim, int out_dim) {
  if (in_dim < 1 || out_dim < 1) {
    throw ConfigError("dense dimensions must be positive");
  }
  LayerSpec s{LayerKind::Dense};
  s.in_dim = in_dim;
  s.out_dim = out_dim;
  return s;
}

LayerSpec LayerSpec::dropout(double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("dropout probability must satisfy 0 <= p < 1, got " +
                      std::to_string(p));
  }
  LayerSpec s{LayerKind::Dropout};
  s.p = p;
  return s;
}

LayerSpec LayerSpec::activation(Activation act) {
  LayerSpec s{LayerKind::Activation};
  s.act = act;
  return s;
}

std::size_t LayerSpec::param_count() const {
  switch (kind) {
    case LayerKind::Conv2d:
      return static_cast<std::size_t>(out_ch) * in_ch * kernel * kernel + out_ch;
    case LayerKind::Dense:
      return static_cast<std::size_t>(out_dim) * in_dim + out_dim;
    default:
      return 0;
  }
}

std::string LayerSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case LayerKind::Conv2d:
      os << "conv2d(" << in_ch << "," << out_ch << ",k" << kernel << ",s" << stride << ")";
      break;
    case LayerKind::MaxPool2d:
      os << "maxpool2d(k" << kernel << ",s" << stride << ")";
      break;
    case LayerKind::Flatten:
      os << "flatten";
      break;
    case LayerKind::Dense:
      os << "dense(" << in_dim << "," << out_dim << ")";
      break;
    case LayerKind::Dropout:
      os << "dropout(p=" << p << ")";
      break;
    case LayerKind::Activation:
      os << (act == Activation::Relu ? "relu"
             : act == Activation::Tanh ? "tanh" : "softmax");
      break;
  }
  return os.str();
}

void LayerGraph::init_params(std::uint64_t seed) {
  Rng rng(seed);
  weights.assign(layers.size(), Tensor{});
  biases.assign(layers.size(), Tensor{});
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& spec = layers[i];
    std::size_t fan_in = 0;
    if (spec.kind == LayerKind::Conv2d) {
      weights[i] = Tensor({static_cast<std::size_t>(spec.out_ch),
                           static_cast<std::size_t>(spec.in_ch),
                           static_cast<std::size_t>(spec.kernel),
                           static_cast<std::size_t>(spec.kernel)});
      biases[i] = Tensor({static_cast<std::size_t>(spec.out_ch)});
      fan_in = static_cast<std::size_t>(spec.in_ch) * spec.kernel * spec.kernel;
    } else if (spec.kind == LayerKind::Dense) {
      weights[i] = Tensor({static_cast<std::size_t>(spec.out_dim),
                           static_cast<std::size_t>(spec.in_dim)});
      biases[i] = Tensor({static_cast<std::size_t>(spec.out_dim)});
      fan_in = static_cast<std::size_t>(spec.in_dim);
    } else {
      continue;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& w : weights[i].v) w = rng.uniform(-bound, bound);
  }
  ++revision;
}

std::size_t LayerGraph::param_count() const {
  std::size_t n = 0;
  for (const LayerSpec& spec : layers) n += spec.param_count();
  return n;
}

bool LayerGraph::all_frozen() const {
  for (const LayerSpec& spec : layers) {
    if (spec.param_count() > 0 && !spec.frozen) return false;
  }
  return true;
}

std::vector<DataShape> infer_shapes(const LayerGraph& graph,
                                    const DataShape& input) {
  std::vector<DataShape> out;
  out.reserve(graph.layers.size());
  DataShape cur = input;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& spec = graph.layers[i];
    switch (spec.kind) {
      case LayerKind::Conv2d: {
        if (cur.size() != 3) shape_fail(i, spec, "expects (C,H,W) input, got " + shape_str(cur));
        if (cur[0] != static_cast<std::size_t>(spec.in_ch)) {
          shape_fail(i, spec, "input has " + std::to_string(cur[0]) +
                                  " channels, layer expects " + std::to_string(spec.in_ch));
        }
        if (cur[1] < static_cast<std::size_t>(spec.kernel) ||
            cur[2] < static_cast<std::size_t>(spec.kernel)) {
          shape_fail(i, spec, "input " + shape_str(cur) + " smaller than kernel");
        }
        cur = {static_cast<std::size_t>(spec.out_ch),
               pool_out(cur[1], spec.kernel, spec.stride),
               pool_out(cur[2], spec.kernel, spec.stride)};
        break;
      }
      case LayerKind::MaxPool2d: {
        if (cur.size() != 3) shape_fail(i, spec, "expects (C,H,W) input, got " + shape_str(cur));
        if (cur[1] < static_cast<std::size_t>(spec.kernel) ||
            cur[2] < static_cast<std::size_t>(spec.kernel)) {
          shape_fail(i, spec, "input " + shape_str(cur) + " smaller than kernel");
        }
        cur = {cur[0], pool_out(cur[1], spec.kernel, spec.stride),
               pool_out(cur[2], spec.kernel, spec.stride)};
        break;
      }
      case LayerKind::Flatten: {
        if (cur.size() != 3) shape_fail(i, spec, "expects (C,H,W) input, got " + shape_str(cur));
        cur = {cur[0] * cur[1] * cur[2]};
        break;
      }
      case LayerKind::Dense: {
        if (cur.size() != 1) shape_fail(i, spec, "expects flat input, got " + shape_str(cur));
        if (cur[0] != static_cast<std::size_t>(spec.in_dim)) {
          shape_fail(i, spec, "input width " + std::to_string(cur[0]) +
                                  " does not match in_dim " + std::to_string(spec.in_dim));
        }
        cur = {static_cast<std::size_t>(spec.out_dim)};
        break;
      }
      case LayerKind::Dropout:
      case LayerKind::Activation:
        break;
    }
    out.push_back(cur);
  }
  return out;
}

namespace {

Tensor conv2d_forward(const LayerSpec& spec, const Tensor& in, const Tensor& w,
                      const Tensor& b) {
  const std::size_t N = in.shape[0], Ci = in.shape[1], H = in.shape[2], W = in.shape[3];
  const std::size_t Co = spec.out_ch, K = spec.kernel, S = spec.stride;
  const std::size_t Ho = pool_out(H, spec.kernel, spec.stride);
  const std::size_t Wo = pool_out(W, spec.kernel, spec.stride);
  Tensor out({N, Co, Ho, Wo});
  const double* x = in.v.data();
  const double* wp = w.v.data();
  double* y = out.v.data();
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t co = 0; co < Co; ++co) {
      const double bias = b.v[co];
      for (std::size_t yo = 0; yo < Ho; ++yo) {
        for (std::size_t xo = 0; xo < Wo; ++xo) {
          double acc = bias;
          for (std::size_t ci = 0; ci < Ci; ++ci) {
            const double* xrow = x + ((n * Ci + ci) * H + yo * S) * W + xo * S;
            const double* wrow = wp + ((co * Ci + ci) * K) * K;
            for (std::size_t ky = 0; ky < K; ++ky) {
              for (std::size_t kx = 0; kx < K; ++kx) {
                acc += xrow[ky * W + kx] * wrow[ky * K + kx];
              }
            }
          }
          y[((n * Co + co) * Ho + yo) * Wo + xo] = acc;
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const LayerSpec& spec, const Tensor& in, const Tensor& w,
                     const Tensor& gout, Tensor* gw, Tensor* gb, Tensor& gin) {
  const std::size_t N = in.shape[0], Ci = in.shape[1], H = in.shape[2], W = in.shape[3];
  const std::size_t Co = spec.out_ch, K = spec.kernel, S = spec.stride;
  const std::size_t Ho = gout.shape[2], Wo = gout.shape[3];
  gin = Tensor(in.shape);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t co = 0; co < Co; ++co) {
      for (std::size_t yo = 0; yo < Ho; ++yo) {
        for (std::size_t xo = 0; xo < Wo; ++xo) {
          const double g = gout.v[((n * Co + co) * Ho + yo) * Wo + xo];
          if (gb) gb->v[co] += g;
          for (std::size_t ci = 0; ci < Ci; ++ci) {
            const std::size_t xbase = ((n * Ci + ci) * H + yo * S) * W + xo * S;
            const std::size_t wbase = (co * Ci + ci) * K * K;
            for (std::size_t ky = 0; ky < K; ++ky) {
              for (std::size_t kx = 0; kx < K; ++kx) {
                const std::size_t xi = xbase + ky * W + kx;
                if (gw) gw->v[wbase + ky * K + kx] += in.v[xi] * g;
                gin.v[xi] += w.v[wbase + ky * K + kx] * g;
              }
            }
          }
        }
      }
    }
  }
}

Tensor maxpool_forward(const LayerSpec& spec, const Tensor& in,
                       std::vector<std::size_t>* argmax) {
  const std::size_t N = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
  const std::size_t K = spec.kernel, S = spec.stride;
  const std::size_t Ho = pool_out(H, spec.kernel, spec.stride);
  const std::size_t Wo = pool_out(W, spec.kernel, spec.stride);
  Tensor out({N, C, Ho, Wo});
  if (argmax) argmax->assign(out.size(), 0);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t yo = 0; yo < Ho; ++yo) {
        for (std::size_t xo = 0; xo < Wo; ++xo) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (std::size_t ky = 0; ky < K; ++ky) {
            for (std::size_t kx = 0; kx < K; ++kx) {
              const std::size_t xi = ((n * C + c) * H + yo * S + ky) * W + xo * S + kx;
              if (in.v[xi] > best) {
                best = in.v[xi];
                best_idx = xi;
              }
            }
          }
          const std::size_t oi = ((n * C + c) * Ho + yo) * Wo + xo;
          out.v[oi] = best;
          if (argmax) (*argmax)[oi] = best_idx;
        }
      }
    }
  }
  return out;
}

Tensor dense_forward(const LayerSpec& spec, const Tensor& in, const Tensor& w,
                     const Tensor& b) {
  const std::size_t N = in.shape[0];
  const std::size_t Di = spec.in_dim, Do = spec.out_dim;
  Tensor out({N, Do});
  for (std::size_t n = 0; n < N; ++n) {
    const double* x = in.v.data() + n * Di;
    for (std::size_t o = 0; o < Do; ++o) {
      const double* wrow = w.v.data() + o * Di;
      double acc = b.v[o];
      for (std::size_t i = 0; i < Di; ++i) acc += wrow[i] * x[i];
      out.v[n * Do + o] = acc;
    }
  }
  return out;
}

void dense_backward(const LayerSpec& spec, const Tensor& in, const Tensor& w,
                    const Tensor& gout, Tensor* gw, Tensor* gb, Tensor& gin) {
  const std::size_t N = in.shape[0];
  const std::size_t Di = spec.in_dim, Do = spec.out_dim;
  gin = Tensor(in.shape);
  for (std::size_t n = 0; n < N; ++n) {
    const double* x = in.v.data() + n * Di;
    const double* g = gout.v.data() + n * Do;
    double* gx = gin.v.data() + n * Di;
    for (std::size_t o = 0; o < Do; ++o) {
      const double go = g[o];
      if (gb) gb->v[o] += go;
      const double* wrow = w.v.data() + o * Di;
      double* gwrow = gw ? gw->v.data() + o * Di : nullptr;
      for (std::size_t i = 0; i < Di; ++i) {
        if (gwrow) gwrow[i] += x[i] * go;
        gx[i] += wrow[i] * go;
      }
    }
  }
}

}  // namespace

Tensor forward(const LayerGraph& graph, const Tensor& batch, bool train_mode,
               Tape* tape, Rng* rng) {
  if (batch.shape.size() != 4 && batch.shape.size() != 2) {
    throw ShapeError("batch must be (N,C,H,W) or (N,D), got rank " +
                     std::to_string(batch.shape.size()));
  }
  DataShape in_shape(batch.shape.begin() + 1, batch.shape.end());
  infer_shapes(graph, in_shape);  // validates composition up front

  if (tape) {
    tape->graph = &graph;
    tape->revision = graph.revision;
    tape->train_mode = train_mode;
    tape->acts.clear();
    tape->acts.push_back(batch);
    tape->pool_argmax.assign(graph.layers.size(), {});
    tape->dropout_mask.assign(graph.layers.size(), {});
  }

  Tensor cur = batch;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& spec = graph.layers[i];
    Tensor next;
    switch (spec.kind) {
      case LayerKind::Conv2d:
        next = conv2d_forward(spec, cur, graph.weights[i], graph.biases[i]);
        break;
      case LayerKind::MaxPool2d: {
        std::vector<std::size_t> argmax;
        next = maxpool_forward(spec, cur, tape ? &argmax : nullptr);
        if (tape) tape->pool_argmax[i] = std::move(argmax);
        break;
      }
      case LayerKind::Flatten: {
        next = cur;
        next.shape = {cur.shape[0], cur.shape[1] * cur.shape[2] * cur.shape[3]};
        break;
      }
      case LayerKind::Dense:
        next = dense_forward(spec, cur, graph.weights[i], graph.biases[i]);
        break;
      case LayerKind::Dropout: {
        next = cur;
        if (train_mode && spec.p > 0.0) {
          if (!rng) throw ConfigError("training forward through dropout needs an rng");
          std::vector<double> mask(cur.size());
          const double keep_scale = 1.0 / (1.0 - spec.p);
          for (std::size_t j = 0; j < mask.size(); ++j) {
            mask[j] = rng->uniform() < spec.p ? 0.0 : keep_scale;
            next.v[j] = cur.v[j] * mask[j];
          }
          if (tape) tape->dropout_mask[i] = std::move(mask);
        }
        break;
      }
      case LayerKind::Activation: {
        next = cur;
        if (spec.act == Activation::Relu) {
          for (double& x : next.v) x = x > 0.0 ? x : 0.0;
        } else if (spec.act == Activation::Tanh) {
          for (double& x : next.v) x = std::tanh(x);
        } else {
          const std::size_t cols = next.shape.back();
          for (std::size_t r = 0; r < next.size() / cols; ++r) {
            softmax_row({next.v.data() + r * cols, cols});
          }
        }
        break;
      }
    }
    cur = next;
    if (tape) tape->acts.push_back(cur);
  }
  return cur;
}

Gradients backward(const LayerGraph& graph, const Tape& tape,
                   const Tensor& grad_output) {
  if (tape.graph != &graph || tape.revision != graph.revision) {
    throw ShapeError("tape is stale or belongs to a different graph");
  }
  if (tape.acts.size() != graph.layers.size() + 1) {
    throw ShapeError("tape does not cover every layer");
  }
  if (grad_output.shape != tape.acts.back().shape) {
    throw ShapeError("grad_output shape does not match the forward output");
  }

  Gradients grads;
  grads.weights.assign(graph.layers.size(), Tensor{});
  grads.biases.assign(graph.layers.size(), Tensor{});

  Tensor g = grad_output;
  for (std::size_t ii = graph.layers.size(); ii-- > 0;) {
    const LayerSpec& spec = graph.layers[ii];
    const Tensor& in = tape.acts[ii];
    const Tensor& out = tape.acts[ii + 1];
    Tensor gin;
    const bool want_param_grads = spec.param_count() > 0 && !spec.frozen;
    switch (spec.kind) {
      case LayerKind::Conv2d: {
        Tensor* gw = nullptr;
        Tensor* gb = nullptr;
        if (want_param_grads) {
          grads.weights[ii] = Tensor(graph.weights[ii].shape);
          grads.biases[ii] = Tensor(graph.biases[ii].shape);
          gw = &grads.weights[ii];
          gb = &grads.biases[ii];
        }
        conv2d_backward(spec, in, graph.weights[ii], g, gw, gb, gin);
        break;
      }
      case LayerKind::MaxPool2d: {
        gin = Tensor(in.shape);
        const auto& argmax = tape.pool_argmax[ii];
        for (std::size_t j = 0; j < g.size(); ++j) gin.v[argmax[j]] += g.v[j];
        break;
      }
      case LayerKind::Flatten: {
        gin = g;
        gin.shape = in.shape;
        break;
      }
      case LayerKind::Dense: {
        Tensor* gw = nullptr;
        Tensor* gb = nullptr;
        if (want_param_grads) {
          grads.weights[ii] = Tensor(graph.weights[ii].shape);
          grads.biases[ii] = Tensor(graph.biases[ii].shape);
          gw = &grads.weights[ii];
          gb = &grads.biases[ii];
        }
        dense_backward(spec, in, graph.weights[ii], g, gw, gb, gin);
        break;
      }
      case LayerKind::Dropout: {
        gin = g;
        const auto& mask = tape.dropout_mask[ii];
        if (!mask.empty()) {
          for (std::size_t j = 0; j < gin.size(); ++j) gin.v[j] *= mask[j];
        }
        break;
      }
      case LayerKind::Activation: {
        gin = g;
        if (spec.act == Activation::Relu) {
          for (std::size_t j = 0; j < gin.size(); ++j) {
            if (in.v[j] <= 0.0) gin.v[j] = 0.0;
          }
        } else if (spec.act == Activation::Tanh) {
          for (std::size_t j = 0; j < gin.size(); ++j) {
            gin.v[j] *= 1.0 - out.v[j] * out.v[j];
          }
        } else {
          const std::size_t cols = gin.shape.back();
          for (std::size_t r = 0; r < gin.size() / cols; ++r) {
            const double* p = out.v.data() + r * cols;
            double* gr = gin.v.data() + r * cols;
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * p[c];
            for (std::size_t c = 0; c < cols; ++c) gr[c] = p[c] * (gr[c] - dot);
          }
        }
        break;
      }
    }
    g = std::move(gin);
  }
  grads.input = std::move(g);
  return grads;
}

double cross_entropy(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw ConfigError("label " + std::to_string(label) +
                      " out of range for " + std::to_string(probs.size()) +
                      " classes");
  }
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ShapeError("probabilities sum to " + std::to_string(sum) +
                     ", expected 1");
  }
  return -std::log(std::max(probs[label], 1e-12));
}

double batch_cross_entropy(const Tensor& probs, std::span<const int> labels,
                           Tensor* grad) {
  if (probs.shape.size() != 2 || probs.shape[0] != labels.size()) {
    throw ShapeError("probability batch and labels disagree");
  }
  const std::size_t N = probs.shape[0], C = probs.shape[1];
  if (grad) *grad = Tensor(probs.shape);
  double loss = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    std::span<const double> row{probs.v.data() + n * C, C};
    loss += cross_entropy(row, labels[n]);
    if (grad) {
      const double p = std::max(row[labels[n]], 1e-12);
      grad->v[n * C + labels[n]] = -1.0 / (p * static_cast<double>(N));
    }
  }
  return loss / static_cast<double>(N);
}

AdamState::AdamState(AdamConfig config, std::vector<std::size_t> block_sizes)
    : config_(config) {
  m_.reserve(block_sizes.size());
  v_.reserve(block_sizes.size());
  for (std::size_t s : block_sizes) {
    m_.emplace_back(s, 0.0);
    v_.emplace_back(s, 0.0);
  }
}

void AdamState::step(std::span<const std::span<double>> params,
                     std::span<const std::span<const double>> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("adam: parameter block count does not match the state");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != m_[b].size() || grads[b].size() != m_[b].size()) {
      throw ShapeError("adam: block " + std::to_string(b) +
                       " size does not match the state");
    }
    double* m = m_[b].data();
    double* v = v_[b].data();
    double* p = params[b].data();
    const double* g = grads[b].data();
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

std::vector<std::span<double>> trainable_params(LayerGraph& graph) {
  std::vector<std::span<double>> out;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    if (graph.layers[i].param_count() > 0 && !graph.layers[i].frozen) {
      out.push_back(graph.weights[i].flat());
      out.push_back(graph.biases[i].flat());
    }
  }
  return out;
}

std::vector<std::size_t> trainable_sizes(const LayerGraph& graph) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    if (graph.layers[i].param_count() > 0 && !graph.layers[i].frozen) {
      out.push_back(graph.weights[i].size());
      out.push_back(graph.biases[i].size());
    }
  }
  return out;
}

std::vector<std::span<const double>> trainable_grads(const LayerGraph& graph,
                                                     const Gradients& grads) {
  std::vector<std::span<const double>> out;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    if (graph.layers[i].param_count() > 0 && !graph.layers[i].frozen) {
      if (grads.weights[i].empty()) {
        throw ShapeError("missing gradient for trainable layer " + std::to_string(i));
      }
      out.push_back(grads.weights[i].flat());
      out.push_back(grads.biases[i].flat());
    }
  }
  return out;
}

void adam_step(LayerGraph& graph, const Gradients& grads, AdamState& state) {
  const auto params = trainable_params(graph);
  const auto gviews = trainable_grads(graph, grads);
  state.step(params, gviews);
  ++graph.revision;
}

namespace {

LayerGraph make_graph(std::string name, std::vector<LayerSpec> layers) {
  LayerGraph g;
  g.name = std::move(name);
  g.layers = std::move(layers);
  g.weights.assign(g.layers.size(), Tensor{});
  g.biases.assign(g.layers.size(), Tensor{});
  return g;
}

LayerSpec relu() { return LayerSpec::activation(Activation::Relu); }
LayerSpec softmax() { return LayerSpec::activation(Activation::Softmax); }

}  // namespace

LayerGraph preset(const std::string& name) {
  using L = LayerSpec;
  if (name == "CM-1") {
    return make_graph(name, {
        L::conv2d(1, 32, 32, 2), relu(), L::maxpool2d(8, 1),
        L::conv2d(32, 64, 16, 2), relu(), L::maxpool2d(8, 1),
        L::conv2d(64, 128, 16, 2), relu(), L::maxpool2d(8, 1),
        L::conv2d(128, 128, 2, 1), relu(), L::maxpool2d(8, 2),
        L::flatten(),
        L::dense(3200, 128), relu(), L::dropout(0.5),
        L::dense(128, 64), relu(), L::dropout(0.25),
        L::dense(64, 32), relu(), L::dropout(0.12),
        L::dense(32, 16), relu(),
        L::dense(16, 2), softmax(),
    });
  }
  if (name == "CM-2") {
    return make_graph(name, {
        L::conv2d(1, 32, 4, 2), relu(), L::maxpool2d(4, 2),
        L::conv2d(32, 64, 8, 2), relu(), L::maxpool2d(2, 2),
        L::conv2d(64, 128, 4, 2), relu(),
        L::flatten(),
        L::dense(2048, 128), relu(), L::dropout(0.5),
        L::dense(128, 64), relu(), L::dropout(0.25),
        L::dense(64, 16), relu(),
        L::dense(16, 2), softmax(),
    });
  }
  if (name == "CM-3") {
    return make_graph(name, {
        L::conv2d(1, 32, 8, 2), relu(), L::maxpool2d(4, 2),
        L::conv2d(32, 64, 4, 2), relu(), L::maxpool2d(4, 1),
        L::conv2d(64, 128, 2, 1), relu(), L::maxpool2d(4, 2),
        L::flatten(),
        L::dense(8192, 128), relu(), L::dropout(0.5),
        L::dense(128, 64), relu(), L::dropout(0.25),
        L::dense(64, 16), relu(),
        L::dense(16, 2), softmax(),
    });
  }
  if (name == "tiny") {
    // 32x32 grayscale input; used by desk-scale training runs.
    return make_graph(name, {
        L::conv2d(1, 8, 5, 2), relu(), L::maxpool2d(2, 2),
        L::conv2d(8, 16, 3, 2), relu(),
        L::flatten(),
        L::dense(144, 32), relu(),
        L::dense(32, 2), softmax(),
    });
  }
  throw ConfigError("unknown preset '" + name +
                    "'; valid presets: CM-1, CM-2, CM-3, tiny");
}

std::vector<std::string> preset_names() { return {"CM-1", "CM-2", "CM-3", "tiny"}; }

std::optional<std::size_t> published_param_count(const std::string& name) {
  if (name == "CM-1") return 1076338u;
  if (name == "CM-2") return 534482u;
  if (name == "CM-3") return 1125842u;
  return std::nullopt;
}

}  // namespace qtl::autonet
