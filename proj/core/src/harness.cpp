#include "qtl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "qtl/error.hpp"
#include "qtl/rng.hpp"
#include "wire.hpp"

namespace fs = std::filesystem;

namespace qtl::harness {

namespace {

constexpr std::size_t kEvalChunk = 64;
constexpr std::uint16_t kCheckpointVersion = 1;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

struct EvalAccum {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double loss_sum = 0.0;
  std::size_t n = 0;
};

void accumulate_eval(const Tensor& probs, std::span<const int> labels,
                     EvalAccum& acc) {
  const std::size_t N = probs.shape[0], C = probs.shape[1];
  for (std::size_t i = 0; i < N; ++i) {
    std::span<const double> row{probs.v.data() + i * C, C};
    acc.loss_sum += autonet::cross_entropy(row, labels[i]);
    std::size_t pred = 0;
    for (std::size_t c = 1; c < C; ++c) {
      if (row[c] > row[pred]) pred = c;
    }
    const bool positive = pred == 1;
    const bool truth = labels[i] == 1;
    if (positive && truth) ++acc.tp;
    else if (positive && !truth) ++acc.fp;
    else if (!positive && truth) ++acc.fn;
    else ++acc.tn;
    ++acc.n;
  }
}

Metrics finish_eval(const EvalAccum& acc) {
  Metrics m = metrics_from_counts(acc.tp, acc.fp, acc.tn, acc.fn,
                                  acc.n ? acc.loss_sum / acc.n : 0.0);
  return m;
}

std::vector<int> labels_at(const datapipe::Dataset& ds,
                           std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = ds.labels[idx[i]];
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive and finite");
  }
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
}

TrainConfig classical_defaults() {
  TrainConfig c;
  c.batch_size = 64;
  c.epochs = 120;
  c.learning_rate = 1e-3;
  return c;
}

TrainConfig transfer_defaults() {
  TrainConfig c;
  c.batch_size = 64;
  c.epochs = 40;
  c.learning_rate = 8e-4;
  return c;
}

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn,
                            std::size_t fn, double loss) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  m.loss = loss;
  const std::size_t total = tp + fp + tn + fn;
  m.accuracy = total ? static_cast<double>(tp + tn) / total : 0.0;
  m.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
  m.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

std::vector<double> normalize_losses(std::span<const double> losses) {
  std::vector<double> out(losses.size(), 0.0);
  if (losses.empty()) return out;
  const auto [mn, mx] = std::minmax_element(losses.begin(), losses.end());
  const double span = *mx - *mn;
  if (span <= 0.0) return out;  // constant series stays all zero
  for (std::size_t i = 0; i < losses.size(); ++i) {
    out[i] = 2.0 * (losses[i] - *mn) / span;
  }
  return out;
}

Metrics evaluate_graph(const autonet::LayerGraph& graph,
                       const datapipe::Dataset& dataset) {
  EvalAccum acc;
  const std::vector<std::size_t> all = iota_indices(dataset.count());
  for (std::size_t start = 0; start < all.size(); start += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, all.size() - start);
    std::span<const std::size_t> chunk{all.data() + start, n};
    const Tensor probs =
        autonet::forward(graph, dataset.batch(chunk), /*train_mode=*/false);
    const std::vector<int> labels = labels_at(dataset, chunk);
    accumulate_eval(probs, labels, acc);
  }
  return finish_eval(acc);
}

Metrics evaluate_hybrid(const surgery::HybridModel& model,
                        const datapipe::Dataset& dataset) {
  EvalAccum acc;
  const std::vector<std::size_t> all = iota_indices(dataset.count());
  for (std::size_t start = 0; start < all.size(); start += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, all.size() - start);
    std::span<const std::size_t> chunk{all.data() + start, n};
    const Tensor probs = surgery::hybrid_forward(model, dataset.batch(chunk));
    const std::vector<int> labels = labels_at(dataset, chunk);
    accumulate_eval(probs, labels, acc);
  }
  return finish_eval(acc);
}

namespace {

struct RestartResult {
  autonet::LayerGraph graph;
  ConvergenceRecord record;
  Metrics final_metrics;
};

RestartResult run_one_classical(const std::string& preset_name,
                                const datapipe::Dataset& train,
                                const datapipe::Dataset& test,
                                const TrainConfig& config,
                                std::uint64_t seed) {
  RestartResult result;
  result.graph = autonet::preset(preset_name);
  result.graph.init_params(seed);
  Rng rng(seed);
  autonet::AdamState adam({config.learning_rate, 0.9, 0.999, 1e-8},
                          autonet::trainable_sizes(result.graph));
  std::vector<std::size_t> order = iota_indices(train.count());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      std::span<const std::size_t> chunk{order.data() + start, n};
      const Tensor x = train.batch(chunk);
      const std::vector<int> labels = labels_at(train, chunk);
      autonet::Tape tape;
      const Tensor probs =
          autonet::forward(result.graph, x, /*train_mode=*/true, &tape, &rng);
      Tensor grad;
      const double loss = autonet::batch_cross_entropy(probs, labels, &grad);
      const autonet::Gradients grads =
          autonet::backward(result.graph, tape, grad);
      autonet::adam_step(result.graph, grads, adam);
      loss_sum += loss * static_cast<double>(n);
    }
    const Metrics test_metrics = evaluate_graph(result.graph, test);
    result.record.epochs.push_back({loss_sum / train.count(),
                                    test_metrics.loss, test_metrics.accuracy});
    result.final_metrics = test_metrics;
  }
  if (config.epochs == 0) {
    result.final_metrics = evaluate_graph(result.graph, test);
  }
  if (config.normalize_loss) {
    std::vector<double> losses;
    losses.reserve(result.record.epochs.size());
    for (const EpochStat& e : result.record.epochs) losses.push_back(e.test_loss);
    result.record.normalized_test_loss = normalize_losses(losses);
  }
  return result;
}

}  // namespace

ClassicalRun train_classical(const std::string& preset_name,
                             const datapipe::Dataset& dataset,
                             const TrainConfig& config) {
  config.validate();
  if (config.batch_size > dataset.count()) {
    throw ConfigError("batch_size " + std::to_string(config.batch_size) +
                      " exceeds dataset size " +
                      std::to_string(dataset.count()));
  }
  {
    // Fails before any training when the preset cannot consume the images.
    const autonet::LayerGraph probe = autonet::preset(preset_name);
    autonet::infer_shapes(probe, {1, dataset.height, dataset.width});
  }
  auto [train, test] =
      datapipe::holdout_split(dataset, config.test_fraction, config.seed);

  ClassicalRun run;
  std::vector<RestartResult> results;
  results.reserve(config.restarts);
  for (int r = 0; r < config.restarts; ++r) {
    results.push_back(run_one_classical(preset_name, train, test, config,
                                        config.seed + static_cast<std::uint64_t>(r)));
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    const Metrics& a = results[r].final_metrics;
    const Metrics& b = results[best].final_metrics;
    if (a.f1 > b.f1 || (a.f1 == b.f1 && a.loss < b.loss)) best = r;
  }

  run.best_restart = best;
  for (RestartResult& r : results) {
    run.records.push_back(std::move(r.record));
    run.restart_metrics.push_back(r.final_metrics);
  }
  run.final_metrics = results[best].final_metrics;
  run.model = std::move(results[best].graph);
  return run;
}

namespace {

/// Frozen-prefix activations for a whole dataset, chunked; {N, n_ip}.
Tensor cached_prefix_features(const surgery::HybridModel& hybrid,
                              const datapipe::Dataset& ds) {
  const std::size_t n_ip = static_cast<std::size_t>(hybrid.head.n_inputs);
  Tensor out({ds.count(), n_ip});
  const std::vector<std::size_t> all = iota_indices(ds.count());
  for (std::size_t start = 0; start < all.size(); start += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, all.size() - start);
    std::span<const std::size_t> chunk{all.data() + start, n};
    const Tensor feats = surgery::prefix_features(hybrid, ds.batch(chunk));
    std::copy(feats.v.begin(), feats.v.end(),
              out.v.begin() + start * n_ip);
  }
  return out;
}

void add_into(dressed::DqnGradients& acc, const dressed::DqnGradients& g) {
  auto add = [](std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  add(acc.pre_w, g.pre_w);
  add(acc.pre_b, g.pre_b);
  add(acc.vqc_weights.angles, g.vqc_weights.angles);
  add(acc.post_w, g.post_w);
  add(acc.post_b, g.post_b);
}

dressed::DqnGradients zero_grads(const dressed::DressedQuantumNet& net) {
  dressed::DqnGradients g;
  g.pre_w.assign(net.pre_w.size(), 0.0);
  g.pre_b.assign(net.pre_b.size(), 0.0);
  g.vqc_weights = vqc::VqcWeights::zeros(net.vqc_config.n_layers,
                                         net.vqc_config.n_qubits);
  g.post_w.assign(net.post_w.size(), 0.0);
  g.post_b.assign(net.post_b.size(), 0.0);
  g.input.assign(net.n_inputs, 0.0);
  return g;
}

/// Head-only evaluation over cached features.
Metrics evaluate_head(const dressed::DressedQuantumNet& head,
                      const Tensor& features, std::span<const int> labels) {
  const std::size_t N = features.shape[0], W = features.shape[1];
  EvalAccum acc;
  Tensor probs({N, static_cast<std::size_t>(head.n_classes)});
  for (std::size_t i = 0; i < N; ++i) {
    std::span<const double> row{features.v.data() + i * W, W};
    const std::vector<double> p = dressed::dqn_forward(head, row);
    std::copy(p.begin(), p.end(), probs.v.begin() + i * head.n_classes);
  }
  accumulate_eval(probs, labels, acc);
  return finish_eval(acc);
}

}  // namespace

ConvergenceRecord train_qtl(surgery::HybridModel& hybrid,
                            const datapipe::Dataset& train,
                            const datapipe::Dataset& test,
                            const TrainConfig& config) {
  config.validate();
  for (const autonet::LayerSpec& spec : hybrid.prefix.layers) {
    if (spec.param_count() > 0 && !spec.frozen) {
      throw ConfigError("hybrid prefix contains an unfrozen layer (" +
                        spec.describe() + "); transfer training requires a "
                        "fully frozen prefix");
    }
  }
  if (config.batch_size > train.count()) {
    throw ConfigError("batch_size " + std::to_string(config.batch_size) +
                      " exceeds training set size " +
                      std::to_string(train.count()));
  }

  const Tensor feat_train = cached_prefix_features(hybrid, train);
  const Tensor feat_test = cached_prefix_features(hybrid, test);
  const std::size_t n_ip = feat_train.shape[1];
  const std::size_t n_classes = static_cast<std::size_t>(hybrid.head.n_classes);

  Rng rng(config.seed);
  autonet::AdamState adam({config.learning_rate, 0.9, 0.999, 1e-8},
                          dressed::dqn_block_sizes(hybrid.head));
  std::vector<std::size_t> order = iota_indices(train.count());

  ConvergenceRecord record;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      std::span<const std::size_t> chunk{order.data() + start, n};

      std::vector<dressed::DqnTape> tapes(n);
      Tensor probs({n, n_classes});
      std::vector<int> labels(n);
      for (std::size_t i = 0; i < n; ++i) {
        labels[i] = train.labels[chunk[i]];
        std::span<const double> row{feat_train.v.data() + chunk[i] * n_ip, n_ip};
        const std::vector<double> p =
            dressed::dqn_forward(hybrid.head, row, &tapes[i]);
        std::copy(p.begin(), p.end(), probs.v.begin() + i * n_classes);
      }
      Tensor grad;
      const double loss = autonet::batch_cross_entropy(probs, labels, &grad);
      dressed::DqnGradients acc = zero_grads(hybrid.head);
      for (std::size_t i = 0; i < n; ++i) {
        std::span<const double> grow{grad.v.data() + i * n_classes, n_classes};
        add_into(acc, dressed::dqn_backward(hybrid.head, tapes[i], grow));
      }
      auto params = dressed::dqn_params(hybrid.head);
      adam.step(params, dressed::dqn_grads(acc));
      loss_sum += loss * static_cast<double>(n);
    }
    const Metrics test_metrics =
        evaluate_head(hybrid.head, feat_test, test.labels);
    record.epochs.push_back({loss_sum / train.count(), test_metrics.loss,
                             test_metrics.accuracy});
  }
  if (config.normalize_loss) {
    std::vector<double> losses;
    losses.reserve(record.epochs.size());
    for (const EpochStat& e : record.epochs) losses.push_back(e.test_loss);
    record.normalized_test_loss = normalize_losses(losses);
  }
  return record;
}

CvSummary cross_validate(const FoldRunner& runner,
                         const datapipe::Dataset& dataset, int k,
                         const TrainConfig& config) {
  config.validate();
  const datapipe::FoldSplit split = datapipe::kfold_split(dataset, k, config.seed);
  CvSummary summary;
  for (int i = 0; i < k; ++i) {
    std::vector<std::size_t> train_idx;
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      train_idx.insert(train_idx.end(), split.folds[j].begin(),
                       split.folds[j].end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    const datapipe::Dataset train = dataset.subset(train_idx);
    const datapipe::Dataset test = dataset.subset(split.folds[i]);
    summary.folds.push_back(
        runner(train, test, config.seed + static_cast<std::uint64_t>(i), i));
  }
  double f1_sum = 0.0, acc_sum = 0.0;
  for (const FoldOutcome& f : summary.folds) {
    f1_sum += f.metrics.f1;
    acc_sum += f.metrics.accuracy;
  }
  summary.mean_f1 = f1_sum / k;
  summary.mean_accuracy = acc_sum / k;
  double var = 0.0;
  for (const FoldOutcome& f : summary.folds) {
    var += (f.metrics.f1 - summary.mean_f1) * (f.metrics.f1 - summary.mean_f1);
  }
  summary.std_f1 = std::sqrt(var / k);
  return summary;
}

namespace {

void serialize_graph(wire::Writer& w, const autonet::LayerGraph& graph) {
  w.str(graph.name);
  w.u32(static_cast<std::uint32_t>(graph.layers.size()));
  for (const autonet::LayerSpec& s : graph.layers) {
    w.u8(static_cast<std::uint8_t>(s.kind));
    switch (s.kind) {
      case autonet::LayerKind::Conv2d:
        w.i32(s.in_ch); w.i32(s.out_ch); w.i32(s.kernel); w.i32(s.stride);
        break;
      case autonet::LayerKind::MaxPool2d:
        w.i32(s.kernel); w.i32(s.stride);
        break;
      case autonet::LayerKind::Flatten:
        break;
      case autonet::LayerKind::Dense:
        w.i32(s.in_dim); w.i32(s.out_dim);
        break;
      case autonet::LayerKind::Dropout:
        w.f64(s.p);
        break;
      case autonet::LayerKind::Activation:
        w.u8(static_cast<std::uint8_t>(s.act));
        break;
    }
    w.u8(s.frozen ? 1 : 0);
  }
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    if (graph.layers[i].param_count() == 0) continue;
    for (double v : graph.weights[i].v) w.f64(v);
    for (double v : graph.biases[i].v) w.f64(v);
  }
}

autonet::LayerGraph deserialize_graph(wire::Reader& r) {
  autonet::LayerGraph graph;
  graph.name = r.str();
  const std::uint32_t n_layers = r.u32();
  using L = autonet::LayerSpec;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const auto kind = static_cast<autonet::LayerKind>(r.u8());
    L spec{};
    switch (kind) {
      case autonet::LayerKind::Conv2d: {
        const int ic = r.i32(), oc = r.i32(), k = r.i32(), s = r.i32();
        spec = L::conv2d(ic, oc, k, s);
        break;
      }
      case autonet::LayerKind::MaxPool2d: {
        const int k = r.i32(), s = r.i32();
        spec = L::maxpool2d(k, s);
        break;
      }
      case autonet::LayerKind::Flatten:
        spec = L::flatten();
        break;
      case autonet::LayerKind::Dense: {
        const int in = r.i32(), out = r.i32();
        spec = L::dense(in, out);
        break;
      }
      case autonet::LayerKind::Dropout:
        spec = L::dropout(r.f64());
        break;
      case autonet::LayerKind::Activation:
        spec = L::activation(static_cast<autonet::Activation>(r.u8()));
        break;
      default:
        throw IoError(r.path() + ": unknown layer kind in checkpoint");
    }
    spec.frozen = r.u8() != 0;
    graph.layers.push_back(spec);
  }
  graph.weights.assign(graph.layers.size(), Tensor{});
  graph.biases.assign(graph.layers.size(), Tensor{});
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const L& s = graph.layers[i];
    if (s.param_count() == 0) continue;
    if (s.kind == autonet::LayerKind::Conv2d) {
      graph.weights[i] = Tensor({static_cast<std::size_t>(s.out_ch),
                                 static_cast<std::size_t>(s.in_ch),
                                 static_cast<std::size_t>(s.kernel),
                                 static_cast<std::size_t>(s.kernel)});
      graph.biases[i] = Tensor({static_cast<std::size_t>(s.out_ch)});
    } else {
      graph.weights[i] = Tensor({static_cast<std::size_t>(s.out_dim),
                                 static_cast<std::size_t>(s.in_dim)});
      graph.biases[i] = Tensor({static_cast<std::size_t>(s.out_dim)});
    }
    for (double& v : graph.weights[i].v) v = r.f64();
    for (double& v : graph.biases[i].v) v = r.f64();
  }
  return graph;
}

void write_header(wire::Writer& w, CheckpointKind kind,
                  const CheckpointMeta& meta) {
  w.bytes = "QTLC";
  w.u16(kCheckpointVersion);
  w.u8(kind == CheckpointKind::Classical ? 0 : 1);
  w.u64(meta.param_count);
  w.u64(meta.seed);
  w.u64(meta.config_hash);
  w.u64(meta.epochs_completed);
}

CheckpointMeta read_header(wire::Reader& r, CheckpointKind expected) {
  if (r.take(4) != "QTLC") {
    throw IoError(r.path() + ": bad magic, not a checkpoint");
  }
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion) {
    throw IoError(r.path() + ": unsupported checkpoint version " +
                  std::to_string(version) + " (expected " +
                  std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint8_t kind = r.u8();
  const std::uint8_t want = expected == CheckpointKind::Classical ? 0 : 1;
  if (kind != want) {
    throw IoError(r.path() + ": checkpoint holds a " +
                  (kind == 0 ? std::string("classical model")
                             : std::string("hybrid model")) +
                  ", not the requested kind");
  }
  CheckpointMeta meta;
  meta.param_count = r.u64();
  meta.seed = r.u64();
  meta.config_hash = r.u64();
  meta.epochs_completed = r.u64();
  return meta;
}

void serialize_vqc_config(wire::Writer& w, const vqc::VqcConfig& c) {
  w.i32(c.n_qubits);
  w.i32(c.n_layers);
  w.u32(static_cast<std::uint32_t>(c.ranges.size()));
  for (int r : c.ranges) w.i32(r);
  w.u8(c.hadamard_prefix ? 1 : 0);
  w.f64(c.input_scale);
  w.u8(c.output_activation == vqc::OutputActivation::Relu ? 1 : 0);
}

vqc::VqcConfig deserialize_vqc_config(wire::Reader& r) {
  vqc::VqcConfig c;
  c.n_qubits = r.i32();
  c.n_layers = r.i32();
  const std::uint32_t nr = r.u32();
  c.ranges.resize(nr);
  for (std::uint32_t i = 0; i < nr; ++i) c.ranges[i] = r.i32();
  c.hadamard_prefix = r.u8() != 0;
  c.input_scale = r.f64();
  c.output_activation =
      r.u8() ? vqc::OutputActivation::Relu : vqc::OutputActivation::None;
  c.validate();
  return c;
}

}  // namespace

void save_checkpoint(const fs::path& path, const autonet::LayerGraph& graph,
                     CheckpointMeta meta) {
  meta.param_count = graph.param_count();
  wire::Writer w;
  write_header(w, CheckpointKind::Classical, meta);
  serialize_graph(w, graph);
  wire::write_file_atomic(path, w.bytes);
}

void save_checkpoint(const fs::path& path, const surgery::HybridModel& model,
                     CheckpointMeta meta) {
  meta.param_count = model.param_count();
  wire::Writer w;
  write_header(w, CheckpointKind::Hybrid, meta);
  w.str(model.plan.source);
  w.u64(model.plan.cut_index);
  w.u64(model.plan.n_ip);
  w.u8(static_cast<std::uint8_t>(model.plan.preset));
  serialize_graph(w, model.prefix);
  w.i32(model.head.n_inputs);
  w.i32(model.head.n_classes);
  serialize_vqc_config(w, model.head.vqc_config);
  for (double v : model.head.pre_w) w.f64(v);
  for (double v : model.head.pre_b) w.f64(v);
  for (double v : model.head.vqc_weights.angles) w.f64(v);
  for (double v : model.head.post_w) w.f64(v);
  for (double v : model.head.post_b) w.f64(v);
  wire::write_file_atomic(path, w.bytes);
}

CheckpointKind peek_checkpoint_kind(const fs::path& path) {
  wire::Reader r(wire::read_file_bytes(path), path.string());
  if (r.take(4) != "QTLC") {
    throw IoError(path.string() + ": bad magic, not a checkpoint");
  }
  r.u16();
  return r.u8() == 0 ? CheckpointKind::Classical : CheckpointKind::Hybrid;
}

ClassicalCheckpoint load_classical_checkpoint(const fs::path& path) {
  wire::Reader r(wire::read_file_bytes(path), path.string());
  ClassicalCheckpoint out;
  out.meta = read_header(r, CheckpointKind::Classical);
  out.graph = deserialize_graph(r);
  if (!r.exhausted()) {
    throw IoError(path.string() + ": trailing bytes after the model");
  }
  if (out.graph.param_count() != out.meta.param_count) {
    throw IoError(path.string() + ": header parameter count " +
                  std::to_string(out.meta.param_count) +
                  " does not match the stored model (" +
                  std::to_string(out.graph.param_count()) + ")");
  }
  return out;
}

HybridCheckpoint load_hybrid_checkpoint(const fs::path& path) {
  wire::Reader r(wire::read_file_bytes(path), path.string());
  HybridCheckpoint out;
  out.meta = read_header(r, CheckpointKind::Hybrid);
  out.model.plan.source = r.str();
  out.model.plan.cut_index = r.u64();
  out.model.plan.n_ip = r.u64();
  out.model.plan.preset = static_cast<surgery::QtlPreset>(r.u8());
  out.model.prefix = deserialize_graph(r);

  dressed::DressedQuantumNet& head = out.model.head;
  head.n_inputs = r.i32();
  head.n_classes = r.i32();
  head.vqc_config = deserialize_vqc_config(r);
  const std::size_t nq = head.vqc_config.n_qubits;
  head.pre_w.resize(nq * head.n_inputs);
  head.pre_b.resize(nq);
  head.vqc_weights = vqc::VqcWeights::zeros(head.vqc_config.n_layers,
                                            head.vqc_config.n_qubits);
  head.post_w.resize(static_cast<std::size_t>(head.n_classes) * nq);
  head.post_b.resize(head.n_classes);
  for (double& v : head.pre_w) v = r.f64();
  for (double& v : head.pre_b) v = r.f64();
  for (double& v : head.vqc_weights.angles) v = r.f64();
  for (double& v : head.post_w) v = r.f64();
  for (double& v : head.post_b) v = r.f64();
  if (!r.exhausted()) {
    throw IoError(path.string() + ": trailing bytes after the model");
  }
  if (out.model.param_count() != out.meta.param_count) {
    throw IoError(path.string() + ": header parameter count does not match");
  }
  return out;
}

void write_convergence_csv(const fs::path& path,
                           const ConvergenceRecord& record) {
  const bool norm = !record.normalized_test_loss.empty();
  if (norm && record.normalized_test_loss.size() != record.epochs.size()) {
    throw ConfigError("normalized loss column length mismatch");
  }
  std::string out = "epoch,train_loss,test_loss,test_acc";
  if (norm) out += ",test_loss_norm";
  out += "\n";
  for (std::size_t i = 0; i < record.epochs.size(); ++i) {
    const EpochStat& e = record.epochs[i];
    out += std::to_string(i + 1) + "," + fmt_double(e.train_loss) + "," +
           fmt_double(e.test_loss) + "," + fmt_double(e.test_accuracy);
    if (norm) out += "," + fmt_double(record.normalized_test_loss[i]);
    out += "\n";
  }
  wire::write_file_atomic(path, out);
}

ConvergenceRecord read_convergence_csv(const fs::path& path) {
  std::istringstream in(wire::read_file_bytes(path));
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty CSV");
  bool norm = false;
  if (line == "epoch,train_loss,test_loss,test_acc,test_loss_norm") {
    norm = true;
  } else if (line != "epoch,train_loss,test_loss,test_acc") {
    throw IoError(path.string() + ": unrecognized CSV header '" + line + "'");
  }
  ConvergenceRecord record;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != (norm ? 5u : 4u)) {
      throw IoError(path.string() + ": malformed CSV row '" + line + "'");
    }
    try {
      record.epochs.push_back(
          {std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3])});
      if (norm) record.normalized_test_loss.push_back(std::stod(cells[4]));
    } catch (const std::exception&) {
      throw IoError(path.string() + ": non-numeric CSV cell in '" + line + "'");
    }
  }
  return record;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string describe(const TrainConfig& config) {
  std::string out;
  out += "batch_size=" + std::to_string(config.batch_size);
  out += ";epochs=" + std::to_string(config.epochs);
  out += ";learning_rate=" + fmt_double(config.learning_rate);
  out += ";seed=" + std::to_string(config.seed);
  out += ";restarts=" + std::to_string(config.restarts);
  out += ";normalize_loss=" + std::to_string(config.normalize_loss ? 1 : 0);
  out += ";test_fraction=" + fmt_double(config.test_fraction);
  return out;
}

std::uint64_t config_hash(const TrainConfig& config) {
  return fnv1a(describe(config));
}

std::string metrics_json(const Metrics& metrics, std::uint64_t hash) {
  nlohmann::ordered_json j;
  j["accuracy"] = metrics.accuracy;
  j["precision"] = metrics.precision;
  j["recall"] = metrics.recall;
  j["f1"] = metrics.f1;
  j["loss"] = metrics.loss;
  j["tp"] = metrics.tp;
  j["fp"] = metrics.fp;
  j["tn"] = metrics.tn;
  j["fn"] = metrics.fn;
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  j["config_hash"] = std::string(buf);
  return j.dump(2) + "\n";
}

}  // namespace qtl::harness
