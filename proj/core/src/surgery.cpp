#include "qtl/surgery.hpp"

#include <algorithm>
#include <sstream>

#include "qtl/error.hpp"

namespace qtl::surgery {

namespace {

using autonet::LayerGraph;
using autonet::LayerKind;
using autonet::LayerSpec;

bool tail_is_dense_only(const LayerGraph& graph, std::size_t from) {
  for (std::size_t i = from; i < graph.layers.size(); ++i) {
    const LayerKind k = graph.layers[i].kind;
    if (k != LayerKind::Dense && k != LayerKind::Dropout &&
        k != LayerKind::Activation) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::string qtl_preset_name(QtlPreset preset) {
  switch (preset) {
    case QtlPreset::M1: return "QTL-M-1";
    case QtlPreset::M2: return "QTL-M-2";
    case QtlPreset::M3: return "QTL-M-3";
    case QtlPreset::Custom: return "custom";
  }
  return "custom";
}

QtlPreset qtl_preset_from_name(const std::string& name) {
  if (name == "QTL-M-1") return QtlPreset::M1;
  if (name == "QTL-M-2") return QtlPreset::M2;
  if (name == "QTL-M-3") return QtlPreset::M3;
  if (name == "custom") return QtlPreset::Custom;
  throw ConfigError("unknown transfer preset '" + name +
                    "'; valid: QTL-M-1, QTL-M-2, QTL-M-3, custom");
}

std::vector<std::size_t> available_cut_widths(const autonet::LayerGraph& graph) {
  std::vector<std::size_t> widths;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    if (graph.layers[i].kind == LayerKind::Dense && tail_is_dense_only(graph, i)) {
      widths.push_back(static_cast<std::size_t>(graph.layers[i].in_dim));
    }
  }
  return widths;
}

CutPlan plan_cut(const autonet::LayerGraph& graph, QtlPreset preset,
                 std::size_t custom_width) {
  std::size_t want = 0;
  switch (preset) {
    case QtlPreset::M1: want = 64; break;
    case QtlPreset::M2: want = 128; break;
    case QtlPreset::M3: want = 0; break;  // flatten width, found below
    case QtlPreset::Custom:
      if (custom_width == 0) {
        throw ConfigError("custom cut needs a positive width");
      }
      want = custom_width;
      break;
  }

  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& spec = graph.layers[i];
    if (spec.kind != LayerKind::Dense || !tail_is_dense_only(graph, i)) continue;
    const std::size_t width = static_cast<std::size_t>(spec.in_dim);
    const bool match = preset == QtlPreset::M3 ? true : width == want;
    if (match) {
      return CutPlan{graph.name, i, width, preset};
    }
  }

  std::ostringstream os;
  os << "no cut of width ";
  if (preset == QtlPreset::M3) {
    os << "(flatten output)";
  } else {
    os << want;
  }
  os << " in graph '" << graph.name << "'; available widths:";
  for (std::size_t w : available_cut_widths(graph)) os << " " << w;
  throw ConfigError(os.str());
}

std::size_t replaced_param_sum(const autonet::LayerGraph& graph,
                               const CutPlan& plan) {
  if (plan.cut_index >= graph.layers.size()) {
    throw ConfigError("cut index " + std::to_string(plan.cut_index) +
                      " out of range for graph '" + graph.name + "'");
  }
  std::size_t sum = 0;
  for (std::size_t i = plan.cut_index; i < graph.layers.size(); ++i) {
    sum += graph.layers[i].param_count();
  }
  return sum;
}

std::size_t HybridModel::param_count() const {
  return prefix.param_count() + head.param_count();
}

HybridModel build_hybrid(const autonet::LayerGraph& graph, const CutPlan& plan,
                         const vqc::VqcConfig& config, int n_classes,
                         std::uint64_t seed) {
  if (plan.source != graph.name) {
    throw ConfigError("cut plan was made for graph '" + plan.source +
                      "', not '" + graph.name + "'");
  }
  if (plan.cut_index >= graph.layers.size() ||
      graph.layers[plan.cut_index].kind != LayerKind::Dense ||
      static_cast<std::size_t>(graph.layers[plan.cut_index].in_dim) != plan.n_ip) {
    throw ConfigError("cut plan does not match the graph structure");
  }

  HybridModel model;
  model.plan = plan;
  model.prefix.name = graph.name + "/" + qtl_preset_name(plan.preset);
  model.prefix.layers.assign(graph.layers.begin(),
                             graph.layers.begin() + plan.cut_index);
  model.prefix.weights.assign(graph.weights.begin(),
                              graph.weights.begin() + plan.cut_index);
  model.prefix.biases.assign(graph.biases.begin(),
                             graph.biases.begin() + plan.cut_index);
  model.prefix.revision = graph.revision;
  for (LayerSpec& spec : model.prefix.layers) spec.frozen = true;

  model.head = dressed::make_dressed(static_cast<int>(plan.n_ip), config,
                                     n_classes, seed);
  return model;
}

Tensor prefix_features(const HybridModel& model, const Tensor& batch) {
  Tensor out = autonet::forward(model.prefix, batch, /*train_mode=*/false);
  if (out.shape.size() != 2 ||
      out.shape[1] != static_cast<std::size_t>(model.head.n_inputs)) {
    throw ShapeError("prefix output width does not match the head input");
  }
  return out;
}

Tensor hybrid_forward(const HybridModel& model, const Tensor& batch,
                      std::vector<dressed::DqnTape>* tapes) {
  const Tensor feats = prefix_features(model, batch);
  const std::size_t N = feats.shape[0];
  const std::size_t width = feats.shape[1];
  Tensor probs({N, static_cast<std::size_t>(model.head.n_classes)});
  if (tapes) tapes->assign(N, {});
  for (std::size_t n = 0; n < N; ++n) {
    std::span<const double> row{feats.v.data() + n * width, width};
    std::vector<double> p =
        dressed::dqn_forward(model.head, row, tapes ? &(*tapes)[n] : nullptr);
    std::copy(p.begin(), p.end(),
              probs.v.begin() + n * model.head.n_classes);
  }
  return probs;
}

double reduction_replaced(std::size_t replaced_param_sum,
                          std::size_t dqn_params) {
  if (replaced_param_sum == 0) {
    throw ConfigError("reduction_replaced: replaced parameter sum is zero");
  }
  return 100.0 *
         (static_cast<double>(replaced_param_sum) - static_cast<double>(dqn_params)) /
         static_cast<double>(replaced_param_sum);
}

double reduction_total(std::size_t classical_total, std::size_t hybrid_total) {
  if (classical_total == 0) {
    throw ConfigError("reduction_total: classical total is zero");
  }
  return 100.0 *
         (static_cast<double>(classical_total) - static_cast<double>(hybrid_total)) /
         static_cast<double>(classical_total);
}

ParamReport param_report(const autonet::LayerGraph& graph, QtlPreset preset,
                         const vqc::VqcConfig& config, int n_classes) {
  config.validate();
  const CutPlan plan = plan_cut(graph, preset);

  ParamReport r;
  r.model = graph.name;
  r.qtl = qtl_preset_name(preset);
  r.n_ip = plan.n_ip;
  r.classical_total = graph.param_count();
  r.published_total = autonet::published_param_count(graph.name);
  r.replaced_sum = replaced_param_sum(graph, plan);
  r.dqn_params = dressed::dqn_param_count(static_cast<int>(plan.n_ip),
                                          config.n_qubits, config.n_layers,
                                          n_classes);
  r.hybrid_total = r.classical_total - r.replaced_sum + r.dqn_params;
  if (r.published_total) {
    r.hybrid_total_published_basis =
        *r.published_total - r.replaced_sum + r.dqn_params;
  }
  r.reduction_replaced_pct = reduction_replaced(r.replaced_sum, r.dqn_params);
  const std::size_t base = r.published_total ? *r.published_total : r.classical_total;
  const std::size_t hyb = r.hybrid_total_published_basis
                              ? *r.hybrid_total_published_basis
                              : r.hybrid_total;
  r.reduction_total_pct = reduction_total(base, hyb);
  return r;
}

}  // namespace qtl::surgery
