#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qtl/autonet.hpp"
#include "qtl/dressed.hpp"

namespace qtl::surgery {

// The three published transfer configurations plus free-form cuts. M1 grafts
// the head where the feature width is 64, M2 where it is 128, M3 right after
// flatten (every dense layer replaced).
enum class QtlPreset { M1, M2, M3, Custom };

std::string qtl_preset_name(QtlPreset preset);
QtlPreset qtl_preset_from_name(const std::string& name);

struct CutPlan {
  std::string source;      // graph name
  std::size_t cut_index = 0;  // first replaced layer (a dense layer)
  std::size_t n_ip = 0;       // feature width entering the head
  QtlPreset preset = QtlPreset::Custom;
};

/// Finds the cut point for a preset (or an explicit width with Custom).
/// The cut must start a suffix made only of dense/dropout/activation layers.
/// Throws ConfigError listing the available widths when none matches.
CutPlan plan_cut(const autonet::LayerGraph& graph, QtlPreset preset,
                 std::size_t custom_width = 0);

/// Widths at which the graph can be cut (dense in_dims with all-dense tails).
std::vector<std::size_t> available_cut_widths(const autonet::LayerGraph& graph);

/// Sum of the parameters in the replaced tail.
std::size_t replaced_param_sum(const autonet::LayerGraph& graph,
                               const CutPlan& plan);

struct HybridModel {
  autonet::LayerGraph prefix;  // every layer frozen, run in eval mode
  dressed::DressedQuantumNet head;
  CutPlan plan;

  std::size_t param_count() const;
};

/// Copies the prefix verbatim (frozen), discards the tail and attaches a
/// freshly seeded dressed head reading the n_ip-wide cut features.
HybridModel build_hybrid(const autonet::LayerGraph& graph, const CutPlan& plan,
                         const vqc::VqcConfig& config, int n_classes,
                         std::uint64_t seed);

/// Frozen prefix in eval mode on a batch; output {N, n_ip}.
Tensor prefix_features(const HybridModel& model, const Tensor& batch);

/// Full hybrid pass: head over prefix features. Output {N, n_classes};
/// optional per-sample tapes for training the head.
Tensor hybrid_forward(const HybridModel& model, const Tensor& batch,
                      std::vector<dressed::DqnTape>* tapes = nullptr);

/// 100 * (replaced - dqn) / replaced. Throws on replaced == 0.
double reduction_replaced(std::size_t replaced_param_sum, std::size_t dqn_params);

/// 100 * (classical - hybrid) / classical. Throws on classical == 0.
double reduction_total(std::size_t classical_total, std::size_t hybrid_total);

// Parameter accounting for one model/configuration pair. hybrid_total uses
// the architecture as built; the published-basis variant substitutes the
// published classical total where one exists, which is how the comparison
// table's hybrid rows are constructed.
struct ParamReport {
  std::string model;
  std::string qtl;
  std::size_t n_ip = 0;
  std::size_t classical_total = 0;
  std::optional<std::size_t> published_total;
  std::size_t replaced_sum = 0;
  std::size_t dqn_params = 0;
  std::size_t hybrid_total = 0;
  std::optional<std::size_t> hybrid_total_published_basis;
  double reduction_replaced_pct = 0.0;
  double reduction_total_pct = 0.0;  // published basis when available
};

ParamReport param_report(const autonet::LayerGraph& graph, QtlPreset preset,
                         const vqc::VqcConfig& config, int n_classes);

}  // namespace qtl::surgery
