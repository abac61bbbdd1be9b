#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qtl/autonet.hpp"
#include "qtl/datapipe.hpp"
#include "qtl/surgery.hpp"

namespace qtl::harness {

struct TrainConfig {
  std::size_t batch_size = 64;
  int epochs = 120;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  int restarts = 1;
  bool normalize_loss = false;
  double test_fraction = 0.2;  // internal holdout used by train_classical

  void validate() const;
};

/// Batch 64, 120 epochs, lr 0.001 (classical block of the defaults table).
TrainConfig classical_defaults();
/// Batch 64, 40 epochs, lr 0.0008 (hybrid block of the defaults table).
TrainConfig transfer_defaults();

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double loss = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Derives the ratio fields from confusion counts (positive = anomalous = 1).
Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn,
                            std::size_t fn, double loss);

struct EpochStat {
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
};

struct ConvergenceRecord {
  std::vector<EpochStat> epochs;
  /// 2*(x - min)/(max - min) of test_loss; filled when requested, all zeros
  /// for a constant series.
  std::vector<double> normalized_test_loss;
};

std::vector<double> normalize_losses(std::span<const double> losses);

struct ClassicalRun {
  autonet::LayerGraph model;  // best restart
  std::size_t best_restart = 0;
  std::vector<ConvergenceRecord> records;   // one per restart
  std::vector<Metrics> restart_metrics;     // final test metrics per restart
  Metrics final_metrics;                    // of the best restart
};

/// Trains `restarts` independently seeded copies of the preset on an internal
/// stratified holdout of `dataset`; returns the restart with the highest
/// final test F1 (ties: lower test loss, then lower restart index).
ClassicalRun train_classical(const std::string& preset_name,
                             const datapipe::Dataset& dataset,
                             const TrainConfig& config);

/// Trains only the dressed head of `hybrid` (the prefix must be fully frozen;
/// its activations are computed once per dataset and reused).
ConvergenceRecord train_qtl(surgery::HybridModel& hybrid,
                            const datapipe::Dataset& train,
                            const datapipe::Dataset& test,
                            const TrainConfig& config);

Metrics evaluate_graph(const autonet::LayerGraph& graph,
                       const datapipe::Dataset& dataset);
Metrics evaluate_hybrid(const surgery::HybridModel& model,
                        const datapipe::Dataset& dataset);

struct FoldOutcome {
  Metrics metrics;
  ConvergenceRecord record;
};

using FoldRunner = std::function<FoldOutcome(
    const datapipe::Dataset& train, const datapipe::Dataset& test,
    std::uint64_t fold_seed, int fold_index)>;

struct CvSummary {
  std::vector<FoldOutcome> folds;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;
  double mean_accuracy = 0.0;
};

/// Stratified k-fold driver; fold i trains on the other folds and evaluates
/// on fold i with fold_seed = config.seed + i.
CvSummary cross_validate(const FoldRunner& runner,
                         const datapipe::Dataset& dataset, int k,
                         const TrainConfig& config);

// Checkpoint files (magic "QTLC"): versioned, self-describing, bitwise
// round-trip. The header records total parameter count, seed, config hash
// and epochs completed.
struct CheckpointMeta {
  std::uint64_t param_count = 0;  // filled on save
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t epochs_completed = 0;
};

enum class CheckpointKind { Classical, Hybrid };

void save_checkpoint(const std::filesystem::path& path,
                     const autonet::LayerGraph& graph, CheckpointMeta meta);
void save_checkpoint(const std::filesystem::path& path,
                     const surgery::HybridModel& model, CheckpointMeta meta);

CheckpointKind peek_checkpoint_kind(const std::filesystem::path& path);

struct ClassicalCheckpoint {
  autonet::LayerGraph graph;
  CheckpointMeta meta;
};
struct HybridCheckpoint {
  surgery::HybridModel model;
  CheckpointMeta meta;
};

ClassicalCheckpoint load_classical_checkpoint(const std::filesystem::path& path);
HybridCheckpoint load_hybrid_checkpoint(const std::filesystem::path& path);

/// Header `epoch,train_loss,test_loss,test_acc[,test_loss_norm]`, one row per
/// epoch, full double precision, atomic write.
void write_convergence_csv(const std::filesystem::path& path,
                           const ConvergenceRecord& record);
ConvergenceRecord read_convergence_csv(const std::filesystem::path& path);

std::uint64_t fnv1a(std::string_view text);
/// Canonical key=value line for hashing and logs.
std::string describe(const TrainConfig& config);
std::uint64_t config_hash(const TrainConfig& config);

/// One JSON object with every Metrics field plus the config hash.
std::string metrics_json(const Metrics& metrics, std::uint64_t config_hash);

}  // namespace qtl::harness
