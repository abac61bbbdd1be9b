#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qtl/tensor.hpp"

namespace qtl::datapipe {

// Half-open pixel rectangle: [xmin, xmax) x [ymin, ymax).
struct Box {
  int xmin = 0, ymin = 0, xmax = 0, ymax = 0;
};

bool boxes_intersect(const Box& a, const Box& b);

struct Raster {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

Raster read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Raster& raster);
Raster resize_bilinear(const Raster& src, int target_w, int target_h);

struct AnnotatedImage {
  std::string name;  // file stem
  std::string class_label;
  Raster raster;
  std::vector<Box> boxes;
};

struct LoadIssue {
  std::string file;
  std::string message;
};

struct LoadReport {
  std::vector<AnnotatedImage> images;
  std::vector<LoadIssue> issues;
};

/// Reads `<images_dir>/*.pgm` with matching `<annotations_dir>/<stem>.xml`
/// bounding-box documents. Per-file problems (missing annotation, malformed
/// XML, out-of-bounds boxes) go to the report; an absent or pgm-less
/// directory throws IoError.
LoadReport load_annotated_dir(const std::filesystem::path& images_dir,
                              const std::filesystem::path& annotations_dir);

struct MinedPatch {
  std::size_t source = 0;  // index into the input image list
  Box rect;                // source-coordinate rectangle, disjoint from boxes
  Raster patch;            // resized to target_size x target_size
};

/// Defect-free rectangles: per image, the full frame first when it qualifies,
/// then rejection-sampled random rectangles (sides >= min_patch), at most 4
/// accepted from at most 200 attempts, bilinear-resized to target_size.
std::vector<MinedPatch> mine_normal_patches(
    std::span<const AnnotatedImage> images, int target_size, int min_patch,
    std::uint64_t seed);

// Standardized binary dataset. `pixels` holds count*H*W values transformed as
// (x - mean) / std_dev; labels are 0 = normal, 1 = anomalous.
struct Dataset {
  std::size_t height = 0, width = 0;
  double mean = 0.0;
  double std_dev = 1.0;
  std::vector<int> labels;
  std::vector<double> pixels;

  std::size_t count() const { return labels.size(); }
  /// Batch tensor {n, 1, H, W} for the given sample indices.
  Tensor batch(std::span<const std::size_t> indices) const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// {normal count, anomalous count}.
std::array<std::size_t, 2> class_counts(const Dataset& dataset);

/// Anomalous class: every annotated image whose label is not dropped.
/// Normal class: an equal-count random selection of patches mined from the
/// retained images. The assembled set is standardized as one population.
Dataset build_binary_dataset(std::span<const AnnotatedImage> images,
                             std::span<const std::string> dropped_classes,
                             std::uint64_t seed, int min_patch = 32);

/// Stratified holdout; test size = round-half-up(count * test_fraction).
std::pair<Dataset, Dataset> holdout_split(const Dataset& dataset,
                                          double test_fraction,
                                          std::uint64_t seed);

struct FoldSplit {
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> folds;  // disjoint, covering
};

/// Stratified k folds with sizes differing by at most 1.
FoldSplit kfold_split(const Dataset& dataset, int k, std::uint64_t seed);

/// Deterministic desk-scale data: smooth sinusoid textures (normal) and the
/// same textures plus a bright centered blob (anomalous), standardized.
/// Anomalous samples come first.
Dataset synth_dataset(int n_per_class, int image_size, std::uint64_t seed);

/// Versioned binary cache (magic "QTLD"). Writes are atomic.
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace qtl::datapipe
