#include "qtl/datapipe.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "qtl/error.hpp"
#include "qtl/rng.hpp"
#include "wire.hpp"

namespace fs = std::filesystem;

namespace qtl::datapipe {

namespace {

constexpr int kMaxPatchesPerImage = 4;
constexpr int kMaxAttemptsPerImage = 200;

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_int(const std::string& text, int& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(t, &pos);
  } catch (...) {
    return false;
  }
  if (pos != t.size()) return false;
  out = static_cast<int>(v);
  return true;
}

/// Inner text of the first <tag>...</tag> at or after `from`; empty optional
/// when absent. Advances `from` past the close tag on success.
bool find_tag(const std::string& doc, const std::string& tag,
              std::size_t& from, std::string& inner) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";
  const std::size_t a = doc.find(open, from);
  if (a == std::string::npos) return false;
  const std::size_t b = doc.find(close, a + open.size());
  if (b == std::string::npos) return false;
  inner = doc.substr(a + open.size(), b - a - open.size());
  from = b + close.size();
  return true;
}

struct ParsedAnnotation {
  std::string class_label;
  std::vector<Box> boxes;
};

ParsedAnnotation parse_annotation_xml(const std::string& doc) {
  ParsedAnnotation out;
  std::size_t cursor = 0;
  while (true) {
    const std::size_t obj = doc.find("<object>", cursor);
    if (obj == std::string::npos) break;
    const std::size_t obj_end = doc.find("</object>", obj);
    if (obj_end == std::string::npos) {
      throw IoError("unterminated <object> element");
    }
    const std::string body = doc.substr(obj, obj_end - obj);
    std::size_t p = 0;
    std::string name;
    if (!find_tag(body, "name", p, name)) {
      throw IoError("<object> without <name>");
    }
    name = trim(name);
    if (out.class_label.empty()) out.class_label = name;

    std::size_t bb = 0;
    std::string bnd;
    if (!find_tag(body, "bndbox", bb, bnd)) {
      throw IoError("<object> without <bndbox>");
    }
    Box box;
    std::size_t q = 0;
    std::string val;
    const struct { const char* tag; int* field; } fields[] = {
        {"xmin", &box.xmin}, {"ymin", &box.ymin},
        {"xmax", &box.xmax}, {"ymax", &box.ymax}};
    for (const auto& f : fields) {
      q = 0;
      if (!find_tag(bnd, f.tag, q, val) || !parse_int(val, *f.field)) {
        throw IoError(std::string("<bndbox> missing or non-integer <") +
                      f.tag + ">");
      }
    }
    out.boxes.push_back(box);
    cursor = obj_end + 9;
  }
  return out;
}

void validate_boxes(const AnnotatedImage& img) {
  for (const Box& b : img.boxes) {
    if (b.xmin < 0 || b.ymin < 0 || b.xmin >= b.xmax || b.ymin >= b.ymax ||
        b.xmax > img.raster.width || b.ymax > img.raster.height) {
      std::ostringstream os;
      os << "box (" << b.xmin << "," << b.ymin << "," << b.xmax << ","
         << b.ymax << ") invalid for " << img.raster.width << "x"
         << img.raster.height << " image";
      throw IoError(os.str());
    }
  }
}

int read_pnm_token(std::istream& in, const std::string& path) {
  // Skips whitespace and '#' comment lines between header tokens.
  while (true) {
    const int c = in.peek();
    if (c == EOF) throw IoError(path + ": truncated PGM header");
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    break;
  }
  int value = 0;
  if (!(in >> value)) throw IoError(path + ": malformed PGM header");
  return value;
}

std::size_t f64_as_count(double v, const std::string& what,
                         const std::string& path) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
    throw IoError(path + ": header field " + what + " is not a valid count");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

bool boxes_intersect(const Box& a, const Box& b) {
  return a.xmin < b.xmax && b.xmin < a.xmax && a.ymin < b.ymax &&
         b.ymin < a.ymax;
}

Raster read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') {
    throw IoError(path.string() + ": not a binary PGM (P5) file");
  }
  const int width = read_pnm_token(in, path.string());
  const int height = read_pnm_token(in, path.string());
  const int maxval = read_pnm_token(in, path.string());
  if (width < 1 || height < 1 || maxval < 1 || maxval > 255) {
    throw IoError(path.string() + ": unsupported PGM dimensions or depth");
  }
  in.get();  // single whitespace after maxval
  Raster r;
  r.width = width;
  r.height = height;
  r.pixels.resize(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(r.pixels.data()),
          static_cast<std::streamsize>(r.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(r.pixels.size())) {
    throw IoError(path.string() + ": truncated pixel data");
  }
  return r;
}

void write_pgm(const fs::path& path, const Raster& raster) {
  if (raster.width < 1 || raster.height < 1 ||
      raster.pixels.size() !=
          static_cast<std::size_t>(raster.width) * raster.height) {
    throw ConfigError("raster shape does not match its pixel buffer");
  }
  std::string bytes = "P5\n" + std::to_string(raster.width) + " " +
                      std::to_string(raster.height) + "\n255\n";
  bytes.append(reinterpret_cast<const char*>(raster.pixels.data()),
               raster.pixels.size());
  wire::write_file_atomic(path, bytes);
}

Raster resize_bilinear(const Raster& src, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) {
    throw ConfigError("resize target must be positive");
  }
  Raster dst;
  dst.width = target_w;
  dst.height = target_h;
  dst.pixels.resize(static_cast<std::size_t>(target_w) * target_h);
  const double sx = static_cast<double>(src.width) / target_w;
  const double sy = static_cast<double>(src.height) / target_h;
  for (int y = 0; y < target_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < target_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      const double p00 = src.pixels[static_cast<std::size_t>(y0) * src.width + x0];
      const double p01 = src.pixels[static_cast<std::size_t>(y0) * src.width + x1];
      const double p10 = src.pixels[static_cast<std::size_t>(y1) * src.width + x0];
      const double p11 = src.pixels[static_cast<std::size_t>(y1) * src.width + x1];
      const double v = (1 - wy) * ((1 - wx) * p00 + wx * p01) +
                       wy * ((1 - wx) * p10 + wx * p11);
      dst.pixels[static_cast<std::size_t>(y) * target_w + x] =
          static_cast<std::uint8_t>(std::clamp(v + 0.5, 0.0, 255.0));
    }
  }
  return dst;
}

LoadReport load_annotated_dir(const fs::path& images_dir,
                              const fs::path& annotations_dir) {
  if (!fs::is_directory(images_dir)) {
    throw IoError("images directory does not exist: " + images_dir.string());
  }
  if (!fs::is_directory(annotations_dir)) {
    throw IoError("annotations directory does not exist: " +
                  annotations_dir.string());
  }
  std::vector<fs::path> image_paths;
  for (const auto& entry : fs::directory_iterator(images_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      image_paths.push_back(entry.path());
    }
  }
  if (image_paths.empty()) {
    throw IoError("no .pgm images in " + images_dir.string());
  }
  std::sort(image_paths.begin(), image_paths.end());

  LoadReport report;
  for (const fs::path& img_path : image_paths) {
    const std::string stem = img_path.stem().string();
    const fs::path xml_path = annotations_dir / (stem + ".xml");
    try {
      AnnotatedImage img;
      img.name = stem;
      img.raster = read_pgm(img_path);
      if (!fs::is_regular_file(xml_path)) {
        throw IoError("missing annotation " + xml_path.string());
      }
      const ParsedAnnotation ann =
          parse_annotation_xml(wire::read_file_bytes(xml_path));
      img.class_label = ann.class_label;
      img.boxes = ann.boxes;
      validate_boxes(img);
      report.images.push_back(std::move(img));
    } catch (const std::exception& e) {
      report.issues.push_back({img_path.filename().string(), e.what()});
    }
  }
  return report;
}

std::vector<MinedPatch> mine_normal_patches(
    std::span<const AnnotatedImage> images, int target_size, int min_patch,
    std::uint64_t seed) {
  if (min_patch < 1 || target_size < min_patch) {
    throw ConfigError("need target_size >= min_patch >= 1");
  }
  Rng rng(seed);
  std::vector<MinedPatch> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const AnnotatedImage& img = images[i];
    const int w = img.raster.width, h = img.raster.height;
    if (w < min_patch || h < min_patch) continue;
    int accepted = 0;
    for (int attempt = 0; attempt < kMaxAttemptsPerImage &&
                          accepted < kMaxPatchesPerImage; ++attempt) {
      Box rect;
      if (attempt == 0) {
        rect = {0, 0, w, h};
      } else {
        const int sw = min_patch + static_cast<int>(rng.uniform_int(
                                       static_cast<std::uint64_t>(w - min_patch) + 1));
        const int sh = min_patch + static_cast<int>(rng.uniform_int(
                                       static_cast<std::uint64_t>(h - min_patch) + 1));
        const int x = static_cast<int>(rng.uniform_int(
            static_cast<std::uint64_t>(w - sw) + 1));
        const int y = static_cast<int>(rng.uniform_int(
            static_cast<std::uint64_t>(h - sh) + 1));
        rect = {x, y, x + sw, y + sh};
      }
      bool clean = true;
      for (const Box& b : img.boxes) {
        if (boxes_intersect(rect, b)) {
          clean = false;
          break;
        }
      }
      if (!clean) continue;
      Raster crop;
      crop.width = rect.xmax - rect.xmin;
      crop.height = rect.ymax - rect.ymin;
      crop.pixels.resize(static_cast<std::size_t>(crop.width) * crop.height);
      for (int y = 0; y < crop.height; ++y) {
        const std::uint8_t* srow =
            img.raster.pixels.data() +
            static_cast<std::size_t>(rect.ymin + y) * w + rect.xmin;
        std::copy(srow, srow + crop.width,
                  crop.pixels.begin() + static_cast<std::size_t>(y) * crop.width);
      }
      out.push_back({i, rect, resize_bilinear(crop, target_size, target_size)});
      ++accepted;
    }
  }
  return out;
}

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
  const std::size_t hw = height * width;
  Tensor t({indices.size(), 1, height, width});
  for (std::size_t n = 0; n < indices.size(); ++n) {
    if (indices[n] >= count()) {
      throw ConfigError("sample index " + std::to_string(indices[n]) +
                        " out of range");
    }
    std::copy(pixels.begin() + indices[n] * hw,
              pixels.begin() + (indices[n] + 1) * hw, t.v.begin() + n * hw);
  }
  return t;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.height = height;
  out.width = width;
  out.mean = mean;
  out.std_dev = std_dev;
  const std::size_t hw = height * width;
  out.labels.reserve(indices.size());
  out.pixels.reserve(indices.size() * hw);
  for (std::size_t idx : indices) {
    if (idx >= count()) {
      throw ConfigError("sample index " + std::to_string(idx) + " out of range");
    }
    out.labels.push_back(labels[idx]);
    out.pixels.insert(out.pixels.end(), pixels.begin() + idx * hw,
                      pixels.begin() + (idx + 1) * hw);
  }
  return out;
}

std::array<std::size_t, 2> class_counts(const Dataset& dataset) {
  std::array<std::size_t, 2> counts{0, 0};
  for (int label : dataset.labels) {
    if (label != 0 && label != 1) {
      throw ConfigError("non-binary label " + std::to_string(label));
    }
    ++counts[static_cast<std::size_t>(label)];
  }
  return counts;
}

namespace {

Dataset assemble_standardized(std::size_t height, std::size_t width,
                              std::vector<int> labels,
                              std::vector<double> raw_pixels) {
  Dataset ds;
  ds.height = height;
  ds.width = width;
  ds.labels = std::move(labels);
  ds.pixels = std::move(raw_pixels);
  const std::size_t n = ds.pixels.size();
  double mean = 0.0;
  for (double x : ds.pixels) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : ds.pixels) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  if (!(sd > 0.0)) {
    throw ConfigError("dataset pixels are constant; cannot standardize");
  }
  ds.mean = mean;
  ds.std_dev = sd;
  for (double& x : ds.pixels) x = (x - mean) / sd;
  return ds;
}

}  // namespace

Dataset build_binary_dataset(std::span<const AnnotatedImage> images,
                             std::span<const std::string> dropped_classes,
                             std::uint64_t seed, int min_patch) {
  auto dropped = [&](const std::string& label) {
    return std::find(dropped_classes.begin(), dropped_classes.end(), label) !=
           dropped_classes.end();
  };

  std::vector<AnnotatedImage> retained;
  std::vector<std::size_t> anomalous;  // indices into `retained`
  for (const AnnotatedImage& img : images) {
    if (dropped(img.class_label)) continue;
    if (!img.boxes.empty()) anomalous.push_back(retained.size());
    retained.push_back(img);
  }
  if (anomalous.empty()) {
    throw ConfigError("no anomalous images after dropping classes");
  }

  const int side = retained[anomalous[0]].raster.width;
  for (std::size_t idx : anomalous) {
    const Raster& r = retained[idx].raster;
    if (r.width != side || r.height != side) {
      throw ShapeError("anomalous images must share one square size; '" +
                       retained[idx].name + "' is " + std::to_string(r.width) +
                       "x" + std::to_string(r.height));
    }
  }

  const std::vector<MinedPatch> mined = mine_normal_patches(
      retained, side, std::min(min_patch, side), seed);
  if (mined.size() < anomalous.size()) {
    throw ConfigError("insufficient normal patches: need " +
                      std::to_string(anomalous.size()) + ", mined " +
                      std::to_string(mined.size()) + " (short by " +
                      std::to_string(anomalous.size() - mined.size()) + ")");
  }

  Rng rng(seed + 1);
  std::vector<std::size_t> order(mined.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  order.resize(anomalous.size());
  std::sort(order.begin(), order.end());

  const std::size_t hw = static_cast<std::size_t>(side) * side;
  std::vector<int> labels;
  std::vector<double> raw;
  labels.reserve(2 * anomalous.size());
  raw.reserve(2 * anomalous.size() * hw);
  for (std::size_t idx : anomalous) {
    labels.push_back(1);
    for (std::uint8_t p : retained[idx].raster.pixels) raw.push_back(p);
  }
  for (std::size_t idx : order) {
    labels.push_back(0);
    for (std::uint8_t p : mined[idx].patch.pixels) raw.push_back(p);
  }
  return assemble_standardized(side, side, std::move(labels), std::move(raw));
}

namespace {

// Per-class quotas: an even base, extras to the currently smallest folds
// (ties to the lowest index).
std::vector<std::vector<std::size_t>> stratified_deal(
    const std::vector<int>& labels, int k, Rng& rng) {
  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<std::vector<std::size_t>> folds(k);
  std::vector<std::size_t> totals(k, 0);
  for (auto& members : by_class) {
    rng.shuffle(members);
    std::vector<std::size_t> quota(k, members.size() / k);
    std::size_t rem = members.size() % k;
    while (rem-- > 0) {
      std::size_t best = 0;
      for (std::size_t f = 1; f < static_cast<std::size_t>(k); ++f) {
        if (totals[f] + quota[f] < totals[best] + quota[best]) best = f;
      }
      ++quota[best];
    }
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
      for (std::size_t j = 0; j < quota[f]; ++j) {
        folds[f].push_back(members[pos++]);
      }
      totals[f] += quota[f];
    }
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

}  // namespace

std::pair<Dataset, Dataset> holdout_split(const Dataset& dataset,
                                          double test_fraction,
                                          std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1), got " +
                      std::to_string(test_fraction));
  }
  const std::size_t n = dataset.count();
  if (n < 2) throw ConfigError("holdout needs at least 2 samples");
  const std::size_t test_total = std::min(
      n - 1, std::max<std::size_t>(
                 1, static_cast<std::size_t>(
                        std::floor(n * test_fraction + 0.5))));

  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < n; ++i) {
    by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
  }
  Rng rng(seed);
  for (auto& members : by_class) rng.shuffle(members);

  // Largest-remainder split of the test quota across classes.
  std::array<std::size_t, 2> quota{0, 0};
  std::array<double, 2> exact{0.0, 0.0};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    exact[c] = static_cast<double>(by_class[c].size()) * test_total /
               static_cast<double>(n);
    quota[c] = static_cast<std::size_t>(std::floor(exact[c]));
    assigned += quota[c];
  }
  while (assigned < test_total) {
    const std::size_t c =
        (exact[0] - std::floor(exact[0])) >= (exact[1] - std::floor(exact[1]))
            ? 0 : 1;
    if (quota[c] < by_class[c].size()) {
      ++quota[c];
      exact[c] = std::floor(exact[c]);  // consume this class's remainder
    } else {
      ++quota[1 - c];
    }
    ++assigned;
  }

  std::vector<std::size_t> test_idx, train_idx;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t j = 0; j < by_class[c].size(); ++j) {
      (j < quota[c] ? test_idx : train_idx).push_back(by_class[c][j]);
    }
  }
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {dataset.subset(train_idx), dataset.subset(test_idx)};
}

FoldSplit kfold_split(const Dataset& dataset, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k must be >= 2, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > dataset.count()) {
    throw ConfigError("k = " + std::to_string(k) + " exceeds dataset size " +
                      std::to_string(dataset.count()));
  }
  class_counts(dataset);  // validates binary labels
  Rng rng(seed);
  FoldSplit split;
  split.seed = seed;
  split.folds = stratified_deal(dataset.labels, k, rng);
  return split;
}

Dataset synth_dataset(int n_per_class, int image_size, std::uint64_t seed) {
  if (n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
  if (image_size < 8) throw ConfigError("image_size must be >= 8");
  const std::size_t S = static_cast<std::size_t>(image_size);
  const std::size_t total = static_cast<std::size_t>(n_per_class) * 2;
  Rng rng(seed);
  std::vector<int> labels;
  std::vector<double> raw;
  labels.reserve(total);
  raw.reserve(total * S * S);
  constexpr double kTwoPi = 6.28318530717958647692;
  for (std::size_t i = 0; i < total; ++i) {
    const int label = i < static_cast<std::size_t>(n_per_class) ? 1 : 0;
    labels.push_back(label);
    double kx[3], ky[3], phase[3], amp[3];
    for (int c = 0; c < 3; ++c) {
      kx[c] = 1.0 + static_cast<double>(rng.uniform_int(2));
      ky[c] = 1.0 + static_cast<double>(rng.uniform_int(2));
      phase[c] = rng.uniform(0.0, kTwoPi);
      amp[c] = rng.uniform(0.03, 0.06);
    }
    double cx = 0.0, cy = 0.0;
    if (label == 1) {
      const double jitter = static_cast<double>(image_size) / 16.0;
      cx = image_size / 2.0 + rng.uniform(-jitter, jitter);
      cy = image_size / 2.0 + rng.uniform(-jitter, jitter);
    }
    const double sigma = image_size / 4.0;
    for (std::size_t y = 0; y < S; ++y) {
      for (std::size_t x = 0; x < S; ++x) {
        double v = 0.5;
        for (int c = 0; c < 3; ++c) {
          v += amp[c] * std::sin(kTwoPi * (kx[c] * x + ky[c] * y) /
                                     static_cast<double>(image_size) +
                                 phase[c]);
        }
        if (label == 1) {
          const double dx = static_cast<double>(x) - cx;
          const double dy = static_cast<double>(y) - cy;
          v += 0.4 * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
        raw.push_back(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return assemble_standardized(S, S, std::move(labels), std::move(raw));
}

void save_dataset(const fs::path& path, const Dataset& dataset) {
  if (dataset.pixels.size() !=
      dataset.count() * dataset.height * dataset.width) {
    throw ConfigError("dataset pixel buffer does not match its shape");
  }
  wire::Writer w;
  w.bytes = "QTLD";
  w.u16(1);
  w.f64(static_cast<double>(dataset.count()));
  w.f64(static_cast<double>(dataset.height));
  w.f64(static_cast<double>(dataset.width));
  w.f64(dataset.mean);
  w.f64(dataset.std_dev);
  const std::size_t hw = dataset.height * dataset.width;
  for (std::size_t i = 0; i < dataset.count(); ++i) {
    w.u8(static_cast<std::uint8_t>(dataset.labels[i]));
    for (std::size_t j = 0; j < hw; ++j) {
      w.f64(dataset.pixels[i * hw + j]);
    }
  }
  wire::write_file_atomic(path, w.bytes);
}

Dataset load_dataset(const fs::path& path) {
  wire::Reader reader(wire::read_file_bytes(path), path.string());
  if (reader.take(4) != "QTLD") {
    throw IoError(path.string() + ": bad magic, not a dataset cache");
  }
  const std::uint16_t version = reader.u16();
  if (version != 1) {
    throw IoError(path.string() + ": unsupported dataset cache version " +
                  std::to_string(version) + " (expected 1)");
  }
  Dataset ds;
  const std::size_t count = f64_as_count(reader.f64(), "count", path.string());
  ds.height = f64_as_count(reader.f64(), "height", path.string());
  ds.width = f64_as_count(reader.f64(), "width", path.string());
  ds.mean = reader.f64();
  ds.std_dev = reader.f64();
  if (count == 0 || ds.height == 0 || ds.width == 0) {
    throw IoError(path.string() + ": empty dataset cache");
  }
  const std::size_t hw = ds.height * ds.width;
  ds.labels.reserve(count);
  ds.pixels.reserve(count * hw);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t label = reader.u8();
    if (label > 1) {
      throw IoError(path.string() + ": non-binary label in sample " +
                    std::to_string(i));
    }
    ds.labels.push_back(label);
    for (std::size_t j = 0; j < hw; ++j) ds.pixels.push_back(reader.f64());
  }
  if (!reader.exhausted()) {
    throw IoError(path.string() + ": trailing bytes after the last sample");
  }
  return ds;
}

}  // namespace qtl::datapipe
