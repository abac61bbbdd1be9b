#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qtl/datapipe.hpp"
#include "qtl/error.hpp"
#include "qtl/harness.hpp"
#include "qtl/surgery.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace qtl;

namespace {

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  bool json = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "run configuration file");
  auto* s = cmd->add_option("--seed", c.seed, "master RNG seed");
  cmd->add_option("--out", c.out, "output file or directory");
  cmd->add_flag("--json", c.json, "emit one JSON document on stdout");
  s->each([&c](const std::string&) { c.seed_set = true; });
}

cli::RunConfig load_cfg(const Common& c) {
  if (c.config_path.empty()) return cli::RunConfig();
  return cli::RunConfig::load(c.config_path);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

// Timestamps are confined to this sidecar log so run outputs stay
// byte-reproducible.
void append_run_log(const fs::path& dir, const std::string& message) {
  std::ofstream log(dir / "run.log", std::ios::app);
  char buf[32];
  const std::time_t t = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm_utc);
  log << buf << "Z " << message << "\n";
}

std::string group_digits(std::size_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  const std::size_t n = digits.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && (n - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string fmt_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", v);
  return buf;
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

harness::TrainConfig train_from_cfg(const cli::RunConfig& cfg,
                                    harness::TrainConfig base) {
  base.batch_size = static_cast<std::size_t>(
      cfg.get_u64("train.batch_size", base.batch_size));
  base.epochs = static_cast<int>(cfg.get_int("train.epochs", base.epochs));
  base.learning_rate = cfg.get_num("train.learning_rate", base.learning_rate);
  base.seed = cfg.get_u64("train.seed", base.seed);
  base.restarts = static_cast<int>(cfg.get_int("train.restarts", base.restarts));
  base.normalize_loss = cfg.get_bool("train.normalize_loss", base.normalize_loss);
  base.test_fraction = cfg.get_num("train.test_fraction", base.test_fraction);
  return base;
}

vqc::VqcConfig vqc_from_cfg(const cli::RunConfig& cfg) {
  vqc::VqcConfig v;
  v.n_qubits = static_cast<int>(cfg.get_int("vqc.qubits", v.n_qubits));
  v.n_layers = static_cast<int>(cfg.get_int("vqc.layers", v.n_layers));
  for (const std::string& r : cfg.get_list("vqc.ranges", {})) {
    v.ranges.push_back(std::stoi(r));
  }
  v.hadamard_prefix = cfg.get_bool("vqc.hadamard", v.hadamard_prefix);
  v.input_scale = cfg.get_num("vqc.input_scale", v.input_scale);
  v.output_activation = cfg.get_bool("vqc.output_relu", false)
                            ? vqc::OutputActivation::Relu
                            : vqc::OutputActivation::None;
  return v;
}

std::string vqc_describe(const vqc::VqcConfig& v) {
  std::string out = "qubits=" + std::to_string(v.n_qubits) +
                    ";layers=" + std::to_string(v.n_layers) + ";ranges=";
  for (std::size_t i = 0; i < v.ranges.size(); ++i) {
    out += (i ? "," : "") + std::to_string(v.ranges[i]);
  }
  out += ";hadamard=" + std::to_string(v.hadamard_prefix ? 1 : 0);
  out += ";input_scale=" + fmt_num(v.input_scale);
  out += ";output_relu=" +
         std::to_string(v.output_activation == vqc::OutputActivation::Relu ? 1 : 0);
  return out;
}

void require_file(const std::string& what, const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw ConfigError(what + " not found: " + path.string());
  }
}

// ---------------------------------------------------------------- dataset --

struct DatasetBuildArgs {
  Common common;
  std::vector<std::string> synthetic_kv;
  std::string neu_det_root;
  std::vector<std::string> drop;
  int min_patch = 32;
};

void run_dataset_build(const DatasetBuildArgs& a) {
  const cli::RunConfig cfg = load_cfg(a.common);
  const std::string out_path = !a.common.out.empty()
                                   ? a.common.out
                                   : cfg.get_str("dataset.cache", "dataset.qtld");
  std::uint64_t seed = a.common.seed_set ? a.common.seed
                                         : cfg.get_u64("dataset.seed", 0);

  datapipe::Dataset ds;
  std::vector<datapipe::LoadIssue> issues;
  std::string source;

  std::string root = a.neu_det_root;
  if (root.empty() && cfg.get_str("dataset.source", "") == "neu-det") {
    root = cfg.get_str("dataset.root", "");
  }

  if (!a.synthetic_kv.empty() ||
      (root.empty() && cfg.get_str("dataset.source", "synthetic") == "synthetic")) {
    int n = static_cast<int>(cfg.get_int("dataset.n", 100));
    int size = static_cast<int>(cfg.get_int("dataset.size", 32));
    for (const std::string& kv : a.synthetic_kv) {
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("--synthetic expects k=v pairs, got '" + kv + "'");
      }
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "n") n = std::stoi(val);
      else if (key == "size") size = std::stoi(val);
      else if (key == "seed") seed = std::stoull(val);
      else throw ConfigError("--synthetic: unknown key '" + key +
                             "' (valid: n, size, seed)");
    }
    ds = datapipe::synth_dataset(n, size, seed);
    source = "synthetic";
  } else {
    if (root.empty()) {
      throw ConfigError("no dataset source: pass --synthetic or --neu-det");
    }
    const fs::path images = fs::path(root) / "IMAGES";
    const fs::path annotations = fs::path(root) / "ANNOTATIONS";
    datapipe::LoadReport report = datapipe::load_annotated_dir(images, annotations);
    issues = report.issues;
    std::vector<std::string> drop = a.drop;
    if (drop.empty()) {
      drop = cfg.get_list("dataset.drop", {"pitted_surface", "crazing"});
    }
    const int min_patch =
        a.min_patch != 32
            ? a.min_patch
            : static_cast<int>(cfg.get_int("dataset.min_patch", 32));
    ds = datapipe::build_binary_dataset(report.images, drop, seed, min_patch);
    source = "neu-det";
  }

  datapipe::save_dataset(out_path, ds);
  const auto counts = datapipe::class_counts(ds);

  for (const datapipe::LoadIssue& issue : issues) {
    std::cerr << "skipped " << issue.file << ": " << issue.message << "\n";
  }
  if (a.common.json) {
    ordered_json j;
    j["path"] = out_path;
    j["source"] = source;
    j["samples"] = ds.count();
    j["normal"] = counts[0];
    j["anomalous"] = counts[1];
    j["height"] = ds.height;
    j["width"] = ds.width;
    j["mean"] = ds.mean;
    j["std"] = ds.std_dev;
    j["issues"] = ordered_json::array();
    for (const auto& issue : issues) {
      j["issues"].push_back({{"file", issue.file}, {"message", issue.message}});
    }
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "wrote " << out_path << ": " << ds.count() << " samples ("
              << counts[1] << " anomalous, " << counts[0] << " normal), "
              << ds.height << "x" << ds.width << ", mean " << fmt_num(ds.mean)
              << ", std " << fmt_num(ds.std_dev);
    if (!issues.empty()) std::cout << ", " << issues.size() << " file(s) skipped";
    std::cout << "\n";
  }
}

void run_dataset_inspect(const Common& common, const std::string& cache_arg) {
  const cli::RunConfig cfg = load_cfg(common);
  const std::string path = !cache_arg.empty()
                               ? cache_arg
                               : cfg.get_str("dataset.cache", "dataset.qtld");
  require_file("dataset cache", path);
  const datapipe::Dataset ds = datapipe::load_dataset(path);
  const auto counts = datapipe::class_counts(ds);
  if (common.json) {
    ordered_json j;
    j["path"] = path;
    j["samples"] = ds.count();
    j["normal"] = counts[0];
    j["anomalous"] = counts[1];
    j["height"] = ds.height;
    j["width"] = ds.width;
    j["mean"] = ds.mean;
    j["std"] = ds.std_dev;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << path << ": " << ds.count() << " samples, balance "
              << counts[1] << "/" << counts[0] << " (anomalous/normal), "
              << ds.height << "x" << ds.width << ", mean " << fmt_num(ds.mean)
              << ", std " << fmt_num(ds.std_dev) << "\n";
  }
}

// -------------------------------------------------------- train-classical --

struct TrainClassicalArgs {
  Common common;
  std::string cache;
  std::string model;
  std::optional<int> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
  std::optional<int> restarts;
  std::optional<double> test_fraction;
  bool normalize_loss = false;
};

void run_train_classical(const TrainClassicalArgs& a) {
  const cli::RunConfig cfg = load_cfg(a.common);
  const std::string cache =
      !a.cache.empty() ? a.cache : cfg.get_str("dataset.cache", "");
  if (cache.empty()) {
    throw ConfigError("no dataset cache: pass --cache or set dataset.cache");
  }
  require_file("dataset cache", cache);
  const std::string model =
      !a.model.empty() ? a.model : cfg.get_str("model.preset", "CM-2");

  harness::TrainConfig tc = train_from_cfg(cfg, harness::classical_defaults());
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.batch_size) tc.batch_size = *a.batch_size;
  if (a.lr) tc.learning_rate = *a.lr;
  if (a.restarts) tc.restarts = *a.restarts;
  if (a.test_fraction) tc.test_fraction = *a.test_fraction;
  if (a.normalize_loss) tc.normalize_loss = true;
  if (a.common.seed_set) tc.seed = a.common.seed;

  const fs::path out_dir =
      !a.common.out.empty() ? a.common.out : cfg.get_str("output.dir", ".");
  fs::create_directories(out_dir);

  const datapipe::Dataset ds = datapipe::load_dataset(cache);
  const harness::ClassicalRun run = harness::train_classical(model, ds, tc);

  const std::uint64_t hash =
      harness::fnv1a(harness::describe(tc) + ";model=" + model);
  harness::CheckpointMeta meta;
  meta.seed = tc.seed;
  meta.config_hash = hash;
  meta.epochs_completed = static_cast<std::uint64_t>(tc.epochs);
  harness::save_checkpoint(out_dir / "model.qtlc", run.model, meta);
  for (std::size_t r = 0; r < run.records.size(); ++r) {
    harness::write_convergence_csv(
        out_dir / ("restart_" + std::to_string(r) + ".csv"), run.records[r]);
  }
  write_text_atomic(out_dir / "metrics.json",
                    harness::metrics_json(run.final_metrics, hash));
  append_run_log(out_dir, "train-classical model=" + model +
                              " seed=" + std::to_string(tc.seed));

  if (a.common.json) {
    ordered_json j;
    j["model"] = model;
    j["checkpoint"] = (out_dir / "model.qtlc").string();
    j["best_restart"] = run.best_restart;
    j["f1"] = run.final_metrics.f1;
    j["accuracy"] = run.final_metrics.accuracy;
    j["loss"] = run.final_metrics.loss;
    j["restart_f1"] = ordered_json::array();
    for (const harness::Metrics& m : run.restart_metrics) {
      j["restart_f1"].push_back(m.f1);
    }
    j["config_hash"] = hash_hex(hash);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "trained " << model << " (" << tc.restarts << " restart(s), "
              << tc.epochs << " epochs): best restart " << run.best_restart
              << ", test F1 " << fmt_num(run.final_metrics.f1) << ", accuracy "
              << fmt_num(run.final_metrics.accuracy) << "\n"
              << "checkpoint: " << (out_dir / "model.qtlc").string() << "\n";
  }
}

// ----------------------------------------------------------------- params --

ordered_json param_report_json(const surgery::ParamReport& r,
                               const vqc::VqcConfig& v, int n_classes) {
  ordered_json j;
  j["model"] = r.model;
  j["qtl"] = r.qtl;
  j["n_ip"] = r.n_ip;
  j["classical_total"] = r.classical_total;
  if (r.published_total) j["published_total"] = *r.published_total;
  else j["published_total"] = nullptr;
  j["replaced"] = r.replaced_sum;
  const std::size_t pre =
      r.n_ip * static_cast<std::size_t>(v.n_qubits) + v.n_qubits;
  const std::size_t circuit =
      static_cast<std::size_t>(3) * v.n_qubits * v.n_layers;
  const std::size_t post =
      static_cast<std::size_t>(v.n_qubits) * n_classes + n_classes;
  j["dqn"] = {{"total", r.dqn_params},
              {"pre_net", pre},
              {"vqc", circuit},
              {"post_net", post}};
  j["hybrid_total"] = r.hybrid_total;
  if (r.hybrid_total_published_basis) {
    j["hybrid_total_published_basis"] = *r.hybrid_total_published_basis;
  } else {
    j["hybrid_total_published_basis"] = nullptr;
  }
  j["reduction_replaced_pct"] = r.reduction_replaced_pct;
  j["reduction_total_pct"] = r.reduction_total_pct;
  return j;
}

void print_param_report_human(const surgery::ParamReport& r,
                              const vqc::VqcConfig& v, int n_classes) {
  const std::size_t pre =
      r.n_ip * static_cast<std::size_t>(v.n_qubits) + v.n_qubits;
  const std::size_t circuit =
      static_cast<std::size_t>(3) * v.n_qubits * v.n_layers;
  const std::size_t post =
      static_cast<std::size_t>(v.n_qubits) * n_classes + n_classes;
  std::cout << r.qtl << " on " << r.model << " (cut width " << r.n_ip << ")\n"
            << "  dressed head: " << group_digits(r.dqn_params) << " = "
            << group_digits(pre) << " (pre-net) + " << group_digits(circuit)
            << " (vqc) + " << group_digits(post) << " (post-net)\n"
            << "  replaced dense tail: " << group_digits(r.replaced_sum)
            << " -> " << group_digits(r.dqn_params) << " (reduction "
            << fmt_pct(r.reduction_replaced_pct) << ")\n";
  const std::size_t base =
      r.published_total ? *r.published_total : r.classical_total;
  const std::size_t hyb = r.hybrid_total_published_basis
                              ? *r.hybrid_total_published_basis
                              : r.hybrid_total;
  std::cout << "  whole model: " << group_digits(base) << " -> "
            << group_digits(hyb) << " (reduction "
            << fmt_pct(r.reduction_total_pct) << ")\n";
}

struct ParamsArgs {
  Common common;
  std::string model;
  std::string qtl;
  std::size_t width = 0;
  int qubits = 5;
  int layers = 3;
  int classes = 2;
};

void run_params(const ParamsArgs& a) {
  autonet::LayerGraph graph;
  if (fs::is_regular_file(a.model)) {
    graph = harness::load_classical_checkpoint(a.model).graph;
  } else {
    graph = autonet::preset(a.model);
  }
  const std::size_t total = graph.param_count();
  const std::optional<std::size_t> published =
      autonet::published_param_count(graph.name);
  const bool discrepancy = published && *published != total;

  vqc::VqcConfig v;
  v.n_qubits = a.qubits;
  v.n_layers = a.layers;

  std::optional<surgery::ParamReport> report;
  if (!a.qtl.empty() || a.width > 0) {
    const surgery::QtlPreset preset = a.width > 0 && a.qtl.empty()
                                          ? surgery::QtlPreset::Custom
                                          : surgery::qtl_preset_from_name(a.qtl);
    if (preset == surgery::QtlPreset::Custom) {
      const surgery::CutPlan plan = surgery::plan_cut(graph, preset, a.width);
      surgery::ParamReport r;
      r.model = graph.name;
      r.qtl = "custom(" + std::to_string(a.width) + ")";
      r.n_ip = plan.n_ip;
      r.classical_total = total;
      r.published_total = published;
      r.replaced_sum = surgery::replaced_param_sum(graph, plan);
      r.dqn_params = dressed::dqn_param_count(static_cast<int>(plan.n_ip),
                                              v.n_qubits, v.n_layers, a.classes);
      r.hybrid_total = total - r.replaced_sum + r.dqn_params;
      if (published) {
        r.hybrid_total_published_basis = *published - r.replaced_sum + r.dqn_params;
      }
      r.reduction_replaced_pct =
          surgery::reduction_replaced(r.replaced_sum, r.dqn_params);
      r.reduction_total_pct = surgery::reduction_total(
          published ? *published : total,
          r.hybrid_total_published_basis ? *r.hybrid_total_published_basis
                                         : r.hybrid_total);
      report = r;
    } else {
      report = surgery::param_report(graph, preset, v, a.classes);
    }
  }

  if (a.common.json) {
    ordered_json j;
    j["model"] = graph.name;
    j["layers"] = ordered_json::array();
    for (std::size_t i = 0; i < graph.layers.size(); ++i) {
      j["layers"].push_back({{"index", i},
                             {"kind", graph.layers[i].describe()},
                             {"params", graph.layers[i].param_count()}});
    }
    j["total"] = total;
    if (published) j["published_total"] = *published;
    else j["published_total"] = nullptr;
    j["published_matches"] = published ? ordered_json(!discrepancy)
                                       : ordered_json(nullptr);
    if (report) j["qtl"] = param_report_json(*report, v, a.classes);
    std::cout << j.dump(2) << "\n";
    return;
  }

  std::cout << graph.name << " layer parameters\n";
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    char line[96];
    std::snprintf(line, sizeof(line), "  [%2zu] %-26s %14s\n", i,
                  graph.layers[i].describe().c_str(),
                  graph.layers[i].param_count()
                      ? group_digits(graph.layers[i].param_count()).c_str()
                      : "-");
    std::cout << line;
  }
  std::cout << "  total (computed)                 " << group_digits(total) << "\n";
  if (published) {
    std::cout << "  published reference              " << group_digits(*published)
              << "\n";
    if (discrepancy) {
      std::cout << "  note: the published reference total does not match the "
                   "listed layers under any standard counting convention; the "
                   "computed value is what this architecture actually has.\n";
    }
  }
  if (report) print_param_report_human(*report, v, a.classes);
}

// --------------------------------------------------------------- transfer --

struct TransferArgs {
  Common common;
  std::string checkpoint;
  std::string cache;
  std::string qtl;
  std::size_t width = 0;
  std::optional<int> folds;
  std::optional<int> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
  bool normalize_loss = false;
  std::optional<int> qubits;
  std::optional<int> layers;
  std::vector<int> ranges;
  bool no_hadamard = false;
  std::optional<double> input_scale;
  bool output_relu = false;
};

void run_transfer(const TransferArgs& a) {
  const cli::RunConfig cfg = load_cfg(a.common);
  const std::string ckpt = !a.checkpoint.empty() ? a.checkpoint : "";
  if (ckpt.empty()) throw ConfigError("no classical checkpoint: pass --checkpoint");
  require_file("classical checkpoint", ckpt);
  const std::string cache =
      !a.cache.empty() ? a.cache : cfg.get_str("dataset.cache", "");
  if (cache.empty()) {
    throw ConfigError("no dataset cache: pass --cache or set dataset.cache");
  }
  require_file("dataset cache", cache);

  vqc::VqcConfig v = vqc_from_cfg(cfg);
  if (a.qubits) v.n_qubits = *a.qubits;
  if (a.layers) v.n_layers = *a.layers;
  if (!a.ranges.empty()) v.ranges = a.ranges;
  if (a.no_hadamard) v.hadamard_prefix = false;
  if (a.input_scale) v.input_scale = *a.input_scale;
  if (a.output_relu) v.output_activation = vqc::OutputActivation::Relu;
  v.validate();

  harness::TrainConfig tc = train_from_cfg(cfg, harness::transfer_defaults());
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.batch_size) tc.batch_size = *a.batch_size;
  if (a.lr) tc.learning_rate = *a.lr;
  if (a.normalize_loss) tc.normalize_loss = true;
  if (a.common.seed_set) tc.seed = a.common.seed;

  std::string qtl_name = !a.qtl.empty() ? a.qtl : cfg.get_str("qtl.preset", "QTL-M-3");
  std::size_t width = a.width ? a.width : static_cast<std::size_t>(cfg.get_int("qtl.width", 0));
  const int k = a.folds ? *a.folds : static_cast<int>(cfg.get_int("qtl.folds", 6));

  const fs::path out_dir =
      !a.common.out.empty() ? a.common.out : cfg.get_str("output.dir", ".");
  fs::create_directories(out_dir);

  const harness::ClassicalCheckpoint loaded = harness::load_classical_checkpoint(ckpt);
  const autonet::LayerGraph& graph = loaded.graph;

  const surgery::QtlPreset preset = width > 0 && a.qtl.empty() && !cfg.has("qtl.preset")
                                        ? surgery::QtlPreset::Custom
                                        : surgery::qtl_preset_from_name(qtl_name);
  const surgery::CutPlan plan = surgery::plan_cut(graph, preset, width);
  const surgery::ParamReport report = surgery::param_report(graph, preset, v, 2);

  const std::uint64_t hash = harness::fnv1a(
      harness::describe(tc) + ";" + vqc_describe(v) + ";model=" + graph.name +
      ";qtl=" + surgery::qtl_preset_name(preset) + ";folds=" + std::to_string(k));

  const datapipe::Dataset ds = datapipe::load_dataset(cache);

  struct BestFold {
    int index = -1;
    double f1 = -1.0;
    double loss = 0.0;
    surgery::HybridModel model;
  } best;

  harness::FoldRunner runner = [&](const datapipe::Dataset& train,
                                   const datapipe::Dataset& test,
                                   std::uint64_t fold_seed, int fold_index) {
    surgery::HybridModel hybrid = surgery::build_hybrid(graph, plan, v, 2, fold_seed);
    harness::TrainConfig fold_tc = tc;
    fold_tc.seed = fold_seed;
    harness::FoldOutcome outcome;
    outcome.record = harness::train_qtl(hybrid, train, test, fold_tc);
    outcome.metrics = harness::evaluate_hybrid(hybrid, test);
    harness::write_convergence_csv(
        out_dir / ("fold_" + std::to_string(fold_index) + ".csv"),
        outcome.record);
    if (outcome.metrics.f1 > best.f1 ||
        (outcome.metrics.f1 == best.f1 && outcome.metrics.loss < best.loss)) {
      best.index = fold_index;
      best.f1 = outcome.metrics.f1;
      best.loss = outcome.metrics.loss;
      best.model = hybrid;
    }
    return outcome;
  };

  const harness::CvSummary summary = harness::cross_validate(runner, ds, k, tc);

  harness::CheckpointMeta meta;
  meta.seed = tc.seed;
  meta.config_hash = hash;
  meta.epochs_completed = static_cast<std::uint64_t>(tc.epochs);
  harness::save_checkpoint(out_dir / "hybrid.qtlc", best.model, meta);

  ordered_json pj = param_report_json(report, v, 2);
  write_text_atomic(out_dir / "params.json", pj.dump(2) + "\n");

  ordered_json mj;
  mj["model"] = graph.name;
  mj["qtl"] = surgery::qtl_preset_name(preset);
  mj["folds"] = k;
  mj["mean_f1"] = summary.mean_f1;
  mj["std_f1"] = summary.std_f1;
  mj["mean_accuracy"] = summary.mean_accuracy;
  mj["fold_f1"] = ordered_json::array();
  for (const harness::FoldOutcome& f : summary.folds) {
    mj["fold_f1"].push_back(f.metrics.f1);
  }
  mj["best_fold"] = best.index;
  mj["config_hash"] = hash_hex(hash);
  write_text_atomic(out_dir / "metrics.json", mj.dump(2) + "\n");
  append_run_log(out_dir, "transfer model=" + graph.name +
                              " qtl=" + surgery::qtl_preset_name(preset) +
                              " seed=" + std::to_string(tc.seed));

  if (a.common.json) {
    ordered_json j = mj;
    j["params"] = pj;
    j["checkpoint"] = (out_dir / "hybrid.qtlc").string();
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "transfer " << surgery::qtl_preset_name(preset) << " on "
              << graph.name << ": mean F1 " << fmt_num(summary.mean_f1)
              << " (std " << fmt_num(summary.std_f1) << ") over " << k
              << " folds, best fold " << best.index << "\n";
    print_param_report_human(report, v, 2);
    std::cout << "checkpoint: " << (out_dir / "hybrid.qtlc").string() << "\n";
  }
}

// ----------------------------------------------------------------- report --

void run_report(const Common& common, const std::string& dir_arg) {
  const cli::RunConfig cfg = load_cfg(common);
  const fs::path dir = !dir_arg.empty()
                           ? fs::path(dir_arg)
                           : fs::path(!common.out.empty()
                                          ? common.out
                                          : cfg.get_str("output.dir", "."));
  if (!fs::is_directory(dir)) {
    throw ConfigError("run directory does not exist: " + dir.string());
  }
  std::vector<fs::path> csvs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    if (entry.path().filename() == "report.csv") continue;
    csvs.push_back(entry.path());
  }
  if (csvs.empty()) {
    throw ConfigError("no convergence CSVs in " + dir.string());
  }
  std::sort(csvs.begin(), csvs.end());

  struct Series {
    std::string name;
    harness::ConvergenceRecord record;
  };
  std::vector<Series> series;
  std::size_t max_epochs = 0;
  for (const fs::path& p : csvs) {
    Series s;
    s.name = p.stem().string();
    s.record = harness::read_convergence_csv(p);
    if (s.record.normalized_test_loss.empty()) {
      std::vector<double> losses;
      for (const harness::EpochStat& e : s.record.epochs) {
        losses.push_back(e.test_loss);
      }
      s.record.normalized_test_loss = harness::normalize_losses(losses);
      const bool constant =
          !losses.empty() &&
          std::all_of(losses.begin(), losses.end(),
                      [&](double x) { return x == losses.front(); });
      if (constant) {
        std::cerr << "warning: series '" << s.name
                  << "' has a constant test loss; its normalized column is "
                     "all zero\n";
      }
    }
    max_epochs = std::max(max_epochs, s.record.epochs.size());
    series.push_back(std::move(s));
  }

  std::string out = "epoch";
  for (const Series& s : series) {
    out += "," + s.name + "_train_loss," + s.name + "_test_loss," + s.name +
           "_test_acc," + s.name + "_test_loss_norm";
  }
  out += "\n";
  char buf[128];
  for (std::size_t e = 0; e < max_epochs; ++e) {
    out += std::to_string(e + 1);
    for (const Series& s : series) {
      if (e < s.record.epochs.size()) {
        const harness::EpochStat& st = s.record.epochs[e];
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%.17g",
                      st.train_loss, st.test_loss, st.test_accuracy,
                      s.record.normalized_test_loss[e]);
        out += buf;
      } else {
        out += ",,,,";
      }
    }
    out += "\n";
  }
  write_text_atomic(dir / "report.csv", out);

  if (common.json) {
    ordered_json j;
    j["path"] = (dir / "report.csv").string();
    j["epochs"] = max_epochs;
    j["series"] = ordered_json::array();
    for (const Series& s : series) j["series"].push_back(s.name);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "merged " << series.size() << " series into "
              << (dir / "report.csv").string() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum transfer learning toolkit"};
  app.require_subcommand(1);

  // dataset
  auto* dataset = app.add_subcommand("dataset", "build or inspect dataset caches");
  dataset->require_subcommand(1);

  DatasetBuildArgs build_args;
  auto* build = dataset->add_subcommand("build", "assemble a dataset cache");
  add_common(build, build_args.common);
  build->add_option("--synthetic", build_args.synthetic_kv,
                    "synthetic source, k=v pairs (n, size, seed)")
      ->expected(-1);
  build->add_option("--neu-det", build_args.neu_det_root,
                    "corpus root containing IMAGES/ and ANNOTATIONS/");
  build->add_option("--drop", build_args.drop, "defect classes to drop")
      ->delimiter(',');
  build->add_option("--min-patch", build_args.min_patch,
                    "minimum mined patch side");
  build->callback([&] { run_dataset_build(build_args); });

  Common inspect_common;
  std::string inspect_cache;
  auto* inspect = dataset->add_subcommand("inspect", "summarize a dataset cache");
  add_common(inspect, inspect_common);
  inspect->add_option("cache", inspect_cache, "dataset cache path");
  inspect->callback([&] { run_dataset_inspect(inspect_common, inspect_cache); });

  // train-classical
  TrainClassicalArgs tr_args;
  auto* train = app.add_subcommand("train-classical",
                                   "pretrain a classical model preset");
  add_common(train, tr_args.common);
  train->add_option("--cache", tr_args.cache, "dataset cache path");
  train->add_option("--model", tr_args.model, "model preset name");
  train->add_option("--epochs", tr_args.epochs);
  train->add_option("--batch-size", tr_args.batch_size);
  train->add_option("--lr", tr_args.lr);
  train->add_option("--restarts", tr_args.restarts);
  train->add_option("--test-fraction", tr_args.test_fraction);
  train->add_flag("--normalize-loss", tr_args.normalize_loss);
  train->callback([&] { run_train_classical(tr_args); });

  // transfer
  TransferArgs tf_args;
  auto* transfer = app.add_subcommand(
      "transfer", "graft and cross-validate a dressed quantum head");
  add_common(transfer, tf_args.common);
  transfer->add_option("--checkpoint", tf_args.checkpoint,
                       "classical checkpoint (.qtlc)");
  transfer->add_option("--cache", tf_args.cache, "dataset cache path");
  transfer->add_option("--qtl", tf_args.qtl, "QTL-M-1 | QTL-M-2 | QTL-M-3");
  transfer->add_option("--width", tf_args.width, "custom cut width");
  transfer->add_option("--folds", tf_args.folds);
  transfer->add_option("--epochs", tf_args.epochs);
  transfer->add_option("--batch-size", tf_args.batch_size);
  transfer->add_option("--lr", tf_args.lr);
  transfer->add_flag("--normalize-loss", tf_args.normalize_loss);
  transfer->add_option("--qubits", tf_args.qubits);
  transfer->add_option("--layers", tf_args.layers);
  transfer->add_option("--ranges", tf_args.ranges)->delimiter(',');
  transfer->add_flag("--no-hadamard", tf_args.no_hadamard);
  transfer->add_option("--input-scale", tf_args.input_scale);
  transfer->add_flag("--output-relu", tf_args.output_relu);
  transfer->callback([&] { run_transfer(tf_args); });

  // params
  ParamsArgs pa;
  auto* params = app.add_subcommand("params", "parameter accounting");
  add_common(params, pa.common);
  params->add_option("model", pa.model, "preset name or checkpoint path")
      ->required();
  params->add_option("--qtl", pa.qtl, "QTL preset for the head decomposition");
  params->add_option("--width", pa.width, "custom cut width");
  params->add_option("--qubits", pa.qubits);
  params->add_option("--layers", pa.layers);
  params->add_option("--classes", pa.classes);
  params->callback([&] { run_params(pa); });

  // report
  Common report_common;
  std::string report_dir;
  auto* report = app.add_subcommand("report", "merge convergence CSVs");
  add_common(report, report_common);
  report->add_option("dir", report_dir, "run directory with CSVs");
  report->callback([&] { run_report(report_common, report_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
