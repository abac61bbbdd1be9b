// Acceptance gate: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each check re-derives its expectations from first
// principles (dense operator oracles, central finite differences, brute-force
// geometry) rather than trusting library internals.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qtl/autonet.hpp"
#include "qtl/datapipe.hpp"
#include "qtl/dressed.hpp"
#include "qtl/error.hpp"
#include "qtl/harness.hpp"
#include "qtl/qsim.hpp"
#include "qtl/rng.hpp"
#include "qtl/surgery.hpp"
#include "qtl/vqc.hpp"

using namespace qtl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << title;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << "\n";
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt_secs(double s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2fs", s);
  return buf;
}

// ------------------------------------------------------------- criterion 1

void criterion_1() {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool ok = true;

  const std::size_t cm2 = autonet::preset("CM-2").param_count();
  const std::size_t cm3 = autonet::preset("CM-3").param_count();
  ok &= cm2 == 534482;
  ok &= cm3 == 1125842;

  const std::size_t cm1 = autonet::preset("CM-1").param_count();
  const auto cm1_published = autonet::published_param_count("CM-1");
  const bool flagged = cm1_published.has_value() && *cm1_published == 1076338 &&
                       cm1 != *cm1_published;
  ok &= flagged;

  detail << "CM-2 " << cm2 << ", CM-3 " << cm3 << ", CM-1 computed " << cm1
         << " vs published 1076338 (discrepancy flagged), " << fmt_secs(seconds_since(t0));
  report(1, "parameter-count reproduction", ok && seconds_since(t0) < 1.0,
         detail.str());
}

// ------------------------------------------------------------- criterion 2

void criterion_2() {
  const auto t0 = Clock::now();
  const vqc::VqcConfig v;  // 5 qubits, 3 layers
  struct Row {
    const char* model;
    surgery::QtlPreset preset;
    std::size_t want;
    const char* note;
  };
  // The comparison table prints 525,824 and 671,764 for the rows marked
  // "derived"; those figures are inconsistent with its own construction
  // (published classical total - replaced dense parameters + head), so the
  // derived values are asserted instead.
  const Row rows[] = {
      {"CM-1", surgery::QtlPreset::M1, 1074078, ""},
      {"CM-1", surgery::QtlPreset::M2, 1066142, ""},
      {"CM-1", surgery::QtlPreset::M3, 671774, " [derived; table prints 671764]"},
      {"CM-2", surgery::QtlPreset::M1, 533790, ""},
      {"CM-2", surgery::QtlPreset::M2, 525854, " [derived; table prints 525824]"},
      {"CM-2", surgery::QtlPreset::M3, 273182, ""},
      {"CM-3", surgery::QtlPreset::M1, 1125150, ""},
      {"CM-3", surgery::QtlPreset::M2, 1117214, ""},
      {"CM-3", surgery::QtlPreset::M3, 108830, ""},
  };
  bool ok = true;
  std::ostringstream detail;
  for (const Row& r : rows) {
    const surgery::ParamReport rep =
        surgery::param_report(autonet::preset(r.model), r.preset, v, 2);
    const bool match = rep.hybrid_total_published_basis &&
                       *rep.hybrid_total_published_basis == r.want;
    if (!match) {
      ok = false;
      detail << r.model << "/" << surgery::qtl_preset_name(r.preset) << " got "
             << (rep.hybrid_total_published_basis
                     ? std::to_string(*rep.hybrid_total_published_basis)
                     : std::string("none"))
             << " want " << r.want << "; ";
    }
  }
  if (ok) detail << "9 totals exact, 2 documented table deltas asserted at derived values";
  detail << ", " << fmt_secs(seconds_since(t0));
  report(2, "hybrid-count reproduction", ok && seconds_since(t0) < 1.0, detail.str());
}

// ------------------------------------------------------------- criterion 3

void criterion_3() {
  const auto t0 = Clock::now();
  const vqc::VqcConfig v;
  const surgery::ParamReport a =
      surgery::param_report(autonet::preset("CM-2"), surgery::QtlPreset::M3, v, 2);
  const surgery::ParamReport b =
      surgery::param_report(autonet::preset("CM-3"), surgery::QtlPreset::M3, v, 2);
  const bool ok = std::abs(a.reduction_total_pct - 48.89) < 0.01 &&
                  std::abs(b.reduction_total_pct - 90.33) < 0.01;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "CM-2/M-3 %.4f%% vs 48.89, CM-3/M-3 %.4f%% vs 90.33",
                a.reduction_total_pct, b.reduction_total_pct);
  report(3, "reduction reproduction", ok && seconds_since(t0) < 1.0, buf);
}

// ------------------------------------------------------------- criterion 4

void criterion_4() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream detail;

  // Norm preservation over long random circuits.
  double worst_norm = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    qsim::StateVector s(5);
    Rng rng(seed);
    for (int step = 0; step < 100; ++step) {
      const int q = static_cast<int>(rng.uniform_int(5));
      if (rng.uniform() < 0.7) {
        s.apply_1q(q, qsim::rot(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
                                rng.uniform(-3.0, 3.0)));
      } else {
        s.apply_cnot(q, (q + 1 + static_cast<int>(rng.uniform_int(4))) % 5);
      }
      worst_norm = std::max(worst_norm, std::abs(s.norm() - 1.0));
    }
  }
  ok &= worst_norm < 1e-12;

  // Dense Kronecker oracle equivalence for n <= 3.
  double worst_dense = 0.0;
  for (int n = 1; n <= 3; ++n) {
    const std::size_t dim = std::size_t(1) << n;
    for (int q = 0; q < n; ++q) {
      int gid = 0;
      for (const qsim::Gate1Q& g :
           {qsim::rx(0.9), qsim::ry(-0.4), qsim::rz(1.7), qsim::hadamard(),
            qsim::rot(0.2, -1.0, 0.6)}) {
        qsim::StateVector s(n);
        Rng rng(50 * n + 5 * q + std::uint64_t(gid++));
        double norm2 = 0.0;
        for (auto& a : s.amplitudes()) {
          a = qsim::complex_t(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
          norm2 += std::norm(a);
        }
        for (auto& a : s.amplitudes()) a /= std::sqrt(norm2);
        const auto want = oracles::apply_dense(
            oracles::dense_1q(n, q, oracles::gate_mat(g)), dim, s.amplitudes());
        s.apply_1q(q, g);
        for (std::size_t i = 0; i < dim; ++i)
          worst_dense = std::max(worst_dense, std::abs(s.amplitudes()[i] - want[i]));
      }
      for (int t = 0; t < n; ++t) {
        if (t == q) continue;
        qsim::StateVector s(n);
        s.apply_1q(q, qsim::ry(0.8));
        s.apply_1q(t, qsim::hadamard());
        const auto want = oracles::apply_dense(oracles::dense_cnot(n, q, t), dim,
                                               s.amplitudes());
        s.apply_cnot(q, t);
        for (std::size_t i = 0; i < dim; ++i)
          worst_dense = std::max(worst_dense, std::abs(s.amplitudes()[i] - want[i]));
      }
    }
  }
  ok &= worst_dense < 1e-10;

  // Parameter-shift vs central finite differences at the 5-qubit, 3-layer
  // configuration, 20 seeds.
  vqc::VqcConfig c;  // defaults: 5 qubits, 3 layers
  double worst_grad = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const vqc::VqcWeights w = vqc::VqcWeights::random(c.n_layers, c.n_qubits, seed);
    Rng rng(seed + 1000);
    std::vector<double> features(c.n_qubits), upstream(c.n_qubits);
    for (double& f : features) f = rng.uniform(-1.0, 1.0);
    for (double& u : upstream) u = rng.uniform(-1.0, 1.0);

    auto value = [&](const vqc::VqcWeights& ww, const std::vector<double>& ff) {
      const vqc::VqcForward fwd = vqc::vqc_forward(c, ww, ff);
      double acc = 0.0;
      for (int i = 0; i < c.n_qubits; ++i) acc += upstream[i] * fwd.outputs[i];
      return acc;
    };
    const vqc::VqcGradients g = vqc::vqc_gradients(c, w, features, upstream);
    for (std::size_t i = 0; i < w.angles.size(); ++i) {
      vqc::VqcWeights wp = w;
      const double fd = oracles::central_diff(
          [&](double x) {
            wp.angles[i] = x;
            return value(wp, features);
          },
          w.angles[i]);
      worst_grad = std::max(worst_grad, std::abs(g.weights.angles[i] - fd));
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
      std::vector<double> fp = features;
      const double fd = oracles::central_diff(
          [&](double x) {
            fp[i] = x;
            return value(w, fp);
          },
          features[i]);
      worst_grad = std::max(worst_grad, std::abs(g.features[i] - fd));
    }
  }
  ok &= worst_grad < 1e-6;

  const double dt = seconds_since(t0);
  detail << "norm err " << worst_norm << ", dense err " << worst_dense
         << ", grad err " << worst_grad << ", " << fmt_secs(dt);
  report(4, "quantum correctness property suite", ok && dt < 30.0, detail.str());
}

// ------------------------------------------------------------- criterion 5

void criterion_5() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream detail;
  double worst = 0.0;
  std::size_t total_params = 0;

  for (const int n_ip : {64, 128, 2048}) {
    const vqc::VqcConfig c;  // 5 qubits, 3 layers
    dressed::DressedQuantumNet net = dressed::make_dressed(n_ip, c, 2, 7 + n_ip);
    Rng rng(n_ip);
    std::vector<double> x(n_ip), upstream(2);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (double& u : upstream) u = rng.uniform(-1.0, 1.0);

    auto value = [&]() {
      const std::vector<double> probs = dressed::dqn_forward(net, x);
      return upstream[0] * probs[0] + upstream[1] * probs[1];
    };

    dressed::DqnTape tape;
    dressed::dqn_forward(net, x, &tape);
    const dressed::DqnGradients grads = dressed::dqn_backward(net, tape, upstream);

    const auto params = dressed::dqn_params(net);
    const auto gviews = dressed::dqn_grads(grads);
    for (std::size_t blk = 0; blk < params.size(); ++blk) {
      for (std::size_t j = 0; j < params[blk].size(); ++j) {
        ++total_params;
        double& slot = params[blk][j];
        const double keep = slot;
        const double h = 1e-6;
        slot = keep + h;
        const double up = value();
        slot = keep - h;
        const double dn = value();
        slot = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double rel =
            std::abs(gviews[blk][j] - fd) / std::max(1.0, std::abs(fd));
        worst = std::max(worst, rel);
        if (rel >= 1e-5) ok = false;
      }
    }
  }

  const double dt = seconds_since(t0);
  detail << total_params << " parameters across n_ip {64,128,2048}, worst rel err "
         << worst << ", " << fmt_secs(dt);
  report(5, "hybrid gradient correctness", ok && dt < 60.0, detail.str());
}

// ------------------------------------------------------------- criterion 6

void criterion_6() {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool ok = true;

  const datapipe::Dataset ds = datapipe::synth_dataset(100, 32, 0);  // 200 samples

  // (a) tiny classical preset to >= 95% train accuracy within 30 epochs.
  harness::TrainConfig tc;
  tc.batch_size = 16;
  tc.epochs = 30;
  tc.learning_rate = 1e-3;
  tc.seed = 0;
  tc.restarts = 1;
  tc.test_fraction = 0.2;
  const harness::ClassicalRun run = harness::train_classical("tiny", ds, tc);
  const auto [train_part, test_part] =
      datapipe::holdout_split(ds, tc.test_fraction, tc.seed);
  const harness::Metrics train_m = harness::evaluate_graph(run.model, train_part);
  ok &= train_m.accuracy >= 0.95;
  detail << "tiny train acc " << train_m.accuracy;

  // (b) grafted 5-qubit/3-layer head to >= 90% mean test F1 under 6-fold CV
  // within 40 epochs.
  const vqc::VqcConfig v;  // the published head configuration
  const surgery::CutPlan plan = surgery::plan_cut(run.model, surgery::QtlPreset::M3);
  harness::TrainConfig head_tc;
  head_tc.batch_size = 16;
  head_tc.epochs = 40;
  head_tc.learning_rate = 8e-4;
  head_tc.seed = 0;           // fold seeds become 0 + fold_index
  head_tc.restarts = 1;

  harness::FoldRunner runner = [&](const datapipe::Dataset& train,
                                   const datapipe::Dataset& test,
                                   std::uint64_t fold_seed, int) {
    surgery::HybridModel hybrid =
        surgery::build_hybrid(run.model, plan, v, 2, fold_seed);
    harness::TrainConfig fold_tc = head_tc;
    fold_tc.seed = fold_seed;
    harness::FoldOutcome out;
    out.record = harness::train_qtl(hybrid, train, test, fold_tc);
    out.metrics = harness::evaluate_hybrid(hybrid, test);
    return out;
  };
  const harness::CvSummary cv = harness::cross_validate(runner, ds, 6, head_tc);
  ok &= cv.mean_f1 >= 0.90;
  detail << ", dqn mean F1 " << cv.mean_f1 << " over 6 folds";

  const double dt = seconds_since(t0);
  detail << ", " << fmt_secs(dt);
  report(6, "desk-scale training", ok && dt < 600.0, detail.str());
}

// ------------------------------------------------------------- criterion 7

void criterion_7() {
  const auto t0 = Clock::now();
  std::ostringstream detail;

  const datapipe::Dataset ds = datapipe::synth_dataset(20, 32, 4);
  const auto [train, test] = datapipe::holdout_split(ds, 0.25, 2);

  autonet::LayerGraph tiny = autonet::preset("tiny");
  tiny.init_params(1);
  const surgery::CutPlan plan = surgery::plan_cut(tiny, surgery::QtlPreset::M3);
  surgery::HybridModel hybrid =
      surgery::build_hybrid(tiny, plan, vqc::VqcConfig{}, 2, 3);

  std::vector<std::vector<double>> before_w, before_b;
  for (const Tensor& t : hybrid.prefix.weights) before_w.push_back(t.v);
  for (const Tensor& t : hybrid.prefix.biases) before_b.push_back(t.v);

  harness::TrainConfig tc;
  tc.batch_size = 8;
  tc.epochs = 3;
  tc.learning_rate = 1e-3;
  tc.seed = 5;
  const harness::ConvergenceRecord rec = harness::train_qtl(hybrid, train, test, tc);

  bool frozen_ok = true;
  for (std::size_t i = 0; i < hybrid.prefix.weights.size(); ++i) {
    frozen_ok &= hybrid.prefix.weights[i].v == before_w[i];
    frozen_ok &= hybrid.prefix.biases[i].v == before_b[i];
  }

  // The cached-feature path inside train_qtl must be indistinguishable from
  // an uncached full forward pass.
  const harness::Metrics direct = harness::evaluate_hybrid(hybrid, test);
  const double loss_gap = std::abs(rec.epochs.back().test_loss - direct.loss);
  const double acc_gap = std::abs(rec.epochs.back().test_accuracy - direct.accuracy);
  const bool cache_ok = loss_gap < 1e-12 && acc_gap < 1e-12;

  detail << "prefix " << (frozen_ok ? "bitwise unchanged" : "MUTATED")
         << ", cache loss gap " << loss_gap << ", " << fmt_secs(seconds_since(t0));
  report(7, "transfer contract (frozen prefix, invisible cache)",
         frozen_ok && cache_ok, detail.str());
}

// ------------------------------------------------------------- criterion 8

void criterion_8() {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool ok = true;

  // Generate a corpus shaped like the steel-defect set after cleaning: six
  // classes, bounding boxes, 1,103 annotated images in the four retained
  // classes. 48x48 frames keep the byte budget small; each box sits in the
  // bottom-right corner so 32-pixel patches exist but never trivially.
  const fs::path root =
      fs::temp_directory_path() / ("qtl_accept_corpus_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const fs::path images = root / "IMAGES";
  const fs::path anno = root / "ANNOTATIONS";
  fs::create_directories(images);
  fs::create_directories(anno);

  struct ClassSpec {
    const char* label;
    int count;
  };
  const ClassSpec classes[] = {{"scratches", 300},    {"inclusion", 300},
                               {"patches", 300},      {"rolled-in_scale", 203},
                               {"pitted_surface", 40}, {"crazing", 40}};
  Rng pix(77);
  int serial = 0;
  for (const ClassSpec& cs : classes) {
    for (int i = 0; i < cs.count; ++i) {
      const std::string stem =
          std::string(cs.label) + "_" + std::to_string(1000 + serial++);
      datapipe::Raster r;
      r.width = 48;
      r.height = 48;
      r.pixels.resize(48 * 48);
      for (auto& p : r.pixels) p = static_cast<std::uint8_t>(pix.uniform_int(256));
      datapipe::write_pgm(images / (stem + ".pgm"), r);
      std::ofstream xml(anno / (stem + ".xml"));
      xml << "<annotation><object><name>" << cs.label
          << "</name><bndbox><xmin>36</xmin><ymin>36</ymin><xmax>46</xmax>"
             "<ymax>46</ymax></bndbox></object></annotation>\n";
    }
  }

  const datapipe::LoadReport rep = datapipe::load_annotated_dir(images, anno);
  ok &= rep.images.size() == 1183;
  ok &= rep.issues.empty();

  const std::vector<std::string> drop{"pitted_surface", "crazing"};
  const datapipe::Dataset ds = datapipe::build_binary_dataset(rep.images, drop, 0, 32);
  const auto counts = datapipe::class_counts(ds);
  ok &= ds.count() == 2206;
  ok &= counts[0] == 1103 && counts[1] == 1103;
  detail << ds.count() << " samples, balance " << counts[1] << "/" << counts[0];

  // Exhaustive mining audit: every accepted rectangle against every box of
  // its source image, with an independent overlap predicate.
  std::vector<datapipe::AnnotatedImage> retained;
  for (const datapipe::AnnotatedImage& img : rep.images) {
    bool dropped = false;
    for (const std::string& d : drop) dropped |= img.class_label == d;
    if (!dropped) retained.push_back(img);
  }
  const std::vector<datapipe::MinedPatch> mined =
      datapipe::mine_normal_patches(retained, 48, 32, 0);
  ok &= mined.size() >= 1103;
  std::size_t collisions = 0;
  for (const datapipe::MinedPatch& p : mined) {
    for (const datapipe::Box& b : retained[p.source].boxes) {
      const bool overlap = p.rect.xmin < b.xmax && b.xmin < p.rect.xmax &&
                           p.rect.ymin < b.ymax && b.ymin < p.rect.ymax;
      collisions += overlap;
    }
  }
  ok &= collisions == 0;
  detail << ", " << mined.size() << " mined patches, " << collisions
         << " box collisions";

  fs::remove_all(root);
  detail << ", " << fmt_secs(seconds_since(t0));
  report(8, "dataset pipeline balance and mining safety", ok, detail.str());
}

// ------------------------------------------------------------- criterion 9

#ifdef QTL_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(QTL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}
#endif

void criterion_9() {
#ifndef QTL_CLI_PATH
  report(9, "end-to-end determinism", false, "CLI binary was not built");
#else
  const auto t0 = Clock::now();
  const fs::path root =
      fs::temp_directory_path() / ("qtl_accept_det_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);

  bool ok = true;
  std::ostringstream detail;
  std::vector<fs::path> runs;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = root / ("pass" + std::to_string(pass));
    fs::create_directories(dir);
    runs.push_back(dir);
    const std::string ds = (dir / "ds.qtld").string();
    ok &= run_cli("dataset build --synthetic n=20 size=32 seed=3 --out " + ds) == 0;
    ok &= run_cli("train-classical --cache " + ds +
                  " --model tiny --epochs 2 --batch-size 8 --seed 1 --out " +
                  (dir / "cls").string()) == 0;
    ok &= run_cli("transfer --checkpoint " + (dir / "cls" / "model.qtlc").string() +
                  " --cache " + ds +
                  " --qtl QTL-M-3 --folds 2 --epochs 1 --batch-size 8"
                  " --qubits 3 --layers 1 --seed 1 --out " +
                  (dir / "tf").string()) == 0;
  }

  std::size_t compared = 0;
  if (ok) {
    const char* files[] = {"ds.qtld",
                           "cls/model.qtlc",
                           "cls/restart_0.csv",
                           "cls/metrics.json",
                           "tf/hybrid.qtlc",
                           "tf/fold_0.csv",
                           "tf/fold_1.csv",
                           "tf/metrics.json",
                           "tf/params.json"};
    for (const char* f : files) {
      const std::string a = slurp(runs[0] / f);
      const std::string b = slurp(runs[1] / f);
      if (a.empty() || a != b) {
        ok = false;
        detail << f << " differs; ";
      }
      ++compared;
    }
  } else {
    detail << "a pipeline stage exited nonzero; ";
  }

  fs::remove_all(root);
  detail << compared << " artifacts compared bitwise, " << fmt_secs(seconds_since(t0));
  report(9, "end-to-end determinism", ok, detail.str());
#endif
}

}  // namespace

int main() {
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
  } catch (const std::exception& e) {
    std::cout << "FAIL unexpected exception: " << e.what() << "\n";
    return 1;
  }
  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all 9 criteria passed\n";
  return 0;
}
