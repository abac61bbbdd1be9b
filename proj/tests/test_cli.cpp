#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

#ifdef QTL_CLI_PATH

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("qtl_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Runs the CLI, captures stdout, returns the exit code.
int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = std::string(QTL_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string text;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0) text.append(buf, got);
  const int status = ::pclose(pipe);
  if (out) *out = text;
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("cli end-to-end flows") {
  TempDir dir("flow");
  const std::string ds = (dir.path / "ds.qtld").string();

  SUBCASE("dataset build + inspect") {
    CHECK(run_cli("dataset build --synthetic n=10 size=32 seed=0 --out " + ds) == 0);
    CHECK(fs::is_regular_file(ds));
    std::string out;
    CHECK(run_cli("dataset inspect " + ds + " --json", &out) == 0);
    const nlohmann::json j = nlohmann::json::parse(out);
    CHECK(j.at("samples").get<int>() == 20);
    CHECK(j.at("normal").get<int>() == 10);
    CHECK(j.at("anomalous").get<int>() == 10);
    CHECK(j.at("height").get<int>() == 32);
  }

  SUBCASE("params reproduces the totals and flags CM-1") {
    std::string out;
    CHECK(run_cli("params CM-2 --json", &out) == 0);
    nlohmann::json j = nlohmann::json::parse(out);
    CHECK(j.at("total").get<long long>() == 534482);
    CHECK(j.at("published_total").get<long long>() == 534482);
    CHECK(j.at("published_matches").get<bool>());

    CHECK(run_cli("params CM-1 --json", &out) == 0);
    j = nlohmann::json::parse(out);
    CHECK(j.at("total").get<long long>() == 3140722);
    CHECK(j.at("published_total").get<long long>() == 1076338);
    CHECK_FALSE(j.at("published_matches").get<bool>());

    CHECK(run_cli("params CM-2 --qtl QTL-M-3 --json", &out) == 0);
    j = nlohmann::json::parse(out);
    CHECK(j.at("qtl").at("hybrid_total").get<long long>() == 273182);
    CHECK(j.at("qtl").at("dqn").at("total").get<long long>() == 10302);

    CHECK(run_cli("params no-such-model") == 2);
  }

  SUBCASE("training, transfer and report") {
    REQUIRE(run_cli("dataset build --synthetic n=12 size=32 seed=1 --out " + ds) == 0);
    const std::string run1 = (dir.path / "run1").string();
    CHECK(run_cli("train-classical --cache " + ds +
                  " --model tiny --epochs 3 --batch-size 8 --out " + run1) == 0);
    CHECK(fs::is_regular_file(run1 + "/model.qtlc"));
    CHECK(fs::is_regular_file(run1 + "/metrics.json"));
    CHECK(line_count(run1 + "/restart_0.csv") == 4);  // header + 3 epochs

    const std::string run2 = (dir.path / "run2").string();
    std::string out;
    CHECK(run_cli("transfer --checkpoint " + run1 + "/model.qtlc --cache " + ds +
                      " --qtl QTL-M-3 --folds 2 --epochs 2 --batch-size 8"
                      " --qubits 3 --layers 1 --out " + run2 + " --json",
                  &out) == 0);
    const nlohmann::json j = nlohmann::json::parse(out);
    CHECK(j.at("fold_f1").size() == 2);
    CHECK(j.at("params").at("dqn").at("vqc").get<int>() == 9);
    CHECK(fs::is_regular_file(run2 + "/hybrid.qtlc"));
    CHECK(fs::is_regular_file(run2 + "/fold_1.csv"));

    CHECK(run_cli("report " + run2 + " --json", &out) == 0);
    CHECK(fs::is_regular_file(run2 + "/report.csv"));
    std::ifstream rep(run2 + "/report.csv");
    std::string header;
    std::getline(rep, header);
    CHECK(header.find("fold_0_test_loss_norm") != std::string::npos);
    CHECK(header.find("fold_1_train_loss") != std::string::npos);
  }

  SUBCASE("failure modes use exit code conventions") {
    CHECK(run_cli("train-classical --cache " + (dir.path / "absent.qtld").string() +
                  " --model tiny") == 2);
    CHECK(run_cli("definitely-not-a-command") == 2);
    CHECK(run_cli("report " + (dir.path / "void").string()) == 2);
    fs::create_directories(dir.path / "hollow");
    CHECK(run_cli("report " + (dir.path / "hollow").string()) == 2);
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("dataset build --synthetic nonsense") == 2);

    std::ofstream cfg(dir.path / "bad.ini");
    cfg << "[dataset]\nsource = synthetic\nbogus_key = 1\n";
    cfg.close();
    CHECK(run_cli("dataset inspect --config " + (dir.path / "bad.ini").string()) == 2);
  }
}

#else
TEST_CASE("cli binary unavailable" * doctest::skip()) {}
#endif
