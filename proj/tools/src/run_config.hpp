#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace qtl::cli {

// Sectioned key/value run description ([dataset], [model], [qtl], [vqc],
// [train], [output]). Unknown sections or keys are rejected at load time.
class RunConfig {
 public:
  RunConfig() = default;
  static RunConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const;  // dotted form, e.g. "train.epochs"
  std::string get_str(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_num(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    std::vector<std::string> fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace qtl::cli
