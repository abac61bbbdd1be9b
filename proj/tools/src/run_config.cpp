#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "qtl/error.hpp"

namespace qtl::cli {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "dataset.source", "dataset.cache", "dataset.root", "dataset.n",
      "dataset.size", "dataset.seed", "dataset.drop", "dataset.min_patch",
      "model.preset",
      "qtl.preset", "qtl.folds", "qtl.width",
      "vqc.qubits", "vqc.layers", "vqc.ranges", "vqc.hadamard",
      "vqc.input_scale", "vqc.output_relu",
      "train.batch_size", "train.epochs", "train.learning_rate", "train.seed",
      "train.restarts", "train.normalize_loss", "train.test_fraction",
      "output.dir",
  };
  return keys;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& want) {
  throw ConfigError("config key '" + key + "': cannot read '" + value +
                    "' as " + want);
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  RunConfig config;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": unterminated section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": key outside any [section]");
    }
    const std::string key = section + "." + trim(t.substr(0, eq));
    if (!known_keys().count(key)) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    }
    config.values_[key] = trim(t.substr(eq + 1));
  }
  return config;
}

bool RunConfig::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string RunConfig::get_str(const std::string& key,
                               const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long long RunConfig::get_int(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) bad_value(key, it->second, "an integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, it->second, "an integer");
  }
}

std::uint64_t RunConfig::get_u64(const std::string& key,
                                 std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) bad_value(key, it->second, "an unsigned integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, it->second, "an unsigned integer");
  }
}

double RunConfig::get_num(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) bad_value(key, it->second, "a number");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, it->second, "a number");
  }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, it->second, "a boolean");
}

std::vector<std::string> RunConfig::get_list(
    const std::string& key, std::vector<std::string> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = it->second.find(',', start);
    const std::string item = trim(it->second.substr(start, comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace qtl::cli
