// Scenario configuration plumbing for the command-line front end: a small
// nested key/value text format (units spelled out in key names), an
// order-independent config hash, CSV artifacts, and JSON result manifests.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqc/rng.hpp"

namespace sqc {

// Validation failures carry the offending field path in the message.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Nested key/value text format
// ---------------------------------------------------------------------------
//
//   scenario = threshold-scan
//   threshold:
//     r1 = 7
//     omega_rf_per_2pi_mhz = 10
//
// Blocks are introduced by "name:" and scoped by indentation; leaves flatten
// to dot paths ("threshold.r1"). '#' starts a comment.

class Settings {
 public:
  static Settings parse(const std::string& text) {
    Settings out;
    std::vector<std::pair<int, std::string>> scope;  // (indent, block name)
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find('\t') != std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": tabs are not allowed, indent with spaces");
      std::size_t indent = 0;
      while (indent < line.size() && line[indent] == ' ') ++indent;
      const std::string body = trim(line.substr(indent));
      if (body.empty()) continue;
      while (!scope.empty() && int(indent) <= scope.back().first) scope.pop_back();
      if (body.back() == ':' && body.find('=') == std::string::npos) {
        const std::string name = trim(body.substr(0, body.size() - 1));
        if (name.empty())
          throw ConfigError("config line " + std::to_string(line_no) + ": empty block name");
        scope.emplace_back(int(indent), name);
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": expected 'key = value' or 'block:'");
      std::string key = trim(body.substr(0, eq));
      const std::string value = trim(body.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
      for (auto it = scope.rbegin(); it != scope.rend(); ++it) key = it->second + "." + key;
      if (!out.kv_.emplace(key, value).second)
        throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" +
                          key + "'");
    }
    return out;
  }

  static Settings load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError(key + ": required key is missing");
    used_.insert(key);
    return it->second;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(const std::string& key) const {
    const std::string raw = get_string(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key + ": not a number: '" + raw + "'");
    }
  }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long get_int(const std::string& key) const {
    const std::string raw = get_string(key);
    try {
      std::size_t pos = 0;
      const long v = std::stol(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key + ": not an integer: '" + raw + "'");
    }
  }
  long get_int(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  std::uint64_t get_seed() const {
    if (!has("seed")) throw ConfigError("seed: required for any stochastic scenario");
    const long v = get_int("seed");
    if (v < 0) throw ConfigError("seed: must be non-negative");
    return std::uint64_t(v);
  }

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  // Strict-schema enforcement: every key a scenario does not consume is an error.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }
  void require_all_used() const {
    const auto leftover = unused_keys();
    if (!leftover.empty()) throw ConfigError(leftover.front() + ": unknown key");
  }

  // Canonical hash over sorted (key, value) pairs: stable under reordering
  // of the config file and under comment/whitespace changes.
  std::uint64_t hash() const {
    std::string canon;
    for (const auto& [k, v] : kv_) {
      canon += k;
      canon += '=';
      canon += v;
      canon += '\n';
    }
    return fnv1a64(canon);
  }
  std::string hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  static std::string trim(std::string s) {
    const auto a = s.find_first_not_of(" \r");
    const auto b = s.find_last_not_of(" \r");
    return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// CSV artifacts (header row, decimal-point floats, complex as (re, im) pairs)
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path.string());
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw std::runtime_error("csv row width mismatch: " + path.string());
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read csv: " + path.string());
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Result manifests
// ---------------------------------------------------------------------------

struct ResultManifest {
  std::string scenario;
  std::string config_hash;
  std::map<std::string, double> metrics;
  double wall_time_s = 0.0;
  std::vector<std::string> artifacts;
};

inline nlohmann::json manifest_to_json(const ResultManifest& m) {
  return nlohmann::json{{"scenario", m.scenario},
                        {"config_hash", m.config_hash},
                        {"metrics", m.metrics},
                        {"wall_time_s", m.wall_time_s},
                        {"artifacts", m.artifacts}};
}

inline ResultManifest manifest_from_json(const nlohmann::json& j) {
  ResultManifest m;
  m.scenario = j.at("scenario").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.metrics = j.at("metrics").get<std::map<std::string, double>>();
  m.wall_time_s = j.at("wall_time_s").get<double>();
  m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  return m;
}

inline void write_manifest(const std::filesystem::path& path, const ResultManifest& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  out << manifest_to_json(m).dump(2) << '\n';
}

inline ResultManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest: " + path.string());
  nlohmann::json j;
  in >> j;
  return manifest_from_json(j);
}

}  // namespace sqc
