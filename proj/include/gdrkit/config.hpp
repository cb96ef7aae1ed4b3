#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gdrkit/common.hpp"

namespace gdrkit {

// ---------------------------------------------------------------------------
// Flat keyed text configuration: `key = value` lines, '#' comments, blank
// lines ignored. Keys mirror the config structs one-to-one.
// ---------------------------------------------------------------------------

class KvConfig {
 public:
  static KvConfig parse_string(const std::string& text, const std::string& origin = "<string>") {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string stripped = strip(line);
      if (stripped.empty() || stripped[0] == '#') continue;
      size_t eq = stripped.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected `key = value`, got: " + stripped);
      std::string key = strip(stripped.substr(0, eq));
      std::string value = strip(stripped.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      cfg.set(key, value);
    }
    return cfg;
  }

  static KvConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileMissingError("config file not found: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError("config key `" + key + "`: not a number: " + it->second);
    }
  }

  long long get_int(const std::string& key, long long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      size_t pos = 0;
      long long v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError("config key `" + key + "`: not an integer: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key `" + key + "`: not a boolean: " + v);
  }

  /// Throws on any key outside `known`, suggesting the closest known key.
  void reject_unknown(const std::set<std::string>& known) const {
    for (const auto& [key, value] : values_) {
      if (known.count(key)) continue;
      std::string best;
      size_t best_dist = static_cast<size_t>(-1);
      for (const std::string& k : known) {
        size_t d = levenshtein(key, k);
        if (d < best_dist) {
          best_dist = d;
          best = k;
        }
      }
      std::string msg = "unknown config key `" + key + "`";
      if (!best.empty() && best_dist <= std::max<size_t>(3, key.size() / 2))
        msg += " (did you mean `" + best + "`?)";
      throw ConfigError(msg);
    }
  }

  /// Canonical text form: sorted keys, one per line. Stable across runs, so
  /// it doubles as the provenance block embedded in output artifacts.
  std::string serialize() const {
    std::ostringstream out;
    for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
    return out.str();
  }

  std::uint64_t hash() const { return fnv1a64(serialize()); }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  static std::string strip(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace gdrkit
