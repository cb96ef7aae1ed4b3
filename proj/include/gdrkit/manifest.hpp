#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gdrkit/common.hpp"

namespace gdrkit {

inline constexpr int kNumGrades = 5;

struct ManifestRecord {
  std::string path;  // relative to the manifest's directory
  int grade = 0;     // DR severity, 0..4
  std::string domain;
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::string dir;  // directory the paths are relative to

  std::string resolve(const ManifestRecord& rec) const {
    if (rec.path.size() && rec.path.front() == '/') return rec.path;
    return (std::filesystem::path(dir) / rec.path).string();
  }

  /// Sorted unique domain names; stable run ordering everywhere.
  std::vector<std::string> domains() const {
    std::set<std::string> s;
    for (const auto& r : records) s.insert(r.domain);
    return {s.begin(), s.end()};
  }
};

inline Manifest parse_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileMissingError("manifest not found: " + path);
  Manifest m;
  m.dir = std::filesystem::path(path).parent_path().string();
  if (m.dir.empty()) m.dir = ".";

  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "path" || fields[1] != "grade" ||
          fields[2] != "domain")
        throw Error("manifest " + path + ":" + std::to_string(lineno) +
                    ": expected header `path,grade,domain`");
      header_seen = true;
      continue;
    }
    auto fail = [&](const std::string& why) {
      throw Error("manifest " + path + ":" + std::to_string(lineno) + ": " + why);
    };
    if (fields.size() != 3) fail("expected 3 fields, got " + std::to_string(fields.size()));
    ManifestRecord rec;
    rec.path = fields[0];
    if (rec.path.empty()) fail("empty path");
    try {
      size_t pos = 0;
      rec.grade = std::stoi(fields[1], &pos);
      if (pos != fields[1].size()) fail("grade is not an integer: " + fields[1]);
    } catch (const Error&) {
      throw;
    } catch (...) {
      fail("grade is not an integer: " + fields[1]);
    }
    if (rec.grade < 0 || rec.grade >= kNumGrades)
      fail("grade " + fields[1] + " outside [0," + std::to_string(kNumGrades - 1) + "]");
    rec.domain = fields[2];
    if (rec.domain.empty()) fail("empty domain");
    m.records.push_back(std::move(rec));
  }
  if (!header_seen) throw Error("manifest " + path + ": empty file");
  return m;
}

inline void write_manifest(const Manifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw WriteError("cannot write manifest: " + path);
  out << "path,grade,domain\n";
  for (const auto& r : m.records) out << r.path << "," << r.grade << "," << r.domain << "\n";
  if (!out) throw WriteError("failed writing manifest: " + path);
}

// ---------------------------------------------------------------------------
// Protocol split plans
// ---------------------------------------------------------------------------

enum class Protocol { DG, ESDG };

inline const char* protocol_name(Protocol p) { return p == Protocol::DG ? "dg" : "esdg"; }

struct SplitRun {
  std::vector<std::string> train_domains;
  std::vector<std::string> test_domains;
};

struct SplitPlan {
  Protocol protocol = Protocol::DG;
  std::vector<SplitRun> runs;
};

/// DG: run k holds out domain k and trains on the rest. ESDG: run k trains
/// on domain k alone and tests on all others.
inline SplitPlan make_splits(const std::vector<std::string>& domains, Protocol protocol) {
  if (domains.size() < 2)
    throw std::invalid_argument("make_splits: need at least 2 domains, got " +
                                std::to_string(domains.size()));
  std::set<std::string> uniq(domains.begin(), domains.end());
  if (uniq.size() != domains.size())
    throw std::invalid_argument("make_splits: duplicate domain names");
  SplitPlan plan;
  plan.protocol = protocol;
  for (const std::string& d : domains) {
    SplitRun run;
    for (const std::string& other : domains)
      if (other != d) (protocol == Protocol::DG ? run.train_domains : run.test_domains)
                          .push_back(other);
    (protocol == Protocol::DG ? run.test_domains : run.train_domains).push_back(d);
    plan.runs.push_back(std::move(run));
  }
  return plan;
}

}  // namespace gdrkit
