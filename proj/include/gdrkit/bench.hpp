#pragma once

// Benchmark driver: runs a split plan end to end (train on each run's train
// domains, evaluate pooled over its test domains) and formats the per-run and
// averaged metrics as an aligned text table or JSON, both embedding the
// effective configuration and seed.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"

#include "gdrkit/common.hpp"
#include "gdrkit/config.hpp"
#include "gdrkit/manifest.hpp"
#include "gdrkit/train.hpp"

namespace gdrkit {

/// In-memory subset restricted to the given (sorted) domain names; domain
/// indices are remapped onto the subset's own sorted domain list.
inline LoadedDataset subset_by_domains(const LoadedDataset& ds,
                                       const std::vector<std::string>& keep) {
  std::vector<std::string> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  LoadedDataset out;
  out.domains = sorted;
  for (int i = 0; i < ds.size(); ++i) {
    const std::string& name = ds.domains[ds.domain_idx[i]];
    auto it = std::lower_bound(sorted.begin(), sorted.end(), name);
    if (it == sorted.end() || *it != name) continue;
    out.images.push_back(ds.images[i]);
    out.labels.push_back(ds.labels[i]);
    out.domain_idx.push_back(static_cast<int>(it - sorted.begin()));
  }
  return out;
}

struct RunResult {
  std::string label;  // held-out domain (DG) or the single train domain (ESDG)
  std::vector<std::string> train_domains;
  std::vector<std::string> test_domains;
  double auc = 0.0, acc = 0.0, f1 = 0.0;          // percentages
  std::vector<double> auc_per_class, f1_per_class;  // percentages, NaN absent
};

struct BenchReport {
  Protocol protocol = Protocol::DG;
  std::string method;
  std::uint64_t seed = 0;
  KvConfig effective;  // full effective config, embedded in every rendering
  std::vector<RunResult> runs;
  double avg_auc = 0.0, avg_acc = 0.0, avg_f1 = 0.0;
};

/// The contrastive temperature differs between the two protocols (0.1 for
/// leave-one-out, 0.01 for single-source training); apply the protocol value
/// only when the user's config file did not pin one.
inline void apply_protocol_tau(TrainConfig& cfg, const KvConfig& src, Protocol protocol) {
  if (protocol == Protocol::ESDG && !src.has("tau")) cfg.tau = 0.01;
}

inline BenchReport run_protocol(const LoadedDataset& full, Protocol protocol,
                                const TrainConfig& cfg) {
  cfg.validate();
  MethodFlags flags = method_from_name(cfg.method);
  SplitPlan plan = make_splits(full.domains, protocol);
  RngStream root(cfg.seed);

  BenchReport report;
  report.protocol = protocol;
  report.method = cfg.method;
  report.seed = cfg.seed;
  report.effective = cfg.to_kv();

  for (size_t k = 0; k < plan.runs.size(); ++k) {
    const SplitRun& run = plan.runs[k];
    LoadedDataset train_ds = subset_by_domains(full, run.train_domains);
    LoadedDataset test_ds = subset_by_domains(full, run.test_domains);
    TrainOutput trained =
        train(cfg, flags, train_ds, root.derive("run", {static_cast<std::uint64_t>(k)}));
    EvalResult ev = evaluate(trained.net, test_ds, cfg.threads);

    RunResult row;
    row.label = protocol == Protocol::DG ? run.test_domains.front() : run.train_domains.front();
    row.train_domains = run.train_domains;
    row.test_domains = run.test_domains;
    row.auc = 100.0 * ev.auc;
    row.acc = 100.0 * ev.acc;
    row.f1 = 100.0 * ev.f1;
    for (double v : ev.auc_per_class) row.auc_per_class.push_back(100.0 * v);
    for (double v : ev.f1_per_class) row.f1_per_class.push_back(100.0 * v);
    report.runs.push_back(std::move(row));
  }

  for (const RunResult& r : report.runs) {
    report.avg_auc += r.auc;
    report.avg_acc += r.acc;
    report.avg_f1 += r.f1;
  }
  double n = static_cast<double>(report.runs.size());
  report.avg_auc /= n;
  report.avg_acc /= n;
  report.avg_f1 /= n;
  return report;
}

inline BenchReport run_protocol(const Manifest& manifest, Protocol protocol,
                                const TrainConfig& cfg) {
  return run_protocol(load_dataset(manifest, cfg.input_size), protocol, cfg);
}

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

inline std::string report_text(const BenchReport& report) {
  std::string out;
  out += "protocol: ";
  out += protocol_name(report.protocol);
  out += "\nmethod: " + report.method;
  out += "\nseed: " + std::to_string(report.seed);
  out += "\nconfig_hash: " + hex64(report.effective.hash());
  out += "\n\n";

  size_t label_w = 7;  // len("average")
  for (const RunResult& r : report.runs) label_w = std::max(label_w, r.label.size());
  const char* head = report.protocol == Protocol::DG ? "target" : "source";
  out += head;
  out.append(label_w > std::string(head).size() ? label_w - std::string(head).size() : 0, ' ');
  out += "     AUC     ACC      F1\n";
  auto row = [&](const std::string& label, double auc, double acc, double f1) {
    out += label;
    out.append(label_w - label.size(), ' ');
    for (double v : {auc, acc, f1}) {
      std::string s = detail::fmt2(v);
      out.append(8 - s.size(), ' ');
      out += s;
    }
    out += "\n";
  };
  for (const RunResult& r : report.runs) row(r.label, r.auc, r.acc, r.f1);
  row("average", report.avg_auc, report.avg_acc, report.avg_f1);
  return out;
}

inline nlohmann::json report_json(const BenchReport& report) {
  auto num_or_null = [](double v) {
    return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
  };
  nlohmann::json j;
  j["protocol"] = protocol_name(report.protocol);
  j["method"] = report.method;
  j["seed"] = report.seed;
  j["config_hash"] = hex64(report.effective.hash());
  j["config"] = nlohmann::json::object();
  for (const auto& [k, v] : report.effective.entries()) j["config"][k] = v;
  j["runs"] = nlohmann::json::array();
  for (const RunResult& r : report.runs) {
    nlohmann::json jr;
    jr["label"] = r.label;
    jr["train_domains"] = r.train_domains;
    jr["test_domains"] = r.test_domains;
    jr["auc"] = r.auc;
    jr["acc"] = r.acc;
    jr["f1"] = r.f1;
    jr["auc_per_class"] = nlohmann::json::array();
    for (double v : r.auc_per_class) jr["auc_per_class"].push_back(num_or_null(v));
    jr["f1_per_class"] = nlohmann::json::array();
    for (double v : r.f1_per_class) jr["f1_per_class"].push_back(num_or_null(v));
    j["runs"].push_back(std::move(jr));
  }
  j["average"] = {{"auc", report.avg_auc}, {"acc", report.avg_acc}, {"f1", report.avg_f1}};
  return j;
}

}  // namespace gdrkit
