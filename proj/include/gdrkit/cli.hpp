#pragma once

// The `gdrkit` command line: one binary, eight subcommands, shared config
// handling and deterministic seeding. Every command run twice with the same
// inputs and seed produces byte-identical primary outputs, and every output
// artifact embeds the effective configuration and seed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gdrkit/augment.hpp"
#include "gdrkit/bench.hpp"
#include "gdrkit/common.hpp"
#include "gdrkit/config.hpp"
#include "gdrkit/dcr.hpp"
#include "gdrkit/gradcheck.hpp"
#include "gdrkit/manifest.hpp"
#include "gdrkit/synth.hpp"
#include "gdrkit/train.hpp"

namespace gdrkit {
namespace cli {

namespace fs = std::filesystem;

/// Seed priority: explicit --seed flag, then a `seed` key in the config
/// file, then the GDRKIT_SEED environment variable, then 0.
inline std::uint64_t resolve_seed(bool flag_set, std::uint64_t flag_value, const KvConfig* file) {
  if (flag_set) return flag_value;
  if (file && file->has("seed"))
    return static_cast<std::uint64_t>(file->get_int("seed", 0));
  if (const char* env = std::getenv("GDRKIT_SEED")) {
    std::string s(env);
    try {
      size_t pos = 0;
      unsigned long long v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("GDRKIT_SEED is not an unsigned integer: `" + s + "`");
    }
  }
  return 0;
}

inline KvConfig load_config_or_empty(const std::string& path) {
  if (path.empty()) return KvConfig();
  return KvConfig::parse_file(path);
}

inline DomainClassCounts counts_from_manifest(const Manifest& m, int num_classes = kNumGrades) {
  DomainClassCounts cc;
  cc.domains = m.domains();
  cc.classes.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) cc.classes[c] = std::to_string(c);
  cc.counts = Mat(static_cast<int>(cc.domains.size()), num_classes);
  for (const ManifestRecord& rec : m.records) {
    auto it = std::lower_bound(cc.domains.begin(), cc.domains.end(), rec.domain);
    cc.counts(static_cast<int>(it - cc.domains.begin()), rec.grade) += 1.0;
  }
  return cc;
}

inline std::string fmt_g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

inline nlohmann::json plan_to_json(const AugPlan& plan) {
  nlohmann::json steps = nlohmann::json::array();
  for (const TransformPlan& s : plan.steps) {
    nlohmann::json js;
    js["transform"] = transform_name(s.transform);
    js["applied"] = s.applied;
    if (s.applied) {
      js["m"] = s.m;
      if (s.halo)
        js["halo"] = {{"cx", s.halo->cx},
                      {"cy", s.halo->cy},
                      {"ring_r", s.halo->ring_r},
                      {"ring_w", s.halo->ring_w}};
      if (s.hole) js["hole"] = {{"cx", s.hole->cx}, {"cy", s.hole->cy}, {"radius", s.hole->radius}};
      if (!s.spots.empty()) {
        js["spots"] = nlohmann::json::array();
        for (const SpotGeom& g : s.spots) js["spots"].push_back({g.cx, g.cy, g.radius});
      }
    }
    steps.push_back(std::move(js));
  }
  return steps;
}

inline int cmd_augment(const std::string& in, const std::string& out, std::uint64_t seed,
                       const TrainConfig& cfg, const std::string& plan_out) {
  struct Item {
    std::string rel;   // name used for the derived stream and plan record
    std::string src;
    std::string dst;
  };
  std::vector<Item> items;
  bool dir_mode = fs::is_directory(in);
  if (dir_mode) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(in)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
        names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) throw Error("augment: no .png/.jpg images in " + in);
    fs::create_directories(out);
    for (const std::string& name : names) {
      std::string stem = fs::path(name).stem().string();
      items.push_back(Item{name, (fs::path(in) / name).string(),
                           (fs::path(out) / (stem + ".png")).string()});
    }
  } else {
    std::string name = fs::path(in).filename().string();
    std::string dst = fs::is_directory(out)
                          ? (fs::path(out) / (fs::path(name).stem().string() + ".png")).string()
                          : out;
    items.push_back(Item{name, in, dst});
  }

  RngStream root(seed);
  std::string plans;
  {
    nlohmann::json meta;
    meta["seed"] = seed;
    meta["config_hash"] = hex64(cfg.to_kv().hash());
    plans += meta.dump() + "\n";
  }
  for (const Item& item : items) {
    ImageRgb img = load_image(item.src);
    RngStream rng = root.derive(item.rel);
    auto [aug, plan] = fundus_aug(img, cfg.aug, rng);
    save_image(aug, item.dst);
    nlohmann::json line;
    line["file"] = item.rel;
    line["steps"] = plan_to_json(plan);
    plans += line.dump() + "\n";
  }
  if (!plan_out.empty()) {
    std::ofstream pf(plan_out, std::ios::trunc);
    if (!pf) throw WriteError("cannot write plan file: " + plan_out);
    pf << plans;
  }
  if (dir_mode) {
    KvConfig eff = cfg.to_kv();
    eff.set("seed", std::to_string(seed));
    std::ofstream cf(fs::path(out) / "augment_config.txt");
    if (!cf) throw WriteError("cannot write config echo in " + out);
    cf << eff.serialize();
  }
  std::cout << "augmented " << items.size() << (items.size() == 1 ? " image" : " images")
            << " (seed " << seed << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// dcr-weights
// ---------------------------------------------------------------------------

inline int cmd_dcr_weights(const std::string& manifest_path, double beta, const std::string& mode) {
  QMode qmode;
  if (mode == "joint")
    qmode = QMode::Joint;
  else if (mode == "conditional")
    qmode = QMode::PerDomainConditional;
  else
    throw ConfigError("--mode must be joint or conditional, got `" + mode + "`");

  Manifest m = parse_manifest(manifest_path);
  DomainClassCounts cc = counts_from_manifest(m);
  Mat q = occurrence_probs(cc, qmode);
  Mat w = dcr_weights(cc, beta, qmode);

  std::cout << "manifest: " << manifest_path << "\n";
  std::cout << "beta = " << fmt_g(beta) << "\nmode = " << mode << "\n\n";
  size_t dw = 6;
  for (const auto& d : cc.domains) dw = std::max(dw, d.size());
  auto table = [&](const char* title, const Mat& t) {
    std::cout << title << "\n";
    std::cout << std::string(dw, ' ');
    for (int c = 0; c < t.cols; ++c) {
      std::string h = "g" + std::to_string(c);
      std::cout << std::string(10 - h.size(), ' ') << h;
    }
    std::cout << "\n";
    for (int d = 0; d < t.rows; ++d) {
      std::cout << cc.domains[d] << std::string(dw - cc.domains[d].size(), ' ');
      for (int c = 0; c < t.cols; ++c) {
        std::string s = fmt_g(t(d, c));
        std::cout << std::string(s.size() < 10 ? 10 - s.size() : 1, ' ') << s;
      }
      std::cout << "\n";
    }
    std::cout << "\n";
  };
  table("occurrence probabilities q", q);
  table("re-balancing weights w", w);

  for (int d = 0; d < q.rows; ++d)
    for (int c = 0; c < q.cols; ++c)
      std::cout << "q." << cc.domains[d] << "." << c << " = " << fmt_g(q(d, c)) << "\n";
  for (int d = 0; d < w.rows; ++d)
    for (int c = 0; c < w.cols; ++c)
      std::cout << "w." << cc.domains[d] << "." << c << " = " << fmt_g(w(d, c)) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// synth + stats
// ---------------------------------------------------------------------------

inline int cmd_synth(const std::string& spec_path, std::uint64_t seed, const std::string& out) {
  std::vector<SynthDomainSpec> specs;
  int size = 64;
  if (!spec_path.empty()) {
    KvConfig kv = KvConfig::parse_file(spec_path);
    specs = parse_synth_specs(kv);
    size = static_cast<int>(kv.get_int("image_size", size));
  } else {
    specs = default_synth_specs();
  }
  Manifest m = synth_generate(specs, size, seed, out);
  KvConfig eff = synth_specs_to_kv(specs, size);
  eff.set("seed", std::to_string(seed));
  std::ofstream cf(fs::path(out) / "synth_config.txt");
  if (!cf) throw WriteError("cannot write config echo in " + out);
  cf << eff.serialize();
  std::cout << "wrote " << m.records.size() << " images across " << specs.size()
            << " domains to " << out << " (seed " << seed << ")\n";
  return 0;
}

inline int cmd_stats(const std::string& manifest_path) {
  Manifest m = parse_manifest(manifest_path);
  std::vector<DomainStats> stats = domain_stats(m);
  std::cout << "manifest: " << manifest_path << "\n\n";
  size_t dw = 6;
  for (const auto& s : stats) dw = std::max(dw, s.domain.size());
  std::cout << "domain" << std::string(dw - 6, ' ')
            << "      n   mean R   mean G   mean B    std R    std G    std B"
            << "   g0   g1   g2   g3   g4\n";
  for (const DomainStats& s : stats) {
    std::cout << s.domain << std::string(dw - s.domain.size(), ' ');
    char buf[160];
    std::snprintf(buf, sizeof buf, " %6d %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f", s.n_images,
                  s.mean[0], s.mean[1], s.mean[2], s.stddev[0], s.stddev[1], s.stddev[2]);
    std::cout << buf;
    for (long long h : s.class_hist) {
      std::snprintf(buf, sizeof buf, " %4lld", h);
      std::cout << buf;
    }
    std::cout << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// train + eval + bench + grad-check
// ---------------------------------------------------------------------------

inline int cmd_train(const std::string& manifest_path, const std::string& method,
                     TrainConfig cfg, const std::string& out) {
  cfg.method = method_name(method_from_name(method));
  cfg.validate();
  Manifest m = parse_manifest(manifest_path);
  LoadedDataset ds = load_dataset(m, cfg.input_size);
  MethodFlags flags = method_from_name(cfg.method);
  TrainOutput trained = train(cfg, flags, ds, RngStream(cfg.seed));
  save_model(trained.net, cfg.to_kv(), out);
  std::cout << "method " << cfg.method << ", seed " << cfg.seed << ", " << ds.size()
            << " images, " << cfg.epochs << " epochs\n";
  std::cout << "epoch    alpha        lr       sup       con     total\n";
  for (size_t e = 0; e < trained.history.size(); ++e) {
    const EpochStats& h = trained.history[e];
    char buf[120];
    std::snprintf(buf, sizeof buf, "%5zu %8.4f %9.6f %9.5f %9.5f %9.5f\n", e, h.alpha, h.lr,
                  h.sup, h.con, h.total);
    std::cout << buf;
  }
  std::cout << "params " << hex64(params_hash(trained.net.params())) << " -> " << out << "\n";
  return 0;
}

inline int cmd_eval(const std::string& model_path, const std::string& manifest_path,
                    const std::string& json_out) {
  LoadedModel model = load_model(model_path);
  Manifest m = parse_manifest(manifest_path);
  LoadedDataset ds = load_dataset(m, model.cfg.input_size);
  EvalResult ev = evaluate(model.net, ds, model.cfg.threads);

  std::cout << "model: " << model_path << " (method " << model.cfg.method << ", seed "
            << model.cfg.seed << ", config " << hex64(model.meta.hash()) << ")\n";
  std::cout << "manifest: " << manifest_path << " (" << ds.size() << " images)\n\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "   AUC %6.2f\n   ACC %6.2f\n    F1 %6.2f\n", 100.0 * ev.auc,
                100.0 * ev.acc, 100.0 * ev.f1);
  std::cout << buf << "\nper-class (NaN = class absent from labels):\n";
  for (size_t c = 0; c < ev.auc_per_class.size(); ++c) {
    std::snprintf(buf, sizeof buf, "  g%zu  AUC %6.2f   F1 %6.2f\n", c,
                  100.0 * ev.auc_per_class[c], 100.0 * ev.f1_per_class[c]);
    std::cout << buf;
  }
  std::cout << "\nauc = " << fmt_g(100.0 * ev.auc) << "\nacc = " << fmt_g(100.0 * ev.acc)
            << "\nf1 = " << fmt_g(100.0 * ev.f1) << "\n";

  if (!json_out.empty()) {
    auto num_or_null = [](double v) {
      return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
    };
    nlohmann::json j;
    j["model"] = model_path;
    j["manifest"] = manifest_path;
    j["config_hash"] = hex64(model.meta.hash());
    j["seed"] = model.cfg.seed;
    j["config"] = nlohmann::json::object();
    for (const auto& [k, v] : model.meta.entries()) j["config"][k] = v;
    j["auc"] = 100.0 * ev.auc;
    j["acc"] = 100.0 * ev.acc;
    j["f1"] = 100.0 * ev.f1;
    j["auc_per_class"] = nlohmann::json::array();
    for (double v : ev.auc_per_class) j["auc_per_class"].push_back(num_or_null(100.0 * v));
    j["f1_per_class"] = nlohmann::json::array();
    for (double v : ev.f1_per_class) j["f1_per_class"].push_back(num_or_null(100.0 * v));
    std::ofstream jf(json_out, std::ios::trunc);
    if (!jf) throw WriteError("cannot write " + json_out);
    jf << j.dump(2) << "\n";
  }
  return 0;
}

inline int cmd_bench(const std::string& manifest_path, const std::string& protocol_name_in,
                     TrainConfig cfg, const std::string& out_dir) {
  Protocol protocol;
  if (protocol_name_in == "dg")
    protocol = Protocol::DG;
  else if (protocol_name_in == "esdg")
    protocol = Protocol::ESDG;
  else
    throw ConfigError("--protocol must be dg or esdg, got `" + protocol_name_in + "`");

  Manifest m = parse_manifest(manifest_path);
  LoadedDataset full = load_dataset(m, cfg.input_size);
  BenchReport report = run_protocol(full, protocol, cfg);

  std::string text = report_text(report);
  std::cout << text;
  fs::create_directories(out_dir);
  {
    std::ofstream tf(fs::path(out_dir) / "report.txt", std::ios::trunc);
    if (!tf) throw WriteError("cannot write report in " + out_dir);
    tf << text;
  }
  {
    std::ofstream jf(fs::path(out_dir) / "report.json", std::ios::trunc);
    if (!jf) throw WriteError("cannot write report in " + out_dir);
    jf << report_json(report).dump(2) << "\n";
  }
  return 0;
}

inline int cmd_grad_check(int instances, std::uint64_t seed) {
  GradSuiteResult res = run_gradient_suite(instances, seed);
  char buf[120];
  std::snprintf(buf, sizeof buf,
                "cross_entropy  max rel err %.3e\nntxent         max rel err %.3e\n"
                "tinynet        max rel err %.3e\n",
                res.ce_max_rel, res.ntxent_max_rel, res.net_max_rel);
  std::cout << buf;
  bool ok = res.pass();
  std::cout << (ok ? "PASS" : "FAIL") << " (" << instances
            << " instances each, eps 1e-5, tolerances 1e-5 loss / 1e-4 net)\n";
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
  static const std::vector<std::string> kCommands = {"augment", "dcr-weights", "synth", "stats",
                                                     "train",   "eval",        "bench", "grad-check"};
  if (argc >= 2 && argv[1][0] != '-') {
    std::string cmd = argv[1];
    if (std::find(kCommands.begin(), kCommands.end(), cmd) == kCommands.end()) {
      std::string best;
      int best_d = 1 << 20;
      for (const std::string& k : kCommands) {
        int d = levenshtein(cmd, k);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      std::cerr << "gdrkit: unknown command `" << cmd << "`";
      if (best_d <= 3) std::cerr << ", did you mean `" << best << "`?";
      std::cerr << "\n";
      return 2;
    }
  }

  CLI::App app{"gdrkit: fundus-style augmentation, hybrid-loss training, and "
               "domain-generalization benchmarking"};
  app.require_subcommand(1);

  // Shared option state. Each subcommand binds what it uses.
  std::string in, out, config_path, plan_out, manifest_path, method = "gdrnet";
  std::string model_path, json_out, spec_path, mode = "joint", protocol = "dg";
  std::uint64_t seed_flag = 0;
  int threads_flag = 0, instances = 20;
  double beta = 0.5;

  auto* c_aug = app.add_subcommand("augment", "Augment one image or a directory of images");
  c_aug->add_option("--in", in, "input image or directory")->required();
  c_aug->add_option("--out", out, "output image or directory")->required();
  auto* aug_seed = c_aug->add_option("--seed", seed_flag, "RNG seed");
  c_aug->add_option("--config", config_path, "keyed config file (aug.* keys)");
  c_aug->add_option("--plan-out", plan_out, "write realized plans as JSON lines");

  auto* c_dcr = app.add_subcommand("dcr-weights", "Print re-balancing q and w tables");
  c_dcr->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();
  c_dcr->add_option("--beta", beta, "re-balancing exponent (default 0.5)");
  c_dcr->add_option("--mode", mode, "q estimate: joint | conditional");

  auto* c_synth = app.add_subcommand("synth", "Generate the synthetic multi-domain corpus");
  c_synth->add_option("--spec", spec_path, "domain spec file (defaults built in)");
  auto* synth_seed = c_synth->add_option("--seed", seed_flag, "RNG seed");
  c_synth->add_option("--out", out, "output directory")->required();

  auto* c_stats = app.add_subcommand("stats", "Per-domain channel statistics and grade histogram");
  c_stats->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();

  auto* c_train = app.add_subcommand("train", "Train a model on a manifest");
  c_train->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();
  c_train->add_option("--method", method, "erm | a..g | gdrnet");
  c_train->add_option("--config", config_path, "keyed config file");
  c_train->add_option("--out", out, "model output file")->required();
  auto* train_seed = c_train->add_option("--seed", seed_flag, "RNG seed");
  auto* train_threads = c_train->add_option("--threads", threads_flag, "worker threads");

  auto* c_eval = app.add_subcommand("eval", "Evaluate a model on a manifest");
  c_eval->add_option("--model", model_path, "model file from `train`")->required();
  c_eval->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();
  c_eval->add_option("--json", json_out, "also write a JSON report");

  auto* c_bench = app.add_subcommand("bench", "Run a full DG/ESDG protocol");
  c_bench->add_option("--protocol", protocol, "dg | esdg")->required();
  c_bench->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();
  c_bench->add_option("--method", method, "erm | a..g | gdrnet");
  auto* bench_seed = c_bench->add_option("--seed", seed_flag, "RNG seed");
  c_bench->add_option("--config", config_path, "keyed config file");
  c_bench->add_option("--out", out, "report output directory")->required();
  auto* bench_threads = c_bench->add_option("--threads", threads_flag, "worker threads");

  auto* c_grad = app.add_subcommand("grad-check", "Finite-difference gradient verification");
  c_grad->add_option("--instances", instances, "random instances per suite (default 20)");
  auto* grad_seed = c_grad->add_option("--seed", seed_flag, "RNG seed (default 42)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (c_aug->parsed()) {
      KvConfig kv = load_config_or_empty(config_path);
      TrainConfig cfg = TrainConfig::from_kv(kv);
      std::uint64_t seed =
          resolve_seed(aug_seed->count() > 0, seed_flag, config_path.empty() ? nullptr : &kv);
      cfg.seed = seed;
      return cmd_augment(in, out, seed, cfg, plan_out);
    }
    if (c_dcr->parsed()) return cmd_dcr_weights(manifest_path, beta, mode);
    if (c_synth->parsed()) {
      std::uint64_t seed = resolve_seed(synth_seed->count() > 0, seed_flag, nullptr);
      return cmd_synth(spec_path, seed, out);
    }
    if (c_stats->parsed()) return cmd_stats(manifest_path);
    if (c_train->parsed() || c_bench->parsed()) {
      KvConfig kv = load_config_or_empty(config_path);
      TrainConfig cfg = TrainConfig::from_kv(kv);
      CLI::Option* seed_opt = c_train->parsed() ? train_seed : bench_seed;
      CLI::Option* threads_opt = c_train->parsed() ? train_threads : bench_threads;
      cfg.seed = resolve_seed(seed_opt->count() > 0, seed_flag,
                              config_path.empty() ? nullptr : &kv);
      if (threads_opt->count() > 0) cfg.threads = threads_flag;
      bool method_given = c_train->parsed() ? c_train->count("--method") > 0
                                            : c_bench->count("--method") > 0;
      if (method_given || !kv.has("method"))
        cfg.method = method_name(method_from_name(method));
      if (c_train->parsed()) return cmd_train(manifest_path, cfg.method, cfg, out);
      if (protocol == "esdg") apply_protocol_tau(cfg, kv, Protocol::ESDG);
      return cmd_bench(manifest_path, protocol, cfg, out);
    }
    if (c_eval->parsed()) return cmd_eval(model_path, manifest_path, json_out);
    if (c_grad->parsed())
      return cmd_grad_check(instances, grad_seed->count() > 0 ? seed_flag : 42);
  } catch (const std::exception& e) {
    std::cerr << "gdrkit: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace cli
}  // namespace gdrkit
