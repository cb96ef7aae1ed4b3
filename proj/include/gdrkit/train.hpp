#pragma once

// Training: strong views from the probabilistic augmentation pipeline, weak
// views for the contrastive pairs, the hybrid loss with its linear alpha
// decay, domain-class re-balancing weights, and SGD with momentum under a
// cosine learning-rate schedule. Given (config, seed, data) the trained
// parameters are bit-reproducible for any thread count.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gdrkit/augment.hpp"
#include "gdrkit/common.hpp"
#include "gdrkit/config.hpp"
#include "gdrkit/dcr.hpp"
#include "gdrkit/image.hpp"
#include "gdrkit/image_io.hpp"
#include "gdrkit/losses.hpp"
#include "gdrkit/manifest.hpp"
#include "gdrkit/metrics.hpp"
#include "gdrkit/net.hpp"
#include "gdrkit/rng.hpp"

namespace gdrkit {

// ---------------------------------------------------------------------------
// Method grid: the baseline, single components A-D, combinations E-G, and
// the full method. vt = visual transforms, id = image degradations,
// dcr = re-balancing weights, dhl = hybrid loss with contrastive term.
// ---------------------------------------------------------------------------

struct MethodFlags {
  bool vt = false;
  bool id = false;
  bool dcr = false;
  bool dhl = false;

  bool operator==(const MethodFlags&) const = default;
};

inline MethodFlags method_from_name(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "erm") return {false, false, false, false};
  if (s == "a") return {true, false, false, false};
  if (s == "b") return {false, true, false, false};
  if (s == "c") return {false, false, true, false};
  if (s == "d") return {false, false, false, true};
  if (s == "e") return {true, true, false, false};
  if (s == "f") return {true, true, true, false};
  if (s == "g") return {true, true, false, true};
  if (s == "gdrnet") return {true, true, true, true};
  throw std::invalid_argument("unknown method `" + name + "` (expected erm, a..g, or gdrnet)");
}

inline std::string method_name(const MethodFlags& f) {
  static const std::pair<const char*, MethodFlags> rows[] = {
      {"erm", {false, false, false, false}}, {"a", {true, false, false, false}},
      {"b", {false, true, false, false}},    {"c", {false, false, true, false}},
      {"d", {false, false, false, true}},    {"e", {true, true, false, false}},
      {"f", {true, true, true, false}},      {"g", {true, true, false, true}},
      {"gdrnet", {true, true, true, true}},
  };
  for (const auto& [n, fl] : rows)
    if (fl == f) return n;
  return "custom";
}

// ---------------------------------------------------------------------------
// TrainConfig: flat key-value surface mirroring the config file one-to-one.
// ---------------------------------------------------------------------------

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double lr_initial = 1e-3;
  double lr_final = 1e-4;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double tau = 0.1;
  double dcr_beta = 0.5;
  int input_size = 64;
  int conv1_ch = 16;
  int conv2_ch = 32;
  int trunk_dim = 128;
  int proj_hidden = 128;
  int embed_dim = 32;
  int num_classes = 5;
  /// < 0: alpha follows the linear 1 -> 0 decay; otherwise held constant.
  double alpha_fixed = -1.0;
  bool dcr_enabled = true;
  QMode dcr_mode = QMode::Joint;
  /// Use the re-balancing weights to sample batch items (with replacement)
  /// instead of scaling per-sample losses.
  bool dcr_sampling = false;
  /// Reuse the re-balancing weights as contrastive pair weights.
  bool dcr_on_contrastive = false;
  bool symmetric_ntxent = false;
  int threads = 1;
  std::uint64_t seed = 0;
  std::string method = "gdrnet";
  AugConfig aug = AugConfig::defaults();

  NetConfig net() const {
    NetConfig n;
    n.input_size = input_size;
    n.conv1_ch = conv1_ch;
    n.conv2_ch = conv2_ch;
    n.trunk_dim = trunk_dim;
    n.proj_hidden = proj_hidden;
    n.embed_dim = embed_dim;
    n.num_classes = num_classes;
    return n;
  }

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(lr_initial > 0.0) || !(lr_final > 0.0))
      throw std::invalid_argument("TrainConfig: learning rates must be > 0");
    if (momentum < 0.0 || momentum >= 1.0)
      throw std::invalid_argument("TrainConfig: momentum must be in [0,1)");
    if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
    if (!(tau > 0.0)) throw std::invalid_argument("TrainConfig: tau must be > 0");
    if (dcr_beta < 0.0) throw std::invalid_argument("TrainConfig: dcr_beta must be >= 0");
    if (alpha_fixed > 1.0)
      throw std::invalid_argument("TrainConfig: alpha_fixed must be <= 1 (or < 0 for the decay)");
    if (threads < 1) throw std::invalid_argument("TrainConfig: threads must be >= 1");
    net().validate();
    aug.validate();
    method_from_name(method);
  }

  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = [] {
      std::set<std::string> k = {
          "epochs",      "batch_size",  "lr_initial",  "lr_final",
          "momentum",    "weight_decay", "tau",         "dcr_beta",
          "input_size",  "conv1_ch",    "conv2_ch",    "trunk_dim",
          "proj_hidden", "embed_dim",   "num_classes", "alpha_fixed",
          "dcr_enabled", "dcr_mode",    "dcr_sampling", "dcr_on_contrastive",
          "symmetric_ntxent", "threads", "seed",        "method",
      };
      for (int i = 0; i < kNumTransforms; ++i) {
        std::string base = std::string("aug.") + transform_name(static_cast<Transform>(i));
        k.insert(base + ".enabled");
        k.insert(base + ".p");
        k.insert(base + ".lo");
        k.insert(base + ".hi");
      }
      return k;
    }();
    return keys;
  }

  static TrainConfig from_kv(const KvConfig& kv) {
    kv.reject_unknown(known_keys());
    TrainConfig c;
    c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
    c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
    c.lr_initial = kv.get_double("lr_initial", c.lr_initial);
    c.lr_final = kv.get_double("lr_final", c.lr_final);
    c.momentum = kv.get_double("momentum", c.momentum);
    c.weight_decay = kv.get_double("weight_decay", c.weight_decay);
    c.tau = kv.get_double("tau", c.tau);
    c.dcr_beta = kv.get_double("dcr_beta", c.dcr_beta);
    c.input_size = static_cast<int>(kv.get_int("input_size", c.input_size));
    c.conv1_ch = static_cast<int>(kv.get_int("conv1_ch", c.conv1_ch));
    c.conv2_ch = static_cast<int>(kv.get_int("conv2_ch", c.conv2_ch));
    c.trunk_dim = static_cast<int>(kv.get_int("trunk_dim", c.trunk_dim));
    c.proj_hidden = static_cast<int>(kv.get_int("proj_hidden", c.proj_hidden));
    c.embed_dim = static_cast<int>(kv.get_int("embed_dim", c.embed_dim));
    c.num_classes = static_cast<int>(kv.get_int("num_classes", c.num_classes));
    c.alpha_fixed = kv.get_double("alpha_fixed", c.alpha_fixed);
    c.dcr_enabled = kv.get_bool("dcr_enabled", c.dcr_enabled);
    std::string mode = kv.get("dcr_mode", "joint");
    if (mode == "joint")
      c.dcr_mode = QMode::Joint;
    else if (mode == "conditional")
      c.dcr_mode = QMode::PerDomainConditional;
    else
      throw ConfigError("dcr_mode must be `joint` or `conditional`, got `" + mode + "`");
    c.dcr_sampling = kv.get_bool("dcr_sampling", c.dcr_sampling);
    c.dcr_on_contrastive = kv.get_bool("dcr_on_contrastive", c.dcr_on_contrastive);
    c.symmetric_ntxent = kv.get_bool("symmetric_ntxent", c.symmetric_ntxent);
    c.threads = static_cast<int>(kv.get_int("threads", c.threads));
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
    c.method = kv.get("method", c.method);
    for (int i = 0; i < kNumTransforms; ++i) {
      std::string base = std::string("aug.") + transform_name(static_cast<Transform>(i));
      TransformConfig& e = c.aug.entries[static_cast<size_t>(i)];
      e.enabled = kv.get_bool(base + ".enabled", e.enabled);
      e.probability = kv.get_double(base + ".p", e.probability);
      e.lo = kv.get_double(base + ".lo", e.lo);
      e.hi = kv.get_double(base + ".hi", e.hi);
    }
    c.validate();
    return c;
  }

  KvConfig to_kv() const {
    auto fd = [](double v) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return std::string(buf);
    };
    auto fb = [](bool v) { return std::string(v ? "true" : "false"); };
    KvConfig kv;
    kv.set("epochs", std::to_string(epochs));
    kv.set("batch_size", std::to_string(batch_size));
    kv.set("lr_initial", fd(lr_initial));
    kv.set("lr_final", fd(lr_final));
    kv.set("momentum", fd(momentum));
    kv.set("weight_decay", fd(weight_decay));
    kv.set("tau", fd(tau));
    kv.set("dcr_beta", fd(dcr_beta));
    kv.set("input_size", std::to_string(input_size));
    kv.set("conv1_ch", std::to_string(conv1_ch));
    kv.set("conv2_ch", std::to_string(conv2_ch));
    kv.set("trunk_dim", std::to_string(trunk_dim));
    kv.set("proj_hidden", std::to_string(proj_hidden));
    kv.set("embed_dim", std::to_string(embed_dim));
    kv.set("num_classes", std::to_string(num_classes));
    kv.set("alpha_fixed", fd(alpha_fixed));
    kv.set("dcr_enabled", fb(dcr_enabled));
    kv.set("dcr_mode", dcr_mode == QMode::Joint ? "joint" : "conditional");
    kv.set("dcr_sampling", fb(dcr_sampling));
    kv.set("dcr_on_contrastive", fb(dcr_on_contrastive));
    kv.set("symmetric_ntxent", fb(symmetric_ntxent));
    kv.set("threads", std::to_string(threads));
    kv.set("seed", std::to_string(seed));
    kv.set("method", method);
    for (int i = 0; i < kNumTransforms; ++i) {
      std::string base = std::string("aug.") + transform_name(static_cast<Transform>(i));
      const TransformConfig& e = aug.entries[static_cast<size_t>(i)];
      kv.set(base + ".enabled", fb(e.enabled));
      kv.set(base + ".p", fd(e.probability));
      kv.set(base + ".lo", fd(e.lo));
      kv.set(base + ".hi", fd(e.hi));
    }
    return kv;
  }
};

/// Strong-view augmentation config for a method: components the method does
/// not use are disabled outright (no RNG draws), the rest keep their
/// configured probabilities.
inline AugConfig masked_aug(const AugConfig& base, const MethodFlags& flags) {
  AugConfig cfg = base;
  for (int i = 0; i < kNumTransforms; ++i) {
    Transform t = static_cast<Transform>(i);
    bool keep = is_visual_transform(t) ? flags.vt : flags.id;
    if (!keep) {
      cfg.entries[static_cast<size_t>(i)].enabled = false;
      cfg.entries[static_cast<size_t>(i)].probability = 0.0;
    }
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Dataset resident in memory, resized once at load.
// ---------------------------------------------------------------------------

struct LoadedDataset {
  std::vector<ImageRgb> images;
  std::vector<int> labels;
  std::vector<int> domain_idx;        // index into `domains`
  std::vector<std::string> domains;   // sorted unique

  int size() const { return static_cast<int>(images.size()); }

  int classes_present() const {
    std::set<int> s(labels.begin(), labels.end());
    return static_cast<int>(s.size());
  }
};

inline LoadedDataset load_dataset(const Manifest& m, int input_size) {
  if (m.records.empty()) throw Error("load_dataset: empty manifest");
  LoadedDataset ds;
  ds.domains = m.domains();
  ds.images.reserve(m.records.size());
  for (const ManifestRecord& rec : m.records) {
    ImageRgb img = load_image(m.resolve(rec));
    if (img.width != input_size || img.height != input_size)
      img = resize_bilinear(img, input_size, input_size);
    ds.images.push_back(std::move(img));
    ds.labels.push_back(rec.grade);
    auto it = std::lower_bound(ds.domains.begin(), ds.domains.end(), rec.domain);
    ds.domain_idx.push_back(static_cast<int>(it - ds.domains.begin()));
  }
  return ds;
}

inline DomainClassCounts dataset_counts(const LoadedDataset& ds, int num_classes) {
  DomainClassCounts cc;
  cc.domains = ds.domains;
  cc.classes.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) cc.classes[c] = std::to_string(c);
  cc.counts = Mat(static_cast<int>(ds.domains.size()), num_classes);
  for (int i = 0; i < ds.size(); ++i) cc.counts(ds.domain_idx[i], ds.labels[i]) += 1.0;
  return cc;
}

// ---------------------------------------------------------------------------
// One optimization step's inputs and outputs. Shared by the trainer and the
// finite-difference harness: the loss surface as a function of parameters is
// exactly what run_batch evaluates.
// ---------------------------------------------------------------------------

struct BatchInputs {
  Mat strong;                        // B x input_dim
  Mat weak;                          // B x input_dim, unused when !contrastive
  std::vector<int> labels;           // B
  std::vector<double> ce_weights;    // empty = uniform
  std::vector<double> pair_weights;  // empty = uniform
  double alpha = 0.0;
  double tau = 0.1;
  bool symmetric = false;
  bool contrastive = false;          // alpha > 0: weak views exist
};

struct BatchOutputs {
  double total = 0.0;
  double sup = 0.0;
  double con = 0.0;
  std::vector<double> grad;  // empty unless want_grad
};

inline BatchOutputs run_batch(const TinyNet& net, const BatchInputs& in, bool want_grad,
                              int threads = 1) {
  BatchOutputs out;
  NetForward fs = net.forward(in.strong, threads);
  LogitsBatch lb;
  lb.logits = fs.logits;
  lb.labels = in.labels;
  lb.weights = in.ce_weights;
  CeResult ce = cross_entropy(lb);
  out.sup = ce.loss;

  if (!in.contrastive) {
    out.con = 0.0;
    out.total = ce.loss;
    if (want_grad) {
      Mat zero_embed(fs.embeddings.rows, fs.embeddings.cols);
      out.grad = net.backward(fs.cache, ce.grad, zero_embed, threads);
    }
    return out;
  }

  NetForward fw = net.forward(in.weak, threads);
  EmbeddingBatch eb;
  eb.strong = fs.embeddings;
  eb.weak = fw.embeddings;
  NtxentOptions opt;
  opt.symmetric = in.symmetric;
  opt.pair_weights = in.pair_weights;
  NtxentResult nx = ntxent(eb, in.tau, opt);
  DahResult dah = dahloss_combine(ce, nx, in.alpha);
  out.con = nx.loss;
  out.total = dah.loss;
  if (want_grad) {
    std::vector<double> gs = net.backward(fs.cache, dah.grad_logits, dah.grad_strong, threads);
    Mat zero_logits(fw.logits.rows, fw.logits.cols);
    std::vector<double> gw = net.backward(fw.cache, zero_logits, dah.grad_weak, threads);
    for (size_t k = 0; k < gs.size(); ++k) gs[k] += gw[k];
    out.grad = std::move(gs);
  }
  return out;
}

// ---------------------------------------------------------------------------
// The training loop.
// ---------------------------------------------------------------------------

struct EpochStats {
  double alpha = 0.0;
  double lr = 0.0;
  double sup = 0.0;    // mean supervised loss over batches
  double con = 0.0;    // mean contrastive loss over batches
  double total = 0.0;  // mean combined loss over batches
  std::uint64_t param_hash = 0;  // hash of the parameter vector after the epoch
};

struct TrainOutput {
  TinyNet net;
  std::vector<EpochStats> history;
};

inline std::uint64_t params_hash(const std::vector<double>& p) {
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(p.data()),
                                  p.size() * sizeof(double)));
}

namespace detail {

/// Item order for one epoch: a uniform shuffle, or weighted draws with
/// replacement when the re-balancing weights drive sampling.
inline std::vector<int> epoch_order(int n, RngStream& rng, const std::vector<double>* weights) {
  std::vector<int> order(n);
  if (weights == nullptr) {
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }
    return order;
  }
  std::vector<double> cum(weights->size());
  double run = 0.0;
  for (size_t i = 0; i < weights->size(); ++i) {
    run += (*weights)[i];
    cum[i] = run;
  }
  if (!(run > 0.0)) throw Error("train: sampling weights sum to zero");
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform() * run;
    order[i] = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (order[i] >= static_cast<int>(cum.size())) order[i] = static_cast<int>(cum.size()) - 1;
  }
  return order;
}

}  // namespace detail

inline TrainOutput train(const TrainConfig& cfg, const MethodFlags& flags,
                         const LoadedDataset& ds, const RngStream& root) {
  cfg.validate();
  if (ds.size() == 0) throw Error("train: empty dataset");
  if (ds.classes_present() < 2) throw Error("train: need at least 2 classes in the data");
  for (int y : ds.labels)
    if (y < 0 || y >= cfg.num_classes)
      throw Error("train: label outside [0, num_classes)");
  int batches = ds.size() / cfg.batch_size;
  if (batches < 1) throw Error("train: batch_size exceeds dataset size");

  AugConfig strong_cfg = masked_aug(cfg.aug, flags);
  bool use_dcr = flags.dcr && cfg.dcr_enabled;

  // Per-item loss weights from the domain-class table; empty means uniform.
  std::vector<double> item_weights;
  if (use_dcr) {
    DcrTable table = DcrTable::build(dataset_counts(ds, cfg.num_classes), cfg.dcr_beta,
                                     cfg.dcr_mode);
    item_weights.resize(ds.size());
    for (int i = 0; i < ds.size(); ++i)
      item_weights[i] = table.weight(ds.domain_idx[i], ds.labels[i]);
  }

  TinyNet net(cfg.net(), root.derive("init"));
  OptimState opt(net.param_count());
  opt.momentum = cfg.momentum;
  opt.weight_decay = cfg.weight_decay;

  AlphaSchedule sched{cfg.epochs};
  int input_dim = cfg.net().input_dim();
  TrainOutput out{std::move(net), {}};

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double alpha;
    if (!flags.dhl)
      alpha = 0.0;
    else if (cfg.alpha_fixed >= 0.0)
      alpha = cfg.alpha_fixed;
    else
      alpha = alpha_at(sched, epoch);
    bool contrastive = alpha > 0.0;
    opt.lr = lr_at(cfg.lr_initial, cfg.lr_final, cfg.epochs, epoch);

    RngStream shuffle_rng = root.derive("shuffle", {static_cast<std::uint64_t>(epoch)});
    bool sample_by_weight = use_dcr && cfg.dcr_sampling;
    std::vector<int> order =
        detail::epoch_order(ds.size(), shuffle_rng, sample_by_weight ? &item_weights : nullptr);

    EpochStats stats;
    stats.alpha = alpha;
    stats.lr = opt.lr;

    for (int b = 0; b < batches; ++b) {
      int B = cfg.batch_size;
      BatchInputs in;
      in.strong = Mat(B, input_dim);
      in.labels.resize(B);
      in.alpha = alpha;
      in.tau = cfg.tau;
      in.symmetric = cfg.symmetric_ntxent;
      in.contrastive = contrastive;
      if (contrastive) in.weak = Mat(B, input_dim);
      bool weight_losses = use_dcr && !cfg.dcr_sampling;
      if (weight_losses) in.ce_weights.resize(B);
      if (weight_losses && cfg.dcr_on_contrastive) in.pair_weights.resize(B);

      parallel_for(B, cfg.threads, [&](int j) {
        std::uint64_t slot = static_cast<std::uint64_t>(b) * B + j;
        int item = order[slot];
        RngStream srng = root.derive("strong", {static_cast<std::uint64_t>(epoch), slot});
        auto [simg, plan] = fundus_aug(ds.images[item], strong_cfg, srng);
        std::vector<double> flat = flatten_chw(simg);
        std::copy(flat.begin(), flat.end(), &in.strong.a[static_cast<size_t>(j) * input_dim]);
        if (contrastive) {
          RngStream wrng = root.derive("weak", {static_cast<std::uint64_t>(epoch), slot});
          ImageRgb wimg = weak_augment(ds.images[item], wrng);
          std::vector<double> wflat = flatten_chw(wimg);
          std::copy(wflat.begin(), wflat.end(), &in.weak.a[static_cast<size_t>(j) * input_dim]);
        }
        in.labels[j] = ds.labels[item];
        if (weight_losses) in.ce_weights[j] = item_weights[item];
        if (weight_losses && cfg.dcr_on_contrastive) in.pair_weights[j] = item_weights[item];
      });

      BatchOutputs res = run_batch(out.net, in, true, cfg.threads);
      sgd_step(out.net, res.grad, opt);
      stats.sup += res.sup;
      stats.con += res.con;
      stats.total += res.total;
    }

    stats.sup /= batches;
    stats.con /= batches;
    stats.total /= batches;
    stats.param_hash = params_hash(out.net.params());
    out.history.push_back(stats);
  }
  return out;
}

inline TrainOutput train(const TrainConfig& cfg, const MethodFlags& flags, const Manifest& m,
                         const RngStream& root) {
  return train(cfg, flags, load_dataset(m, cfg.input_size), root);
}

// ---------------------------------------------------------------------------
// Evaluation: plain forward on un-augmented inputs, softmax probabilities,
// and the three benchmark metrics as fractions.
// ---------------------------------------------------------------------------

struct EvalResult {
  Mat probs;  // N x C
  std::vector<int> labels;
  double auc = 0.0;
  double acc = 0.0;
  double f1 = 0.0;
  std::vector<double> auc_per_class;  // NaN for classes absent from labels
  std::vector<double> f1_per_class;
};

inline EvalResult evaluate(const TinyNet& net, const LoadedDataset& ds, int threads = 1,
                           int chunk = 64) {
  if (ds.size() == 0) throw Error("evaluate: empty dataset");
  const NetConfig& c = net.config();
  int n = ds.size();
  EvalResult res;
  res.probs = Mat(n, c.num_classes);
  res.labels = ds.labels;
  for (int start = 0; start < n; start += chunk) {
    int count = std::min(chunk, n - start);
    Mat x(count, c.input_dim());
    parallel_for(count, threads, [&](int j) {
      std::vector<double> flat = flatten_chw(ds.images[static_cast<size_t>(start) + j]);
      std::copy(flat.begin(), flat.end(), &x.a[static_cast<size_t>(j) * c.input_dim()]);
    });
    NetForward f = net.forward(x, threads);
    Mat probs = softmax_rows(f.logits);
    std::copy(probs.a.begin(), probs.a.end(),
              res.probs.a.begin() + static_cast<size_t>(start) * c.num_classes);
  }
  std::vector<int> preds = argmax_rows(res.probs);
  res.auc = auc_ovr_macro(res.probs, res.labels);
  res.acc = accuracy(preds, res.labels);
  res.f1 = macro_f1(preds, res.labels);
  res.auc_per_class = auc_ovr_per_class(res.probs, res.labels);
  res.f1_per_class = f1_per_class(preds, res.labels, c.num_classes);
  return res;
}

// ---------------------------------------------------------------------------
// Model file: magic, format version, embedded provenance config, dimensions,
// raw parameter bits. Little-endian on disk.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct ByteReader {
  const std::string& buf;
  size_t at = 0;
  const std::string& path;

  void need(size_t n) {
    if (at + n > buf.size()) throw DecodeError("truncated model file: " + path);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[at++])) << (8 * i);
    return v;
  }
};

}  // namespace detail

inline constexpr char kModelMagic[8] = {'G', 'D', 'R', 'K', 'M', 'O', 'D', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

inline void save_model(const TinyNet& net, const KvConfig& meta, const std::string& path) {
  std::string blob;
  blob.append(kModelMagic, sizeof kModelMagic);
  detail::put_u32(blob, kModelVersion);
  std::string cfg_text = meta.serialize();
  detail::put_u64(blob, cfg_text.size());
  blob += cfg_text;
  detail::put_u64(blob, net.param_count());
  for (double p : net.params()) {
    std::uint64_t bits;
    std::memcpy(&bits, &p, sizeof bits);
    detail::put_u64(blob, bits);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WriteError("cannot open for writing: " + path);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw WriteError("write failed: " + path);
}

struct LoadedModel {
  TrainConfig cfg;
  KvConfig meta;
  TinyNet net;
};

inline LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileMissingError("no such model file: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::ByteReader r{buf, 0, path};
  r.need(sizeof kModelMagic);
  if (std::memcmp(buf.data(), kModelMagic, sizeof kModelMagic) != 0)
    throw DecodeError("not a model file (bad magic): " + path);
  r.at = sizeof kModelMagic;
  std::uint32_t version = r.u32();
  if (version != kModelVersion)
    throw DecodeError("unsupported model format version " + std::to_string(version) + ": " + path);
  std::uint64_t cfg_len = r.u64();
  r.need(cfg_len);
  KvConfig meta = KvConfig::parse_string(buf.substr(r.at, cfg_len), path + " (embedded config)");
  r.at += cfg_len;
  TrainConfig cfg = TrainConfig::from_kv(meta);
  std::uint64_t count = r.u64();
  TinyNet net(cfg.net());
  if (count != net.param_count())
    throw DecodeError("model parameter count mismatch: " + path);
  std::vector<double>& params = net.mutable_params();
  for (std::uint64_t k = 0; k < count; ++k) {
    std::uint64_t bits = r.u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    params[k] = v;
  }
  if (r.at != buf.size()) throw DecodeError("trailing bytes in model file: " + path);
  return LoadedModel{std::move(cfg), std::move(meta), std::move(net)};
}

}  // namespace gdrkit
