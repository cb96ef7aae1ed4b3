#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gdrkit/train.hpp"

using namespace gdrkit;

namespace {

// Three color-coded classes spread over two domains: linearly separable from
// mean channel values, so even a few dozen SGD steps must bite.
LoadedDataset make_separable(int per_class, int classes, int size, std::uint64_t seed) {
  LoadedDataset ds;
  ds.domains = {"east", "west"};
  RngStream rng(seed);
  int idx = 0;
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      double r = 0.15 + 0.7 * c / std::max(1, classes - 1);
      ImageRgb img = ImageRgb::constant(size, size, r, 1.0 - r, 0.3 + 0.4 * (c % 2));
      for (auto& v : img.data) v = clamp01(v + 0.02 * rng.normal());
      ds.images.push_back(std::move(img));
      ds.labels.push_back(c);
      ds.domain_idx.push_back(idx++ % 2);
    }
  return ds;
}

TrainConfig tiny_cfg() {
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 8;
  cfg.lr_initial = 5e-3;
  cfg.lr_final = 1e-3;
  cfg.input_size = 16;
  cfg.conv1_ch = 4;
  cfg.conv2_ch = 4;
  cfg.trunk_dim = 8;
  cfg.proj_hidden = 8;
  cfg.embed_dim = 4;
  cfg.num_classes = 3;
  return cfg;
}

}  // namespace

TEST_CASE("supervised training drives the loss down on separable data") {
  LoadedDataset ds = make_separable(16, 3, 16, 11);
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 30;
  cfg.lr_initial = 1e-2;
  cfg.lr_final = 1e-2;
  TrainOutput out = train(cfg, method_from_name("erm"), ds, RngStream(3));
  REQUIRE(out.history.size() == 30);
  // Zero-init classifier puts the very first batch at uniform CE = ln 3; the
  // epoch-0 mean already reflects a few updates, so bound it from above only.
  REQUIRE(out.history.front().sup < std::log(3.0) + 0.05);
  REQUIRE(out.history.front().sup > 0.35);
  REQUIRE(out.history.back().sup < 0.35);
  REQUIRE(out.history.back().sup < 0.5 * out.history.front().sup);
  for (const auto& st : out.history) {
    REQUIRE(std::isfinite(st.total));
    REQUIRE(st.con == 0.0);  // erm never builds weak views
    REQUIRE(st.alpha == 0.0);
  }
}

TEST_CASE("training is a pure function of the config and the root stream") {
  LoadedDataset ds = make_separable(8, 3, 16, 5);
  TrainConfig cfg = tiny_cfg();
  cfg.alpha_fixed = 0.5;  // exercise both loss terms
  MethodFlags fl = method_from_name("gdrnet");

  TrainOutput a = train(cfg, fl, ds, RngStream(77));
  TrainOutput b = train(cfg, fl, ds, RngStream(77));
  REQUIRE(a.net.params() == b.net.params());
  REQUIRE(a.history.size() == b.history.size());
  for (size_t e = 0; e < a.history.size(); ++e) {
    REQUIRE(a.history[e].param_hash == b.history[e].param_hash);
    REQUIRE(a.history[e].total == b.history[e].total);
  }

  TrainOutput c = train(cfg, fl, ds, RngStream(78));
  REQUIRE(a.net.params() != c.net.params());
}

TEST_CASE("alpha follows the linear decay and lr the cosine schedule") {
  LoadedDataset ds = make_separable(8, 3, 16, 5);
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 5;
  TrainOutput out = train(cfg, method_from_name("gdrnet"), ds, RngStream(1));
  for (int e = 0; e < 5; ++e) {
    REQUIRE(out.history[e].alpha == Catch::Approx((4.0 - e) / 4.0).margin(1e-15));
    REQUIRE(out.history[e].lr ==
            Catch::Approx(lr_at(cfg.lr_initial, cfg.lr_final, 5, e)).margin(1e-18));
  }
  REQUIRE(out.history[0].alpha == 1.0);
  REQUIRE(out.history[4].alpha == 0.0);
  REQUIRE(out.history[4].con == 0.0);  // no weak views once alpha hits zero

  cfg.alpha_fixed = 0.3;
  TrainOutput fixed = train(cfg, method_from_name("gdrnet"), ds, RngStream(1));
  for (const auto& st : fixed.history) REQUIRE(st.alpha == 0.3);

  // A single-epoch run has no ramp to decay over.
  cfg.alpha_fixed = -1.0;
  cfg.epochs = 1;
  TrainOutput one = train(cfg, method_from_name("gdrnet"), ds, RngStream(1));
  REQUIRE(one.history[0].alpha == 0.0);
}

TEST_CASE("pure contrastive epochs leave the zero-initialized classifier at zero") {
  LoadedDataset ds = make_separable(8, 3, 16, 9);
  TrainConfig cfg = tiny_cfg();
  cfg.alpha_fixed = 1.0;
  cfg.weight_decay = 0.0;  // decay would shrink even untouched weights
  TrainOutput out = train(cfg, method_from_name("d"), ds, RngStream(21));

  detail::ParamLayout lay(cfg.net());
  const auto& p = out.net.params();
  for (size_t k = lay.cls_w; k < lay.proj1_w; ++k) REQUIRE(p[k] == 0.0);
  // ...while everything upstream of the head did move.
  double trunk_mag = 0.0;
  for (size_t k = lay.trunk_w; k < lay.cls_w; ++k) trunk_mag += std::abs(p[k]);
  REQUIRE(trunk_mag > 0.0);
  REQUIRE(out.history.back().sup > 0.0);  // CE is still reported, just unweighted
}

TEST_CASE("thread count never changes the trained parameters") {
  LoadedDataset ds = make_separable(8, 3, 16, 13);
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 2;
  cfg.alpha_fixed = 0.5;
  MethodFlags fl = method_from_name("gdrnet");

  cfg.threads = 1;
  TrainOutput serial = train(cfg, fl, ds, RngStream(4));
  cfg.threads = 3;
  TrainOutput threaded = train(cfg, fl, ds, RngStream(4));
  REQUIRE(serial.net.params() == threaded.net.params());
  for (size_t e = 0; e < serial.history.size(); ++e)
    REQUIRE(serial.history[e].param_hash == threaded.history[e].param_hash);
}

TEST_CASE("degenerate datasets are rejected") {
  TrainConfig cfg = tiny_cfg();
  LoadedDataset empty;
  REQUIRE_THROWS_AS(train(cfg, MethodFlags{}, empty, RngStream(0)), Error);

  LoadedDataset ds = make_separable(2, 3, 16, 1);
  cfg.batch_size = 16;  // more than 6 items
  REQUIRE_THROWS_WITH(train(cfg, MethodFlags{}, ds, RngStream(0)),
                      Catch::Matchers::ContainsSubstring("batch_size"));

  cfg = tiny_cfg();
  LoadedDataset onecls = make_separable(8, 1, 16, 1);
  REQUIRE_THROWS_AS(train(cfg, MethodFlags{}, onecls, RngStream(0)), Error);

  LoadedDataset bad = make_separable(4, 3, 16, 1);
  bad.labels[0] = 7;  // outside num_classes
  cfg.batch_size = 4;
  REQUIRE_THROWS_AS(train(cfg, MethodFlags{}, bad, RngStream(0)), Error);
}

TEST_CASE("method masks gate the two augmentation families") {
  AugConfig base = AugConfig::defaults();

  AugConfig erm = masked_aug(base, method_from_name("erm"));
  for (int i = 0; i < kNumTransforms; ++i) {
    REQUIRE_FALSE(erm.entries[i].enabled);
    REQUIRE(erm.entries[i].probability == 0.0);
  }

  AugConfig full = masked_aug(base, method_from_name("gdrnet"));
  for (int i = 0; i < kNumTransforms; ++i) {
    REQUIRE(full.entries[i].enabled == base.entries[i].enabled);
    REQUIRE(full.entries[i].probability == base.entries[i].probability);
  }

  AugConfig vis = masked_aug(base, method_from_name("a"));
  AugConfig deg = masked_aug(base, method_from_name("b"));
  for (int i = 0; i < kNumTransforms; ++i) {
    bool visual = is_visual_transform(static_cast<Transform>(i));
    REQUIRE(vis.entries[i].enabled == (visual && base.entries[i].enabled));
    REQUIRE(deg.entries[i].enabled == (!visual && base.entries[i].enabled));
  }
}

TEST_CASE("method names map to flag sets and back") {
  REQUIRE(method_from_name("erm") == MethodFlags{false, false, false, false});
  REQUIRE(method_from_name("GDRNet") == MethodFlags{true, true, true, true});
  REQUIRE(method_from_name("f") == MethodFlags{true, true, true, false});
  REQUIRE(method_name(method_from_name("g")) == "g");
  REQUIRE(method_name(MethodFlags{false, true, true, false}) == "custom");
  REQUIRE_THROWS_AS(method_from_name("h"), std::invalid_argument);
}

TEST_CASE("epoch order is a shuffle, or weighted draws when asked") {
  RngStream rng(9);
  std::vector<int> order = detail::epoch_order(12, rng, nullptr);
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> iota(12);
  std::iota(iota.begin(), iota.end(), 0);
  REQUIRE(sorted == iota);

  RngStream again(9);
  REQUIRE(detail::epoch_order(12, again, nullptr) == order);

  std::vector<double> w = {0.0, 0.0, 1.0, 0.0};
  RngStream wrng(2);
  for (int v : detail::epoch_order(8, wrng, &w)) REQUIRE(v == 2);

  std::vector<double> zero = {0.0, 0.0};
  RngStream zrng(2);
  REQUIRE_THROWS_AS(detail::epoch_order(4, zrng, &zero), Error);

  // Heavily weighted items dominate draws with replacement.
  std::vector<double> skew = {9.0, 1.0};
  RngStream srng(5);
  auto draws = detail::epoch_order(400, srng, &skew);
  int zeros = static_cast<int>(std::count(draws.begin(), draws.end(), 0));
  REQUIRE(zeros > 300);
  REQUIRE(zeros < 400);
}

TEST_CASE("re-balanced and sampled variants still train to finite losses") {
  LoadedDataset ds = make_separable(6, 3, 16, 31);
  // Skew the domain assignment so the table is genuinely non-uniform: east
  // holds every class-0 item, west never sees class 0.
  for (int i = 0; i < ds.size(); ++i) ds.domain_idx[i] = ds.labels[i] == 0 ? 0 : i % 2;
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 2;
  cfg.batch_size = 6;

  TrainOutput plain = train(cfg, method_from_name("erm"), ds, RngStream(8));
  TrainOutput weighted = train(cfg, method_from_name("c"), ds, RngStream(8));
  for (const auto& st : weighted.history) REQUIRE(std::isfinite(st.total));
  // Non-uniform loss weights must steer the updates away from the erm path.
  REQUIRE(weighted.net.params() != plain.net.params());

  cfg.dcr_sampling = true;
  TrainOutput sampled = train(cfg, method_from_name("c"), ds, RngStream(8));
  for (const auto& st : sampled.history) REQUIRE(std::isfinite(st.total));
  REQUIRE(weighted.net.params() != sampled.net.params());

  // dcr_enabled=false turns method c back into plain erm.
  cfg.dcr_sampling = false;
  cfg.dcr_enabled = false;
  TrainOutput off = train(cfg, method_from_name("c"), ds, RngStream(8));
  TrainOutput erm = train(cfg, method_from_name("erm"), ds, RngStream(8));
  REQUIRE(off.net.params() == erm.net.params());
}

TEST_CASE("the full pipeline with every stage disabled collapses to erm") {
  LoadedDataset ds = make_separable(8, 3, 16, 17);
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 3;
  cfg.alpha_fixed = 0.0;   // dahloss contributes nothing
  cfg.dcr_enabled = false; // re-balancing off
  for (auto& e : cfg.aug.entries) e.probability = 0.0;  // no draws fire

  TrainOutput gdr = train(cfg, method_from_name("gdrnet"), ds, RngStream(42));
  TrainOutput erm = train(cfg, method_from_name("erm"), ds, RngStream(42));
  REQUIRE(gdr.net.params() == erm.net.params());
  for (size_t e = 0; e < gdr.history.size(); ++e) {
    REQUIRE(gdr.history[e].param_hash == erm.history[e].param_hash);
    REQUIRE(gdr.history[e].total == erm.history[e].total);
  }
}

TEST_CASE("a fresh net evaluates to exactly uniform probabilities") {
  LoadedDataset ds = make_separable(4, 3, 16, 23);
  TrainConfig cfg = tiny_cfg();
  TinyNet net(cfg.net(), RngStream(2));
  EvalResult res = evaluate(net, ds);
  REQUIRE(res.probs.rows == ds.size());
  REQUIRE(res.probs.cols == 3);
  for (double v : res.probs.a) REQUIRE(v == Catch::Approx(1.0 / 3.0).margin(1e-12));
  // Ties argmax to class 0, so accuracy is the class-0 share.
  REQUIRE(res.acc == Catch::Approx(4.0 / 12.0).margin(1e-12));
  REQUIRE(res.auc == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("evaluation separates the classes after training") {
  LoadedDataset ds = make_separable(16, 3, 16, 29);
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 30;
  cfg.lr_initial = 1e-2;
  cfg.lr_final = 1e-2;
  TrainOutput out = train(cfg, method_from_name("erm"), ds, RngStream(6));
  EvalResult res = evaluate(out.net, ds, 1);
  REQUIRE(res.auc > 0.9);
  REQUIRE(res.acc > 0.7);
  REQUIRE(res.auc_per_class.size() == 3);
  REQUIRE(res.f1_per_class.size() == 3);

  EvalResult threaded = evaluate(out.net, ds, 3);
  REQUIRE(threaded.probs.a == res.probs.a);  // chunked forward is thread-stable
}

TEST_CASE("train config round-trips through the key-value form") {
  TrainConfig cfg = tiny_cfg();
  cfg.method = "f";
  cfg.seed = 321;
  cfg.dcr_mode = QMode::PerDomainConditional;
  cfg.symmetric_ntxent = true;
  cfg.aug.entries[0].probability = 0.25;
  cfg.aug.entries[5].enabled = false;

  KvConfig kv = cfg.to_kv();
  TrainConfig back = TrainConfig::from_kv(kv);
  REQUIRE(back.to_kv().serialize() == kv.serialize());
  REQUIRE(back.method == "f");
  REQUIRE(back.seed == 321);
  REQUIRE(back.dcr_mode == QMode::PerDomainConditional);
  REQUIRE(back.symmetric_ntxent);
  REQUIRE(back.aug.entries[0].probability == 0.25);
  REQUIRE_FALSE(back.aug.entries[5].enabled);

  KvConfig bad = kv;
  bad.set("dcr_betaa", "0.5");
  try {
    TrainConfig::from_kv(bad);
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    REQUIRE(std::string(e.what()).find("dcr_betaa") != std::string::npos);
    REQUIRE(std::string(e.what()).find("dcr_beta") != std::string::npos);  // suggestion
  }

  KvConfig badmode = kv;
  badmode.set("dcr_mode", "sideways");
  REQUIRE_THROWS_AS(TrainConfig::from_kv(badmode), ConfigError);

  TrainConfig inval = tiny_cfg();
  inval.epochs = 0;
  REQUIRE_THROWS_AS(inval.validate(), std::exception);
  inval = tiny_cfg();
  inval.momentum = 1.0;
  REQUIRE_THROWS_AS(inval.validate(), std::exception);
}
