#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "gdrkit/image_io.hpp"
#include "gdrkit/synth.hpp"

using namespace gdrkit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

std::vector<SynthDomainSpec> tiny_specs() {
  std::vector<SynthDomainSpec> specs(2);
  specs[0].name = "alpha";
  specs[0].cast = {0.08, 0.0, -0.02};
  specs[0].class_counts = {2, 1, 1, 1, 1};
  specs[1].name = "beta";
  specs[1].cast = {-0.08, 0.02, 0.05};
  specs[1].illumination = 0.9;
  specs[1].saturation = 0.8;
  specs[1].class_counts = {1, 1, 1, 1, 2};
  specs[1].blur_rate = 0.8;
  return specs;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(name) { fs::remove_all(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("generation is a pure function of specs and seed") {
  TempDir d1("synth_det_a"), d2("synth_det_b");
  Manifest m1 = synth_generate(tiny_specs(), 32, 99, d1.path.string());
  Manifest m2 = synth_generate(tiny_specs(), 32, 99, d2.path.string());

  REQUIRE(m1.records.size() == m2.records.size());
  REQUIRE(m1.records.size() == 12);
  for (size_t i = 0; i < m1.records.size(); ++i) {
    REQUIRE(m1.records[i].path == m2.records[i].path);
    REQUIRE(m1.records[i].grade == m2.records[i].grade);
    REQUIRE(m1.records[i].domain == m2.records[i].domain);
    REQUIRE(slurp(m1.resolve(m1.records[i])) == slurp(m2.resolve(m2.records[i])));
  }
  REQUIRE(slurp((d1.path / "manifest.csv").string()) ==
          slurp((d2.path / "manifest.csv").string()));

  Manifest m3 = synth_generate(tiny_specs(), 32, 100, d2.path.string());
  bool any_differs = false;
  for (size_t i = 0; i < m1.records.size() && !any_differs; ++i)
    any_differs = slurp(m1.resolve(m1.records[i])) != slurp(m3.resolve(m3.records[i]));
  REQUIRE(any_differs);
}

TEST_CASE("lesion pixels grow with grade") {
  SynthDomainSpec spec = tiny_specs()[0];
  spec.lesion_density = 1.2;
  long long px_g0 = 0, px_g4 = 0;
  for (int trial = 0; trial < 5; ++trial) {
    RngStream r0(500 + trial), r4(900 + trial);
    RenderResult a = render_synth_image(spec, 0, 48, r0);
    RenderResult b = render_synth_image(spec, 4, 48, r4);
    for (auto v : a.lesion_mask) px_g0 += v;
    for (auto v : b.lesion_mask) px_g4 += v;
  }
  REQUIRE(px_g0 == 0);  // grade 0 has no lesions at all
  REQUIRE(px_g4 > 0);

  long long px_g1 = 0;
  for (int trial = 0; trial < 5; ++trial) {
    RngStream r1(1300 + trial);
    RenderResult c = render_synth_image(spec, 1, 48, r1);
    for (auto v : c.lesion_mask) px_g1 += v;
  }
  REQUIRE(px_g4 > px_g1);
}

TEST_CASE("manifest class counts equal the spec counts exactly") {
  TempDir d("synth_counts");
  auto specs = tiny_specs();
  Manifest m = synth_generate(specs, 32, 7, d.path.string());
  std::map<std::string, std::array<int, kNumGrades>> hist;
  for (const auto& rec : m.records) ++hist[rec.domain][rec.grade];
  for (const auto& spec : specs)
    for (int g = 0; g < kNumGrades; ++g) REQUIRE(hist[spec.name][g] == spec.class_counts[g]);
}

TEST_CASE("spec validation rejects degenerate class spreads") {
  SynthDomainSpec s;
  s.name = "solo";
  s.class_counts = {5, 0, 0, 0, 0};  // a single nonzero class
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
  s.class_counts = {5, 0, 0, 0, -1};
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
  s.class_counts = {5, 3, 0, 0, 0};
  s.halo_rate = 1.5;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("spec files round-trip through the flat key format") {
  auto specs = tiny_specs();
  KvConfig kv = synth_specs_to_kv(specs, 32);
  auto back = parse_synth_specs(kv);
  REQUIRE(back.size() == specs.size());
  for (size_t i = 0; i < specs.size(); ++i) {
    REQUIRE(back[i].name == specs[i].name);
    REQUIRE(back[i].cast == specs[i].cast);
    REQUIRE(back[i].illumination == specs[i].illumination);
    REQUIRE(back[i].saturation == specs[i].saturation);
    REQUIRE(back[i].class_counts == specs[i].class_counts);
    REQUIRE(back[i].blur_rate == specs[i].blur_rate);
  }

  KvConfig bad = kv;
  bad.set("alpha.cst_r", "0.5");
  REQUIRE_THROWS_AS(parse_synth_specs(bad), ConfigError);

  KvConfig nodomains;
  nodomains.set("image_size", "32");
  REQUIRE_THROWS_AS(parse_synth_specs(nodomains), ConfigError);
}

TEST_CASE("gray constant image yields mean one half and zero spread") {
  TempDir d("synth_stats_gray");
  fs::create_directories(d.path);
  ImageRgb gray = ImageRgb::constant(24, 24, 0.5, 0.5, 0.5);
  // Quantization to 8 bits: 0.5 lands on byte 128, which reads back as
  // 128/255, not exactly 0.5. Use a value that is exact in 8 bits.
  ImageRgb exact = ImageRgb::constant(24, 24, 102.0 / 255.0, 102.0 / 255.0, 102.0 / 255.0);
  save_image(exact, (d.path / "gray.png").string());
  Manifest m;
  m.dir = d.path.string();
  m.records = {{"gray.png", 0, "graysite"}, {"gray.png", 1, "graysite"}};
  (void)gray;

  auto stats = domain_stats(m);
  REQUIRE(stats.size() == 1);
  REQUIRE(stats[0].n_images == 2);
  for (int c = 0; c < 3; ++c) {
    REQUIRE(stats[0].mean[c] == Catch::Approx(102.0 / 255.0).margin(1e-12));
    // One-pass variance leaves ~1e-8 of cancellation noise; pixel quanta
    // are 4e-3, so anything below 1e-7 is a true zero spread.
    REQUIRE(stats[0].stddev[c] == Catch::Approx(0.0).margin(1e-7));
  }
  REQUIRE(stats[0].class_hist[0] == 1);
  REQUIRE(stats[0].class_hist[1] == 1);
}

TEST_CASE("histograms sum to the domain sample counts and casts show up in the means") {
  TempDir d("synth_stats_cast");
  auto specs = tiny_specs();
  Manifest m = synth_generate(specs, 32, 21, d.path.string());
  auto stats = domain_stats(m);
  REQUIRE(stats.size() == 2);

  std::map<std::string, int> totals;
  for (const auto& rec : m.records) ++totals[rec.domain];
  for (const auto& st : stats) {
    long long sum = 0;
    for (long long h : st.class_hist) sum += h;
    REQUIRE(sum == totals[st.domain]);
    REQUIRE(sum == st.n_images);
  }

  // alpha has the redder cast (+0.08 R vs -0.08 R), beta the bluer one.
  const DomainStats& alpha = stats[0].domain == "alpha" ? stats[0] : stats[1];
  const DomainStats& beta = stats[0].domain == "alpha" ? stats[1] : stats[0];
  REQUIRE(alpha.mean[0] > beta.mean[0]);
  REQUIRE(beta.mean[2] > alpha.mean[2]);
}

TEST_CASE("stats name unreadable images") {
  Manifest m;
  m.dir = ".";
  m.records = {{"definitely_missing_image.png", 0, "x"}};
  try {
    domain_stats(m);
    FAIL("expected an error");
  } catch (const Error& e) {
    REQUIRE(std::string(e.what()).find("definitely_missing_image.png") != std::string::npos);
  }
}
