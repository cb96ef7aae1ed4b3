#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gdrkit/dcr.hpp"
#include "gdrkit/rng.hpp"
#include "support/oracles.hpp"

using namespace gdrkit;

static DomainClassCounts make_counts(const std::vector<std::vector<long long>>& rows) {
  DomainClassCounts cc;
  for (size_t d = 0; d < rows.size(); ++d) cc.domains.push_back("d" + std::to_string(d));
  for (size_t c = 0; c < rows[0].size(); ++c) cc.classes.push_back("c" + std::to_string(c));
  cc.counts = Mat(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (size_t d = 0; d < rows.size(); ++d)
    for (size_t c = 0; c < rows[d].size(); ++c)
      cc.counts(static_cast<int>(d), static_cast<int>(c)) = static_cast<double>(rows[d][c]);
  return cc;
}

TEST_CASE("uniform counts give uniform probabilities") {
  DomainClassCounts cc = make_counts({{25, 25}, {25, 25}});
  Mat q = occurrence_probs(cc);
  for (double v : q.a) REQUIRE(v == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("single domain probabilities divide directly") {
  DomainClassCounts cc = make_counts({{3, 1}});
  Mat q = occurrence_probs(cc);
  REQUIRE(q(0, 0) == Catch::Approx(0.75).margin(1e-15));
  REQUIRE(q(0, 1) == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("probabilities sum to one") {
  RngStream r(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<long long>> rows(2 + trial % 3);
    for (auto& row : rows) {
      row.resize(3 + trial % 2);
      for (auto& v : row) v = static_cast<long long>(r.uniform_int(50));
    }
    rows[0][0] = std::max<long long>(rows[0][0], 1);
    DomainClassCounts cc = make_counts(rows);
    Mat q = occurrence_probs(cc);
    double sum = 0.0;
    for (double v : q.a) sum += v;
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("per-domain conditional probabilities sum to one per row") {
  DomainClassCounts cc = make_counts({{3, 1}, {10, 30}});
  Mat q = occurrence_probs(cc, QMode::PerDomainConditional);
  REQUIRE(q(0, 0) == Catch::Approx(0.75).margin(1e-15));
  REQUIRE(q(1, 0) == Catch::Approx(0.25).margin(1e-15));
  for (int d = 0; d < 2; ++d) {
    double s = q(d, 0) + q(d, 1);
    REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("uniform occurrence makes every weight the pair count") {
  DomainClassCounts cc = make_counts({{10, 10, 10}, {10, 10, 10}});
  for (double beta : {0.0, 0.5, 1.0, 2.0}) {
    Mat w = dcr_weights(cc, beta);
    for (double v : w.a) REQUIRE(v == Catch::Approx(6.0).margin(1e-12));
  }
}

TEST_CASE("beta zero flattens all weights to the pair count") {
  DomainClassCounts cc = make_counts({{100, 1}, {7, 42}});
  Mat w = dcr_weights(cc, 0.0);
  for (double v : w.a) REQUIRE(v == Catch::Approx(4.0).margin(1e-12));
}

TEST_CASE("beta one on a single domain reduces to inverse frequency") {
  DomainClassCounts cc = make_counts({{3, 1}});
  Mat w = dcr_weights(cc, 1.0);
  REQUIRE(w(0, 0) == Catch::Approx(4.0 / 3.0).margin(1e-12));
  REQUIRE(w(0, 1) == Catch::Approx(4.0).margin(1e-12));
}

TEST_CASE("weights match the direct-summation reference") {
  RngStream r(9);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::vector<long long>> rows(2 + trial % 4);
    for (auto& row : rows) {
      row.resize(2 + trial % 3);
      for (auto& v : row) v = static_cast<long long>(r.uniform_int(40));
    }
    rows[0][0] = std::max<long long>(rows[0][0], 1);
    double beta = 0.1 + 0.45 * (trial % 5);
    DomainClassCounts cc = make_counts(rows);
    Mat got = dcr_weights(cc, beta);
    auto want = oracles::dcr_reference(rows, beta);
    for (size_t d = 0; d < rows.size(); ++d)
      for (size_t c = 0; c < rows[d].size(); ++c)
        REQUIRE(got(static_cast<int>(d), static_cast<int>(c)) ==
                Catch::Approx(want[d][c]).margin(1e-12));
  }
}

TEST_CASE("zero-count pairs get weight zero and leave the numerator") {
  DomainClassCounts cc = make_counts({{4, 0}, {4, 8}});
  Mat w = dcr_weights(cc, 0.5);
  REQUIRE(w(0, 1) == 0.0);
  double total = 16.0;
  double num = std::sqrt(4 / total) + std::sqrt(4 / total) + std::sqrt(8 / total);
  REQUIRE(w(0, 0) == Catch::Approx(num / std::sqrt(4 / total)).margin(1e-12));
}

TEST_CASE("smaller occurrence means larger weight") {
  DomainClassCounts cc = make_counts({{100, 45, 30, 15, 10}});
  Mat w = dcr_weights(cc, 0.5);
  for (int c = 1; c < 5; ++c) REQUIRE(w(0, c) > w(0, c - 1));
}

TEST_CASE("table lookup returns the precomputed entries") {
  DomainClassCounts cc = make_counts({{3, 1}});
  DcrTable t = DcrTable::build(cc, 1.0);
  REQUIRE(t.weight(0, 1) == Catch::Approx(4.0).margin(1e-12));
  REQUIRE(t.weight(0, 1) == t.weight(0, 1));
  REQUIRE_THROWS_AS(t.weight(0, 2), std::out_of_range);
  REQUIRE_THROWS_AS(t.weight(1, 0), std::out_of_range);
}

TEST_CASE("table construction validates inputs") {
  DomainClassCounts cc = make_counts({{3, 1}});
  REQUIRE_THROWS_AS(dcr_weights(cc, -0.5), std::invalid_argument);
  cc.counts(0, 0) = -1.0;
  REQUIRE_THROWS_AS(occurrence_probs(cc), std::invalid_argument);
  cc = make_counts({{0, 0}});
  REQUIRE_THROWS_AS(occurrence_probs(cc), std::invalid_argument);
}
