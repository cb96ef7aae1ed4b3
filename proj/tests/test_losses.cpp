#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gdrkit/losses.hpp"
#include "gdrkit/rng.hpp"
#include "support/oracles.hpp"

using namespace gdrkit;

static Mat random_unit_rows(int n, int d, uint64_t seed) {
  RngStream r(seed);
  Mat m(n, d);
  for (int i = 0; i < n; ++i) {
    double norm = 0.0;
    for (int c = 0; c < d; ++c) {
      m(i, c) = r.normal();
      norm += m(i, c) * m(i, c);
    }
    norm = std::sqrt(norm);
    for (int c = 0; c < d; ++c) m(i, c) /= norm;
  }
  return m;
}

// --- cross-entropy -----------------------------------------------------------

TEST_CASE("uniform logits over 5 classes give ln 5") {
  LogitsBatch b;
  b.logits = Mat(3, 5);
  b.labels = {0, 2, 4};
  CeResult r = cross_entropy(b);
  REQUIRE(r.loss == Catch::Approx(std::log(5.0)).margin(1e-12));
}

TEST_CASE("confident logits give near-zero loss") {
  LogitsBatch b;
  b.logits = Mat(2, 4);
  b.labels = {1, 3};
  b.logits(0, 1) = 30.0;
  b.logits(1, 3) = 30.0;
  CeResult r = cross_entropy(b);
  REQUIRE(r.loss < 1e-9);
}

TEST_CASE("cross-entropy gradient matches finite differences") {
  RngStream rng(101);
  int n = 6, k = 5;
  LogitsBatch b;
  b.logits = Mat(n, k);
  for (double& v : b.logits.a) v = rng.normal();
  for (int i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(rng.uniform_int(k)));
  b.weights = {1.0, 0.5, 2.0, 1.0, 0.1, 3.0};

  CeResult got = cross_entropy(b);
  auto f = [&](const std::vector<double>& x) {
    LogitsBatch bb = b;
    bb.logits.a = x;
    return cross_entropy(bb).loss;
  };
  auto fd = oracles::fd_gradient(f, b.logits.a, 1e-5);
  REQUIRE(oracles::max_rel_err(got.grad.a, fd) < 1e-6);
}

TEST_CASE("weighting normalizes by the batch weight sum") {
  LogitsBatch b;
  b.logits = Mat(2, 3);
  b.logits(0, 0) = 1.0;
  b.logits(1, 2) = 2.0;
  b.labels = {0, 1};
  CeResult unweighted = cross_entropy(b);
  b.weights = {3.0, 3.0};
  CeResult scaled = cross_entropy(b);
  REQUIRE(scaled.loss == Catch::Approx(unweighted.loss).margin(1e-12));
}

TEST_CASE("cross-entropy rejects malformed batches") {
  LogitsBatch b;
  b.logits = Mat(2, 3);
  b.labels = {0, 5};
  REQUIRE_THROWS_AS(cross_entropy(b), std::invalid_argument);
  b.labels = {0};
  REQUIRE_THROWS_AS(cross_entropy(b), std::invalid_argument);
  b.labels = {0, 1};
  b.weights = {1.0, -0.5};
  REQUIRE_THROWS_AS(cross_entropy(b), std::invalid_argument);
  b.weights = {0.0, 0.0};
  REQUIRE_THROWS_AS(cross_entropy(b), std::invalid_argument);
}

// --- instance discrimination ---------------------------------------------------

TEST_CASE("single pair gives exactly zero loss") {
  EmbeddingBatch b;
  b.strong = random_unit_rows(1, 8, 7);
  b.weak = b.strong;
  NtxentResult r = ntxent(b, 0.1);
  REQUIRE(r.loss == 0.0);
}

TEST_CASE("two identical pairs give log 3") {
  Mat row = random_unit_rows(1, 16, 9);
  EmbeddingBatch b;
  b.strong = Mat(2, 16);
  b.weak = Mat(2, 16);
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 16; ++c) {
      b.strong(i, c) = row(0, c);
      b.weak(i, c) = row(0, c);
    }
  NtxentResult r = ntxent(b, 0.1);
  REQUIRE(r.loss == Catch::Approx(std::log(3.0)).margin(1e-12));
}

TEST_CASE("loss is nonnegative for two or more pairs") {
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    EmbeddingBatch b;
    b.strong = random_unit_rows(4, 8, seed);
    b.weak = random_unit_rows(4, 8, seed + 100);
    REQUIRE(ntxent(b, 0.1).loss >= 0.0);
  }
}

TEST_CASE("ntxent gradient matches finite differences") {
  EmbeddingBatch b;
  b.strong = random_unit_rows(8, 16, 11);
  b.weak = random_unit_rows(8, 16, 12);
  double tau = 0.1;
  NtxentResult got = ntxent(b, tau);

  int n = 8, d = 16;
  std::vector<double> x;
  x.insert(x.end(), b.strong.a.begin(), b.strong.a.end());
  x.insert(x.end(), b.weak.a.begin(), b.weak.a.end());
  auto f = [&](const std::vector<double>& v) {
    EmbeddingBatch bb;
    bb.strong = Mat(n, d);
    bb.weak = Mat(n, d);
    std::copy(v.begin(), v.begin() + n * d, bb.strong.a.begin());
    std::copy(v.begin() + n * d, v.end(), bb.weak.a.begin());
    return ntxent(bb, tau).loss;
  };
  auto fd = oracles::fd_gradient(f, x, 1e-6);
  std::vector<double> analytic;
  analytic.insert(analytic.end(), got.grad_strong.a.begin(), got.grad_strong.a.end());
  analytic.insert(analytic.end(), got.grad_weak.a.begin(), got.grad_weak.a.end());
  REQUIRE(oracles::max_rel_err(analytic, fd) < 1e-5);
}

TEST_CASE("symmetric ntxent gradient matches finite differences") {
  EmbeddingBatch b;
  b.strong = random_unit_rows(5, 8, 13);
  b.weak = random_unit_rows(5, 8, 14);
  NtxentOptions opt;
  opt.symmetric = true;
  NtxentResult got = ntxent(b, 0.2, opt);

  int n = 5, d = 8;
  std::vector<double> x;
  x.insert(x.end(), b.strong.a.begin(), b.strong.a.end());
  x.insert(x.end(), b.weak.a.begin(), b.weak.a.end());
  auto f = [&](const std::vector<double>& v) {
    EmbeddingBatch bb;
    bb.strong = Mat(n, d);
    bb.weak = Mat(n, d);
    std::copy(v.begin(), v.begin() + n * d, bb.strong.a.begin());
    std::copy(v.begin() + n * d, v.end(), bb.weak.a.begin());
    return ntxent(bb, 0.2, opt).loss;
  };
  auto fd = oracles::fd_gradient(f, x, 1e-6);
  std::vector<double> analytic;
  analytic.insert(analytic.end(), got.grad_strong.a.begin(), got.grad_strong.a.end());
  analytic.insert(analytic.end(), got.grad_weak.a.begin(), got.grad_weak.a.end());
  REQUIRE(oracles::max_rel_err(analytic, fd) < 1e-5);
}

TEST_CASE("pair weights take a weighted mean of per-anchor terms") {
  EmbeddingBatch b;
  b.strong = random_unit_rows(2, 8, 15);
  b.weak = random_unit_rows(2, 8, 16);
  NtxentOptions w0, w1, mix;
  w0.pair_weights = {1.0, 0.0};
  w1.pair_weights = {0.0, 1.0};
  mix.pair_weights = {2.0, 3.0};
  double l0 = ntxent(b, 0.1, w0).loss;
  double l1 = ntxent(b, 0.1, w1).loss;
  double lm = ntxent(b, 0.1, mix).loss;
  REQUIRE(lm == Catch::Approx((2.0 * l0 + 3.0 * l1) / 5.0).margin(1e-12));
}

TEST_CASE("ntxent rejects non-unit rows and bad tau") {
  EmbeddingBatch b;
  b.strong = Mat(2, 4);
  b.weak = Mat(2, 4);
  REQUIRE_THROWS_AS(ntxent(b, 0.1), std::invalid_argument);
  b.strong = random_unit_rows(2, 4, 17);
  b.weak = random_unit_rows(2, 4, 18);
  REQUIRE_THROWS_AS(ntxent(b, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(ntxent(b, -1.0), std::invalid_argument);
}

// --- schedule and combination ----------------------------------------------------

TEST_CASE("alpha decays linearly from 1 to 0") {
  AlphaSchedule s{100};
  REQUIRE(alpha_at(s, 0) == 1.0);
  REQUIRE(alpha_at(s, 99) == 0.0);
  REQUIRE(alpha_at(s, 49) == Catch::Approx(50.0 / 99.0).margin(1e-12));
}

TEST_CASE("alpha handles the single-epoch schedule") {
  AlphaSchedule s{1};
  REQUIRE(alpha_at(s, 0) == 0.0);
  REQUIRE_THROWS_AS(alpha_at(s, 1), std::invalid_argument);
}

TEST_CASE("combine honors the boundary alphas") {
  CeResult sup;
  sup.loss = 2.0;
  sup.grad = Mat(2, 3);
  sup.grad(0, 0) = 1.0;
  NtxentResult scon;
  scon.loss = 4.0;
  scon.grad_strong = Mat(2, 5);
  scon.grad_weak = Mat(2, 5);
  scon.grad_strong(0, 0) = 2.0;

  DahResult at0 = dahloss_combine(sup, scon, 0.0);
  REQUIRE(at0.loss == 2.0);
  REQUIRE(at0.grad_strong(0, 0) == 0.0);
  REQUIRE(at0.grad_logits(0, 0) == 1.0);

  DahResult at1 = dahloss_combine(sup, scon, 1.0);
  REQUIRE(at1.loss == 4.0);
  REQUIRE(at1.grad_logits(0, 0) == 0.0);
  REQUIRE(at1.grad_strong(0, 0) == 2.0);

  DahResult mid = dahloss_combine(sup, scon, 0.5);
  REQUIRE(mid.loss == Catch::Approx(3.0).margin(1e-12));
}
