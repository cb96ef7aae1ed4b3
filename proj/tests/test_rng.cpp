#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "gdrkit/rng.hpp"

using gdrkit::RngStream;

TEST_CASE("same seed gives identical sequences") {
  RngStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different sequences") {
  RngStream a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  REQUIRE(same == 0);
}

TEST_CASE("uniform stays in [0,1) and covers the range") {
  RngStream r(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  REQUIRE(lo < 0.01);
  REQUIRE(hi > 0.99);
}

TEST_CASE("uniform(lo,hi) respects bounds") {
  RngStream r(9);
  for (int i = 0; i < 1000; ++i) {
    double u = r.uniform(-0.3, 0.3);
    REQUIRE(u >= -0.3);
    REQUIRE(u < 0.3);
  }
}

TEST_CASE("uniform_int covers all residues") {
  RngStream r(11);
  std::set<int> seen;
  for (int i = 0; i < 1000; ++i) {
    int v = r.uniform_int(5);
    REQUIRE(v >= 0);
    REQUIRE(v < 5);
    seen.insert(v);
  }
  REQUIRE(seen.size() == 5);
}

TEST_CASE("bernoulli matches its probability roughly") {
  RngStream r(13);
  int hits = 0;
  for (int i = 0; i < 20000; ++i)
    if (r.bernoulli(0.5)) ++hits;
  REQUIRE(std::fabs(hits / 20000.0 - 0.5) < 0.02);
  RngStream z(13);
  for (int i = 0; i < 100; ++i) REQUIRE_FALSE(z.bernoulli(0.0));
}

TEST_CASE("normal has sane moments") {
  RngStream r(17);
  double sum = 0.0, sq = 0.0;
  int n = 40000;
  for (int i = 0; i < n; ++i) {
    double v = r.normal();
    sum += v;
    sq += v * v;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  REQUIRE(std::fabs(mean) < 0.03);
  REQUIRE(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("derived streams are independent of parent consumption") {
  RngStream a(99);
  RngStream d1 = a.derive({1, 2});
  a.next_u64();
  a.next_u64();
  RngStream b(99);
  RngStream d2 = b.derive({1, 2});
  for (int i = 0; i < 100; ++i) REQUIRE(d1.next_u64() == d2.next_u64());
}

TEST_CASE("derived streams with different ids differ") {
  RngStream a(99);
  RngStream d1 = a.derive({1, 2});
  RngStream d2 = a.derive({1, 3});
  RngStream d3 = a.derive({2, 2});
  int same12 = 0, same13 = 0;
  for (int i = 0; i < 64; ++i) {
    uint64_t x = d1.next_u64();
    if (x == d2.next_u64()) ++same12;
    if (x == d3.next_u64()) ++same13;
  }
  REQUIRE(same12 == 0);
  REQUIRE(same13 == 0);
}

TEST_CASE("labeled derivation separates purposes") {
  RngStream a(5);
  RngStream s1 = a.derive("strong", {0});
  RngStream s2 = a.derive("weak", {0});
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (s1.next_u64() == s2.next_u64()) ++same;
  REQUIRE(same == 0);
}
