#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "cobras/rng.hpp"

using namespace cobras;

TEST_CASE("same seed replays bit-for-bit") {
  Rng a(12345), b(12345);
  for (int i = 0; i < 1000; ++i) CHECK(a() == b());
}

TEST_CASE("split streams are independent of draw position") {
  Rng a(99);
  (void)a();
  (void)a.uniform();
  Rng b(99);
  CHECK(a.split(7)() == b.split(7)());
  CHECK(a.split(7)() != b.split(8)());
}

TEST_CASE("uniform_int stays in range and hits all values") {
  Rng rng(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.uniform_int(6);
    CHECK(v < 6);
    seen.insert(v);
  }
  CHECK(seen.size() == 6);
}

TEST_CASE("uniform_range is inclusive") {
  Rng rng(42);
  bool lo = false, hi = false;
  for (int i = 0; i < 2000; ++i) {
    const long v = rng.uniform_range(-2, 2);
    CHECK(v >= -2);
    CHECK(v <= 2);
    lo = lo || (v == -2);
    hi = hi || (v == 2);
  }
  CHECK(lo);
  CHECK(hi);
}

TEST_CASE("normal has roughly standard moments") {
  Rng rng(2024);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("uniform lies in [0,1)") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
