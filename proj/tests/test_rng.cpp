#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <vector>

#include "steprl/rng.hpp"

using namespace steprl;

TEST_CASE("streams are deterministic and purpose-separated") {
  auto a = Rng::stream(42, "alpha", 1, 2);
  auto b = Rng::stream(42, "alpha", 1, 2);
  auto c = Rng::stream(42, "beta", 1, 2);
  std::uint64_t first_a = 0, first_c = 0;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    if (i == 0) first_a = va;
    CHECK(va == b.next_u64());
  }
  first_c = c.next_u64();
  CHECK(first_a != first_c);
}

TEST_CASE("next_double lies in [0,1) and looks uniform") {
  auto rng = Rng::stream(7, "uniform");
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double x = rng.next_double();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    sum += x;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("next_below stays in range and hits every bucket") {
  auto rng = Rng::stream(9, "below");
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.next_below(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("sample_index follows the weight vector") {
  auto rng = Rng::stream(11, "weights");
  const std::vector<double> w = {0.5, 0.0, 0.5};
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 20000; ++i) ++counts[rng.sample_index(w)];
  CHECK(counts[1] == 0);
  CHECK(static_cast<double>(counts[0]) / 20000 ==
        doctest::Approx(0.5).epsilon(0.05));
}
