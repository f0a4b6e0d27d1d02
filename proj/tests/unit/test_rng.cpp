#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "mist/rng.hpp"

namespace mist {
namespace {

TEST(Rng, SameSeedSameSequence) {
  Rng a(11), b(11);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, NamedStreamsDiffer) {
  Rng a = Rng::stream(42, "train.permutation");
  Rng b = Rng::stream(42, "train.data_order");
  Rng c = Rng::stream(43, "train.permutation");
  const auto x = a.next();
  EXPECT_NE(x, b.next());
  EXPECT_NE(x, c.next());
  EXPECT_EQ(x, Rng::stream(42, "train.permutation").next());
}

TEST(Rng, IndexUsesOneDrawAndStaysInRange) {
  Rng a(5), b(5);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_LT(a.index(7), 7u);
    b.next();
  }
  EXPECT_EQ(a, b);
}

TEST(Rng, IndexIsRoughlyUniform) {
  Rng r(9);
  std::vector<int> counts(5);
  const int n = 50000;
  for (int i = 0; i < n; ++i) ++counts[r.index(5)];
  // binomial sd = sqrt(n p (1-p)) ~ 89; 5 sd band
  for (int c : counts) EXPECT_NEAR(c, n / 5, 450);
}

TEST(Rng, NormalMoments) {
  Rng r(1);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal(1.0, 2.0);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 1.0, 5 * 2.0 / std::sqrt(n));
  EXPECT_NEAR(var, 4.0, 0.1);
}

TEST(Rng, PermutationIsBijection) {
  Rng r(2);
  for (std::size_t n : {1u, 2u, 10u, 33u}) {
    auto p = r.permutation(n);
    std::vector<std::size_t> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(sorted[i], i);
  }
}

TEST(Rng, StateRoundTrip) {
  Rng a(77);
  for (int i = 0; i < 10; ++i) a.next();
  Rng b(0);
  b.set_state(a.state());
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, Splitmix64KnownValue) {
  // reference value of splitmix64 applied to 0 (first output of the canonical generator seeded with 0)
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Rng, HashNameIsFnv1a) {
  EXPECT_EQ(hash_name(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hash_name("a"), 0xaf63dc4c8601ec8cULL);
}

}  // namespace
}  // namespace mist
