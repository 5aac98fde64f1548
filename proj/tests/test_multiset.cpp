#include "ssmkit/multiset.hpp"

#include <gtest/gtest.h>

#include <set>

#include "ssmkit/errors.hpp"

using namespace ssmkit;

TEST(Multiset, CountMatchesKnownValues) {
  EXPECT_EQ(multiset_count(4, 2), 10);
  EXPECT_EQ(multiset_count(1, 7), 1);
}

TEST(Multiset, CountMatchesBruteForceEnumeration) {
  // d=6, i=4: enumerate all exponent tuples directly
  int d = 6, i = 4;
  std::set<Key> all;
  Key k(static_cast<std::size_t>(d), 0);
  auto rec = [&](auto&& self, int var, int remaining) -> void {
    if (var == d - 1) {
      k[static_cast<std::size_t>(var)] = remaining;
      all.insert(k);
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      k[static_cast<std::size_t>(var)] = e;
      self(self, var + 1, remaining - e);
    }
  };
  rec(rec, 0, i);
  EXPECT_EQ(static_cast<std::int64_t>(all.size()), 126);
  EXPECT_EQ(multiset_count(d, i), 126);
  EXPECT_EQ(multiset_keys(d, i).size(), all.size());
}

TEST(Multiset, KeysDescendingLexAndComplete) {
  auto keys = multiset_keys(2, 2);
  ASSERT_EQ(keys.size(), 3u);
  EXPECT_EQ(keys[0], (Key{2, 0}));
  EXPECT_EQ(keys[1], (Key{1, 1}));
  EXPECT_EQ(keys[2], (Key{0, 2}));
  for (std::size_t j = 1; j < keys.size(); ++j) EXPECT_TRUE(key_before(keys[j - 1], keys[j]));

  auto k4 = multiset_keys(3, 4);
  EXPECT_EQ(static_cast<std::int64_t>(k4.size()), multiset_count(3, 4));
  for (const auto& k : k4) EXPECT_EQ(key_degree(k), 4);
  for (std::size_t j = 1; j < k4.size(); ++j) EXPECT_TRUE(key_before(k4[j - 1], k4[j]));
}

TEST(Multiset, CompositionCount) {
  EXPECT_EQ(composition_count(3, 5), 6);
  EXPECT_EQ(composition_count(1, 9), 1);
  EXPECT_EQ(composition_count(4, 4), 1);
  // enumerate compositions of 5 into 3 positive parts
  int found = 0;
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b)
      for (int c = 1; c <= 3; ++c)
        if (a + b + c == 5) ++found;
  EXPECT_EQ(found, 6);
}

TEST(Multiset, OverflowReported) {
  EXPECT_THROW(multiset_count(64, 64), OverflowError);
  EXPECT_NO_THROW(multiset_count(4, 25));
}

TEST(Multiset, BinomialEdges) {
  EXPECT_EQ(binomial(5, 0), 1);
  EXPECT_EQ(binomial(5, 5), 1);
  EXPECT_EQ(binomial(5, 6), 0);
  EXPECT_EQ(binomial(16, 14), 120);
}
