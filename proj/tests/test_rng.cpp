#include <gtest/gtest.h>

#include <set>

#include "mmb/rng.hpp"

using namespace mmb;

TEST(Rng, SeedIsPureFunctionOfInputs) {
  EXPECT_EQ(derive_seed(7, "doa", 3), derive_seed(7, "doa", 3));
  EXPECT_NE(derive_seed(7, "doa", 3), derive_seed(7, "doa", 4));
  EXPECT_NE(derive_seed(7, "doa", 3), derive_seed(8, "doa", 3));
  EXPECT_NE(derive_seed(7, "doa", 3), derive_seed(7, "toa", 3));
}

TEST(Rng, EnginesFromEqualSeedsAgree) {
  auto a = make_engine(11, "x", 5);
  auto b = make_engine(11, "x", 5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, NoCollisionsOverManyIndices) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100000; ++i) seen.insert(derive_seed(1, "trial", i));
  EXPECT_EQ(seen.size(), 100000u);
}

TEST(Rng, Mix64KnownValue) {
  // first output of the reference splitmix64 generator seeded with 0
  EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafULL);
}
