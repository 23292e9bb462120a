#include <gtest/gtest.h>

#include <cmath>

#include "mzbias/parallel.hpp"
#include "mzbias/random.hpp"
#include "mzbias/stats.hpp"

using namespace mzbias;

TEST(Ranks, AverageTies) {
  EXPECT_EQ(ranks({3.0, 1.0, 2.0}), (std::vector<double>{3, 1, 2}));
  EXPECT_EQ(ranks({5.0, 1.0, 5.0, 0.0}), (std::vector<double>{3.5, 2, 3.5, 1}));
}

TEST(Correlation, PearsonByHand) {
  // x = 1..4, y = (2, 1, 4, 3): cov 1.0, var 1.25 each.
  EXPECT_NEAR(pearson({1, 2, 3, 4}, {2, 1, 4, 3}), 0.6, 1e-15);
  EXPECT_NEAR(pearson({1, 2, 3}, {-2, -4, -6}), -1.0, 1e-15);
}

TEST(Correlation, SpearmanIsRankInvariant) {
  const std::vector<double> x{0.1, 5.0, 2.0, 3.3, -1.0};
  std::vector<double> y;
  for (double v : x) y.push_back(std::exp(v));
  EXPECT_NEAR(spearman(x, y), 1.0, 1e-15);
  EXPECT_NEAR(spearman({1, 2, 3, 4, 5}, {5, 6, 7, 8, 7}), 0.820782681668123, 1e-12);
}

TEST(Correlation, Validation) {
  EXPECT_THROW(pearson({1, 2}, {1}), std::invalid_argument);
  EXPECT_EQ(pearson({1, 1, 1}, {1, 2, 3}), 0.0);
}

TEST(Summary, MeanAndStd) {
  EXPECT_DOUBLE_EQ(mean({1, 2, 3, 6}), 3.0);
  EXPECT_DOUBLE_EQ(sample_std({2, 4, 4, 4, 5, 5, 7, 9}), std::sqrt(32.0 / 7));
}

TEST(Flatten, ColumnMajor) {
  Eigen::Matrix2i a;
  a << 1, 2, 3, 4;
  EXPECT_EQ(flatten(a), (std::vector<double>{1, 3, 2, 4}));
}

TEST(Seeds, DistinctAndStable) {
  EXPECT_EQ(derive_seed({1, 2, 3}), derive_seed({1, 2, 3}));
  EXPECT_NE(derive_seed({1, 2, 3}), derive_seed({1, 3, 2}));
  EXPECT_NE(derive_seed({1, 2}), derive_seed({1, 2, 0}));
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (int workers : {1, 2, 5}) {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), workers, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}

TEST(ParallelFor, RethrowsLowestFailure) {
  try {
    parallel_for(50, 4, [](std::size_t i) {
      if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "7");
  }
}
