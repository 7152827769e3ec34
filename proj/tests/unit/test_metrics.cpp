#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "metric_oracles.hpp"
#include "mssl/error.hpp"
#include "mssl/metrics.hpp"

using namespace mssl;

using check::auprc_oracle;
using check::auroc_oracle;

TEST(Auroc, PerfectRankingAndTies) {
  EXPECT_EQ(auroc(std::vector<double>{0.9, 0.8, 0.3, 0.1}, std::vector<int>{1, 1, 0, 0}), 1.0);
  EXPECT_EQ(auroc(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}), 0.5);
  EXPECT_EQ(auroc(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 0}), 0.0);
}

TEST(Auroc, SingleClassThrows) {
  EXPECT_THROW((void)auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), MetricError);
  EXPECT_THROW((void)auroc(std::vector<double>{0.1}, std::vector<int>{1, 0}), Error);
}

TEST(Auprc, PerfectRankingAndConstantScores) {
  EXPECT_EQ(auprc(std::vector<double>{0.9, 0.8, 0.3, 0.1}, std::vector<int>{1, 1, 0, 0}), 1.0);
  const std::vector<int> y{1, 0, 0, 1, 0, 0, 0, 1, 0, 0};
  EXPECT_DOUBLE_EQ(auprc(std::vector<double>(10, 0.4), y), 0.3);
  EXPECT_THROW((void)auprc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0}), MetricError);
}

TEST(Metrics, RandomInstancesMatchOracles) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 19);
    std::vector<double> s(n);
    std::vector<int> y(n);
    // Coarse scores force ties.
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 7) / 6.0;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(auroc(s, y), auroc_oracle(s, y), 1e-12);
    EXPECT_NEAR(auprc(s, y), auprc_oracle(s, y), 1e-12);
  }
}

TEST(F1, Cases) {
  EXPECT_EQ(f1(std::vector<int>{1, 0, 1, 0}, std::vector<int>{1, 0, 1, 0}), 1.0);
  EXPECT_EQ(f1(std::vector<int>{0, 0, 0, 0}, std::vector<int>{1, 0, 1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(f1(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 1, 0}), 0.5);
  EXPECT_EQ(f1(std::vector<int>{1, 1}, std::vector<int>{0, 0}), 0.0);
}

TEST(Interval, IdenticalFoldsCollapse) {
  const std::vector<FoldMetrics> folds(5, FoldMetrics{0.8, 0.7, 0.6});
  const auto r = aggregate_folds(folds);
  EXPECT_EQ(r.n_folds, 5);
  EXPECT_DOUBLE_EQ(r.auroc.mean, 0.8);
  EXPECT_DOUBLE_EQ(r.auroc.ci95_low, 0.8);
  EXPECT_DOUBLE_EQ(r.auroc.ci95_high, 0.8);
}

TEST(Interval, MatchesHandComputedStudentT) {
  EXPECT_NEAR(t_quantile_975(4), 2.776, 5e-4);
  const std::vector<double> v{0.80, 0.80, 0.80, 0.74, 0.88};
  const double mean = 0.804;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double half = 2.7764451051977987 * std::sqrt(ss / 4.0) / std::sqrt(5.0);
  const Interval iv = t_interval(v);
  EXPECT_NEAR(iv.mean, mean, 1e-12);
  EXPECT_NEAR(iv.ci95_low, mean - half, 1e-9);
  EXPECT_NEAR(iv.ci95_high, mean + half, 1e-9);
  EXPECT_LT(iv.ci95_low, iv.mean);
  EXPECT_GT(iv.ci95_high, iv.mean);
}

TEST(Interval, ClippedToUnitRangeAndNeedsTwoFolds) {
  const std::vector<FoldMetrics> folds{{1.0, 1.0, 1.0}, {0.6, 0.99, 0.0}};
  const auto r = aggregate_folds(folds);
  EXPECT_LE(r.auroc.ci95_high, 1.0);
  EXPECT_GE(r.f1.ci95_low, 0.0);
  EXPECT_THROW((void)aggregate_folds(std::vector<FoldMetrics>{{0.5, 0.5, 0.5}}), AggregationError);
}
