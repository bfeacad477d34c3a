#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bibfusion/significance.hpp"

using namespace bibfusion;

namespace {

PairedScores paired(const std::vector<double>& base, const std::vector<double>& treat) {
  PairedScores p;
  for (std::size_t i = 0; i < base.size(); ++i) p.topics.push_back(std::to_string(100 + i));
  p.baseline = base;
  p.treatment = treat;
  return p;
}

PairedScores random_pair(std::mt19937_64& rng, std::size_t n, double shift) {
  std::normal_distribution<double> noise(0.0, 0.1);
  std::uniform_real_distribution<double> level(0.2, 0.8);
  std::vector<double> b, t;
  for (std::size_t i = 0; i < n; ++i) {
    double x = level(rng);
    b.push_back(x + noise(rng));
    t.push_back(x + shift + noise(rng));
  }
  return paired(b, t);
}

// Straight enumeration of all 2^n sign patterns on the mean statistic.
double brute_force_p(const PairedScores& p) {
  std::size_t n = p.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = p.treatment[i] - p.baseline[i];
  double obs = 0;
  for (double v : d) obs += v;
  obs = std::fabs(obs / static_cast<double>(n));
  std::size_t hits = 0, total = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < total; ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1) ? -d[i] : d[i];
    if (std::fabs(s / static_cast<double>(n)) >= obs - 1e-12) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

TEST(Fisher, IdenticalRunsGiveOne) {
  auto p = paired(std::vector<double>(30, 0.4), std::vector<double>(30, 0.4));
  EXPECT_EQ(fisher_randomization(p, 10000, 1), 1.0);
  auto small = paired({0.1, 0.2, 0.3}, {0.1, 0.2, 0.3});
  EXPECT_EQ(fisher_randomization(small), 1.0);
}

TEST(Fisher, ConstantShift) {
  std::vector<double> b(30), t(30);
  for (std::size_t i = 0; i < 30; ++i) {
    b[i] = 0.01 * static_cast<double>(i);
    t[i] = b[i] + 0.1;
  }
  auto p = paired(b, t);
  EXPECT_LE(fisher_randomization(p, 10000, 3), 0.001);
  EXPECT_NEAR(fisher_randomization_exact(p), 2.0 / std::pow(2.0, 30), 1e-15);
  auto small = paired(std::vector<double>(b.begin(), b.begin() + 12),
                         std::vector<double>(t.begin(), t.begin() + 12));
  EXPECT_DOUBLE_EQ(fisher_randomization(small), 2.0 / 4096.0);
}

TEST(Fisher, ExactMatchesBruteForce) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    auto p = random_pair(rng, 2 + rng() % 13, 0.03);
    EXPECT_NEAR(fisher_randomization_exact(p), brute_force_p(p), 1e-15);
  }
  // discrete metric values tie often
  auto ties = paired({0, 0, 0.5, 1, 0.5, 0}, {0.5, 0.5, 0, 1, 1, 0.5});
  EXPECT_NEAR(fisher_randomization_exact(ties), brute_force_p(ties), 1e-15);
}

TEST(Fisher, MonteCarloWithinThreeStandardErrors) {
  std::mt19937_64 rng(13);
  const std::size_t iters = 10000;
  for (int trial = 0; trial < 30; ++trial) {
    auto p = random_pair(rng, 8 + rng() % 13, 0.02);
    double exact = fisher_randomization_exact(p);
    double mc = fisher_randomization_mc(p, iters, rng());
    double se = std::sqrt(std::max(exact * (1 - exact), 1e-4) / static_cast<double>(iters));
    EXPECT_NEAR(mc, exact, 3 * se + 1.0 / static_cast<double>(iters + 1));
  }
}

TEST(Fisher, PropertiesSymmetryRangeDeterminism) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_pair(rng, 25 + rng() % 20, 0.01);
    auto swapped = paired(p.treatment, p.baseline);
    double a = fisher_randomization(p, 2000, 77);
    EXPECT_EQ(a, fisher_randomization(swapped, 2000, 77));
    EXPECT_EQ(a, fisher_randomization(p, 2000, 77));
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(Fisher, Errors) {
  EXPECT_THROW(fisher_randomization(paired({0.1}, {0.2})), std::invalid_argument);
  std::mt19937_64 rng(1);
  auto p = random_pair(rng, 25, 0.0);
  EXPECT_THROW(fisher_randomization(p, 999, 1), std::invalid_argument);
  EXPECT_THROW(fisher_randomization_exact(random_pair(rng, 31, 0.0)), std::invalid_argument);
}

TEST(StableHash, KnownValues) {
  EXPECT_EQ(stable_hash(""), 14695981039346656037ull);
  EXPECT_EQ(stable_hash("a"), 0xaf63dc4c8601ec8cull);
}

TEST(PairedScoresTest, FromReportsAlignsDefinedTopics) {
  EvalReport b, t;
  b.specs = t.specs = {MetricSpec::ndcg()};
  b.per_topic = {{"1", {0.5}}, {"2", {std::nullopt}}, {"3", {0.2}}, {"4", {0.1}}};
  t.per_topic = {{"1", {0.7}}, {"2", {0.4}}, {"3", {0.1}}};
  auto p = PairedScores::from_reports(b, t, MetricSpec::ndcg());
  EXPECT_EQ(p.topics, (std::vector<TopicId>{"1", "3"}));
  EXPECT_NEAR(p.mean_delta(), 0.05, 1e-15);
  EXPECT_THROW(PairedScores::from_reports(b, t, MetricSpec::ap()), std::invalid_argument);
}

TEST(Summary, HandComputation) {
  std::vector<SystemOutcome> o = {
      {"s1", 0.10, 0.01}, {"s2", -0.05, 0.20}, {"s3", 0.02, 0.04}};
  auto s = summarize_outcomes(o, 0.05);
  EXPECT_EQ(s.n_systems, 3u);
  EXPECT_EQ(s.n_improved, 2u);
  EXPECT_EQ(s.n_degraded, 1u);
  EXPECT_EQ(s.n_significant, 2u);
  EXPECT_EQ(s.n_significant_improved, 2u);
  EXPECT_NEAR(s.avg_improvement_significant, 0.06, 1e-15);
  EXPECT_NEAR(s.overall_change, 0.07 / 3, 1e-15);
  EXPECT_LE(s.n_significant, s.n_improved + s.n_degraded);
}

TEST(Summary, ZeroDeltas) {
  std::vector<SystemComparison> systems;
  for (int i = 0; i < 4; ++i) {
    systems.push_back({"sys" + std::to_string(i),
                       paired(std::vector<double>(25, 0.3), std::vector<double>(25, 0.3))});
  }
  auto s = summarize_improvements(systems, 0.05, 1000, 5);
  EXPECT_EQ(s.n_improved, 0u);
  EXPECT_EQ(s.n_significant, 0u);
  EXPECT_EQ(s.overall_change, 0.0);
}

TEST(Summary, SystemOrderIrrelevant) {
  std::mt19937_64 rng(15);
  std::vector<SystemComparison> systems;
  for (int i = 0; i < 8; ++i) {
    systems.push_back({"run" + std::to_string(i), random_pair(rng, 30, 0.02 * (i % 3))});
  }
  std::vector<SystemOutcome> o1, o2;
  auto a = summarize_improvements(systems, 0.05, 2000, 9, &o1);
  std::reverse(systems.begin(), systems.end());
  auto b = summarize_improvements(systems, 0.05, 2000, 9, &o2);
  EXPECT_EQ(a.n_significant, b.n_significant);
  EXPECT_EQ(a.overall_change, b.overall_change);
  EXPECT_EQ(a.avg_improvement_significant, b.avg_improvement_significant);
  ASSERT_EQ(o1.size(), o2.size());
  for (std::size_t i = 0; i < o1.size(); ++i) EXPECT_EQ(o1[i].p_value, o2[i].p_value);
}
