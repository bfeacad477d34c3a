#pragma once

/// \file significance.hpp
/// Paired randomization (sign-flip) test and per-method improvement summaries.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bibfusion/metrics.hpp"

namespace bibfusion {

/// Per-topic values of one metric for two systems, aligned by topic.
struct PairedScores {
  std::vector<TopicId> topics;
  std::vector<double> baseline;
  std::vector<double> treatment;

  /// Topics where both reports define the metric, in ascending topic order.
  static PairedScores from_reports(const EvalReport& baseline, const EvalReport& treatment,
                                   const MetricSpec& spec);

  std::size_t size() const noexcept { return topics.size(); }
  /// mean(treatment) - mean(baseline).
  double mean_delta() const;
};

inline constexpr std::size_t kDefaultIterations = 10000;
inline constexpr std::size_t kExactEnumerationLimit = 20;

/// Test statistic: mean of the per-topic differences.
double mean_difference(const std::vector<double>& diffs);

/// Two-sided Monte-Carlo p-value with add-one correction:
/// (#{|T_perm| >= |T_obs|} + 1) / (iterations + 1).
double fisher_randomization_mc(const PairedScores& pair, std::size_t iterations,
                               std::uint64_t seed);

/// Exact two-sided p-value over all 2^n sign patterns (n <= 30).
/// Throws std::invalid_argument above 30 topics.
double fisher_randomization_exact(const PairedScores& pair);

/// Exact enumeration up to kExactEnumerationLimit topics, Monte Carlo above.
/// Throws std::invalid_argument for fewer than 2 topics or < 1000 iterations.
double fisher_randomization(const PairedScores& pair, std::size_t iterations = kDefaultIterations,
                            std::uint64_t seed = 0);

/// FNV-1a, stable across platforms; used to derive per-run seeds.
std::uint64_t stable_hash(std::string_view text) noexcept;

struct SystemComparison {
  std::string system;
  PairedScores scores;
};

struct SignificanceSummary {
  std::size_t n_systems = 0;
  std::size_t n_improved = 0;
  std::size_t n_degraded = 0;
  std::size_t n_significant = 0;
  std::size_t n_significant_improved = 0;
  double avg_improvement_significant = 0.0;  // 0 when nothing is significant
  double overall_change = 0.0;
};

/// One system's delta and p-value as used by the summary.
struct SystemOutcome {
  std::string system;
  double delta = 0.0;
  double p_value = 1.0;
};

/// Tests every system (seed ^ stable_hash(system)) and aggregates. Systems are
/// processed in name order so the result does not depend on input order.
SignificanceSummary summarize_improvements(const std::vector<SystemComparison>& systems,
                                           double alpha = 0.05,
                                           std::size_t iterations = kDefaultIterations,
                                           std::uint64_t seed = 0,
                                           std::vector<SystemOutcome>* outcomes = nullptr);

/// Aggregation step alone, over precomputed outcomes.
SignificanceSummary summarize_outcomes(std::vector<SystemOutcome> outcomes, double alpha = 0.05);

}  // namespace bibfusion
