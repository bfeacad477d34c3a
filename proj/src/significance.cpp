#include "bibfusion/significance.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace bibfusion {

namespace {

std::vector<double> differences(const PairedScores& pair) {
  if (pair.baseline.size() != pair.topics.size() || pair.treatment.size() != pair.topics.size()) {
    throw std::invalid_argument("paired scores are not aligned");
  }
  std::vector<double> d(pair.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = pair.treatment[i] - pair.baseline[i];
  return d;
}

// Sums equal in exact arithmetic may differ in the last bits depending on
// summation order; count them as ties with the observed statistic.
bool at_least_as_extreme(double perm_sum, double observed_sum, std::size_t n) {
  const double tol = 1e-12 * static_cast<double>(n);
  return std::fabs(perm_sum) >= std::fabs(observed_sum) - tol;
}

// Sums of every sign pattern over d[from, from + count).
std::vector<double> pattern_sums(const std::vector<double>& d, std::size_t from, std::size_t count) {
  std::vector<double> sums(std::size_t{1} << count, 0.0);
  for (std::size_t mask = 0; mask < sums.size(); ++mask) {
    double s = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      s += ((mask >> j) & 1u) ? -d[from + j] : d[from + j];
    }
    sums[mask] = s;
  }
  return sums;
}

}  // namespace

PairedScores PairedScores::from_reports(const EvalReport& baseline, const EvalReport& treatment,
                                        const MetricSpec& spec) {
  auto bi = baseline.index_of(spec);
  auto ti = treatment.index_of(spec);
  if (!bi || !ti) throw std::invalid_argument("metric " + spec.label() + " missing from a report");
  PairedScores pair;
  for (const auto& [topic, row] : baseline.per_topic) {
    auto it = treatment.per_topic.find(topic);
    if (it == treatment.per_topic.end()) continue;
    const auto& b = row[*bi];
    const auto& t = it->second[*ti];
    if (!b || !t) continue;
    pair.topics.push_back(topic);
    pair.baseline.push_back(*b);
    pair.treatment.push_back(*t);
  }
  return pair;
}

double PairedScores::mean_delta() const {
  if (topics.empty()) return 0.0;
  double b = 0.0, t = 0.0;
  for (double v : baseline) b += v;
  for (double v : treatment) t += v;
  return (t - b) / static_cast<double>(topics.size());
}

double mean_difference(const std::vector<double>& diffs) {
  if (diffs.empty()) return 0.0;
  double s = 0.0;
  for (double d : diffs) s += d;
  return s / static_cast<double>(diffs.size());
}

double fisher_randomization_mc(const PairedScores& pair, std::size_t iterations,
                               std::uint64_t seed) {
  auto d = differences(pair);
  if (d.size() < 2) throw std::invalid_argument("randomization test needs at least 2 topics");
  if (iterations == 0) throw std::invalid_argument("iterations must be positive");
  const std::size_t n = d.size();

  double observed = 0.0;
  for (double v : d) observed += v;

  // Signs come straight from raw 64-bit engine output; distribution adaptors
  // are implementation-defined and would break cross-platform reproducibility.
  std::mt19937_64 rng(seed);
  std::size_t extreme = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    double s = 0.0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 64 == 0) bits = rng();
      s += (bits & 1u) ? -d[i] : d[i];
      bits >>= 1;
    }
    if (at_least_as_extreme(s, observed, n)) ++extreme;
  }
  return static_cast<double>(extreme + 1) / static_cast<double>(iterations + 1);
}

double fisher_randomization_exact(const PairedScores& pair) {
  auto d = differences(pair);
  if (d.size() < 2) throw std::invalid_argument("randomization test needs at least 2 topics");
  if (d.size() > 30) throw std::invalid_argument("exact enumeration limited to 30 topics");
  const std::size_t n = d.size();
  const std::size_t low_count = n / 2;
  const std::size_t high_count = n - low_count;
  auto low = pattern_sums(d, 0, low_count);
  auto high = pattern_sums(d, low_count, high_count);
  const double observed = low[0] + high[0];

  std::uint64_t extreme = 0;
  for (double h : high) {
    for (double l : low) {
      if (at_least_as_extreme(l + h, observed, n)) ++extreme;
    }
  }
  return static_cast<double>(extreme) / static_cast<double>(low.size() * high.size());
}

double fisher_randomization(const PairedScores& pair, std::size_t iterations, std::uint64_t seed) {
  if (pair.size() < 2) throw std::invalid_argument("randomization test needs at least 2 topics");
  if (pair.size() <= kExactEnumerationLimit) return fisher_randomization_exact(pair);
  if (iterations < 1000) throw std::invalid_argument("use at least 1000 iterations");
  return fisher_randomization_mc(pair, iterations, seed);
}

std::uint64_t stable_hash(std::string_view text) noexcept {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

SignificanceSummary summarize_outcomes(std::vector<SystemOutcome> outcomes, double alpha) {
  std::sort(outcomes.begin(), outcomes.end(),
            [](const SystemOutcome& a, const SystemOutcome& b) { return a.system < b.system; });
  SignificanceSummary s;
  s.n_systems = outcomes.size();
  double all_sum = 0.0, sig_sum = 0.0;
  for (const auto& o : outcomes) {
    if (o.delta > 0.0) ++s.n_improved;
    if (o.delta < 0.0) ++s.n_degraded;
    all_sum += o.delta;
    if (o.p_value <= alpha) {
      ++s.n_significant;
      if (o.delta > 0.0) ++s.n_significant_improved;
      sig_sum += o.delta;
    }
  }
  if (s.n_systems > 0) s.overall_change = all_sum / static_cast<double>(s.n_systems);
  if (s.n_significant > 0) {
    s.avg_improvement_significant = sig_sum / static_cast<double>(s.n_significant);
  }
  return s;
}

SignificanceSummary summarize_improvements(const std::vector<SystemComparison>& systems,
                                           double alpha, std::size_t iterations,
                                           std::uint64_t seed,
                                           std::vector<SystemOutcome>* outcomes) {
  std::vector<SystemOutcome> results;
  results.reserve(systems.size());
  for (const auto& sys : systems) {
    SystemOutcome o{sys.system, sys.scores.mean_delta(), 1.0};
    if (sys.scores.size() >= 2) {
      o.p_value = fisher_randomization(sys.scores, iterations, seed ^ stable_hash(sys.system));
    }
    results.push_back(std::move(o));
  }
  std::sort(results.begin(), results.end(),
            [](const SystemOutcome& a, const SystemOutcome& b) { return a.system < b.system; });
  if (outcomes != nullptr) *outcomes = results;
  return summarize_outcomes(std::move(results), alpha);
}

}  // namespace bibfusion
