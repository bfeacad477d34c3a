#pragma once

/// \file metrics.hpp
/// Retrieval effectiveness measures over graded judgments.
///
/// Binary measures treat grade >= 1 as relevant. A per-topic function returns
/// nullopt when the measure is undefined for the topic (e.g. no relevant
/// documents); such topics are left out of the macro average.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bibfusion/trec_io.hpp"

namespace bibfusion {

enum class MetricKind { Recall, Precision, AP, NDCG, Bpref, RBP };

enum class Gain { Linear, Exponential };

struct MetricSpec {
  MetricKind kind = MetricKind::NDCG;
  std::size_t cutoff = 1000;
  double rbp_p = 0.8;  // RBP only
  Gain gain = Gain::Linear;  // nDCG only

  /// Throws std::invalid_argument on cutoff 0 or p outside (0, 1).
  void validate() const;
  /// Short name used in CSV output: recall, P, AP, nDCG, bpref, RBP(0.8).
  std::string name() const;
  /// name@cutoff, e.g. "nDCG@1000".
  std::string label() const;

  static MetricSpec recall(std::size_t cutoff = 1000) { return {MetricKind::Recall, cutoff}; }
  static MetricSpec precision(std::size_t cutoff = 10) { return {MetricKind::Precision, cutoff}; }
  static MetricSpec ap(std::size_t cutoff = 1000) { return {MetricKind::AP, cutoff}; }
  static MetricSpec ndcg(std::size_t cutoff = 1000, Gain gain = Gain::Linear) {
    return {MetricKind::NDCG, cutoff, 0.8, gain};
  }
  static MetricSpec bpref(std::size_t cutoff = 1000) { return {MetricKind::Bpref, cutoff}; }
  static MetricSpec rbp(double p, std::size_t depth = 1000) { return {MetricKind::RBP, depth, p}; }

  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

/// Recall, nDCG, AP, P@10 and Bpref at the standard cutoffs.
std::vector<MetricSpec> standard_battery(Gain gain = Gain::Linear);

/// Parses "nDCG@10", "recall@1000", "P@10", "RBP(0.95)@1000" ...
MetricSpec parse_metric(std::string_view label);

constexpr bool binary_relevant(int grade) noexcept { return grade >= 1; }

std::optional<double> recall_at(const RankedList& list, const TopicJudgments& judged,
                                std::size_t cutoff);
std::optional<double> precision_at(const RankedList& list, const TopicJudgments& judged,
                                   std::size_t cutoff = 10);
std::optional<double> average_precision(const RankedList& list, const TopicJudgments& judged,
                                        std::size_t cutoff = 1000);
std::optional<double> ndcg(const RankedList& list, const TopicJudgments& judged,
                           std::size_t cutoff, Gain gain = Gain::Linear);
std::optional<double> bpref(const RankedList& list, const TopicJudgments& judged,
                            std::size_t cutoff = 1000);
std::optional<double> rbp(const RankedList& list, const TopicJudgments& judged, double p,
                          std::size_t depth = 1000);

std::optional<double> compute_metric(const MetricSpec& spec, const RankedList& list,
                                     const TopicJudgments& judged);

/// Per-topic and macro-averaged values of several metrics for one run.
struct EvalReport {
  std::string run_tag;
  std::vector<MetricSpec> specs;
  /// topic -> one slot per spec; nullopt where the metric is undefined.
  std::map<TopicId, std::vector<std::optional<double>>> per_topic;
  /// Mean over topics with a defined value; nullopt when there are none.
  std::vector<std::optional<double>> aggregate;
  /// Run topics without judgments, ignored during evaluation.
  std::vector<TopicId> skipped_topics;

  std::optional<std::size_t> index_of(const MetricSpec& spec) const;
  std::optional<double> mean(const MetricSpec& spec) const;
};

/// Evaluates every judged topic that has at least one relevant document; a
/// judged topic missing from the run is scored on an empty ranking.
EvalReport evaluate_run(const Run& run, const Qrels& qrels, const std::vector<MetricSpec>& specs);

/// CSV `run_tag,topic,metric,cutoff,value` with an `ALL` row per metric.
void write_eval_csv(const std::vector<EvalReport>& reports, std::ostream& out, bool header = true);

/// Reads the CSV written by write_eval_csv back into reports (in file order).
std::vector<EvalReport> read_eval_csv(std::istream& in);

}  // namespace bibfusion
