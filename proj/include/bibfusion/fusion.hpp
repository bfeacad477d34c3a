#pragma once

/// \file fusion.hpp
/// Rank fusion operators: RRF, BordaFuse, BayesFuse, WMNZ and CombMNZ.
///
/// Every operator returns a canonical RankedList over exactly the union of
/// its inputs. Ranks are 1-based positions in the (canonical) input lists.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bibfusion/trec_io.hpp"

namespace bibfusion {

/// Lists to fuse for one topic, with optional positive per-list weights.
class FusionInput {
 public:
  explicit FusionInput(std::vector<RankedList> lists,
                       std::optional<std::vector<double>> weights = std::nullopt);

  const std::vector<RankedList>& lists() const noexcept { return lists_; }
  /// Per-list weights; 1.0 each when none were given.
  std::vector<double> weights() const;
  bool has_weights() const noexcept { return weights_.has_value(); }

 private:
  std::vector<RankedList> lists_;
  std::optional<std::vector<double>> weights_;
};

inline constexpr double kDefaultRrfK = 60.0;

RankedList rrf(const FusionInput& input, double k = kDefaultRrfK);

/// Borda count. Unranked documents in a list share its leftover points
/// equally: (N - L + 1) / 2 each.
RankedList borda_fuse(const FusionInput& input);

/// Rank bins as inclusive upper bounds, e.g. {1, 2, ..., 10, 20, ..., 1000}.
/// Ranks beyond the last bound fall into the unranked bin.
struct BinSpec {
  std::vector<std::size_t> upper_bounds;

  /// 1..10 individually, then decades to 100, then centuries to 1000.
  static BinSpec standard();
  /// "1-10:1,11-100:10,101-1000:100" style: range and bin width.
  static BinSpec parse(std::string_view text);

  /// Index of the bin holding `rank`; nullopt for the unranked bin.
  std::optional<std::size_t> bin_of(std::size_t rank) const;
  std::size_t count() const noexcept { return upper_bounds.size(); }
};

struct BayesModel {
  BinSpec bins;
  std::vector<double> log_likelihood_ratio;  // one per bin
  double unranked_llr = 0.0;

  double llr_for_rank(std::size_t rank) const;

  void save(std::ostream& out) const;
  static BayesModel load(std::istream& in);
};

/// Counts of judged documents per bin, split by relevance. The unranked bin
/// is the last slot.
struct BayesCounts {
  std::vector<double> relevant;
  std::vector<double> nonrelevant;
  std::size_t retrieved_judged = 0;

  /// Adds counts gathered under the same bin spec.
  BayesCounts& operator+=(const BayesCounts& other);
};

inline constexpr double kBayesPseudoCount = 0.5;

/// Tallies judged documents of the training runs by the bin they were
/// retrieved in (relevant = grade >= 1). Judged documents a run did not
/// retrieve count toward the unranked bin. Run topics without judgments
/// are ignored.
BayesCounts count_bayes(const std::vector<Run>& training_runs, const Qrels& qrels,
                        const BinSpec& bins = BinSpec::standard());

/// Smoothed (count + 0.5) / (total + 0.5 * #bins) estimates turned into log
/// ratios. Throws if no judged document was retrieved or a relevance class
/// is empty.
BayesModel bayes_model_from_counts(const BayesCounts& counts, const BinSpec& bins);

/// count_bayes followed by bayes_model_from_counts.
BayesModel train_bayes(const std::vector<Run>& training_runs, const Qrels& qrels,
                       const BinSpec& bins = BinSpec::standard(), BayesCounts* counts = nullptr);

RankedList bayes_fuse(const FusionInput& input, const BayesModel& model);

/// (s - min) / (max - min); all 1.0 when the scores are constant.
RankedList min_max_normalize(const RankedList& list);

/// (sum_i w_i s_i(d)) * (sum of w_i over lists with s_i(d) > 0). Absent
/// documents score 0. Inputs are expected to be normalized already.
RankedList wmnz(const FusionInput& input);

/// (sum_i s_i(d)) * #{i : s_i(d) > 0}.
RankedList combmnz(const FusionInput& input);

enum class Normalization { None, MinMax };

struct RrfMethod {
  double k = kDefaultRrfK;
};
struct BordaMethod {};
struct BayesMethod {
  BayesModel model;
};
struct WmnzMethod {
  Normalization normalization = Normalization::MinMax;
};
struct CombMnzMethod {
  Normalization normalization = Normalization::MinMax;
};

using FusionMethod = std::variant<RrfMethod, BordaMethod, BayesMethod, WmnzMethod, CombMnzMethod>;

/// Method name: rrf, borda, bayes, wmnz or combmnz.
std::string method_name(const FusionMethod& method);

/// Builds a method from its token. BayesFuse needs a model, so "bayes" is
/// only accepted when one is supplied. Throws std::invalid_argument.
FusionMethod make_method(std::string_view token, double rrf_k = kDefaultRrfK,
                         std::optional<BayesModel> model = std::nullopt);

RankedList fuse(const FusionMethod& method, const FusionInput& input);

}  // namespace bibfusion
