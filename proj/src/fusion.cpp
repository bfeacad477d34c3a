#include "bibfusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bibfusion {

namespace {

// Per-document contributions are summed in sorted order so the fused score
// does not depend on the order the input lists were supplied in.
class ScoreAccumulator {
 public:
  void add(const DocId& doc, double contribution) { parts_[doc].push_back(contribution); }

  template <typename Finish>
  RankedList finish(Finish&& finish_doc) {
    std::vector<ScoredDoc> out;
    out.reserve(parts_.size());
    for (auto& [doc, parts] : parts_) {
      std::sort(parts.begin(), parts.end());
      out.push_back({doc, finish_doc(doc, parts)});
    }
    return RankedList::from_unsorted(std::move(out));
  }

  RankedList sum() {
    return finish([](const DocId&, const std::vector<double>& parts) { return sorted_sum(parts); });
  }

  static double sorted_sum(const std::vector<double>& parts) {
    double s = 0.0;
    for (double p : parts) s += p;
    return s;
  }

 private:
  std::map<DocId, std::vector<double>> parts_;
};

std::vector<DocId> union_of(const FusionInput& input) {
  std::vector<DocId> docs;
  for (const auto& list : input.lists()) {
    for (const auto& e : list) docs.push_back(e.doc);
  }
  std::sort(docs.begin(), docs.end());
  docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
  return docs;
}

std::string trim_copy(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

std::size_t parse_size(std::string_view text) {
  auto v = parse_double(text);
  if (!v || *v < 0 || std::floor(*v) != *v) {
    throw std::invalid_argument("expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return static_cast<std::size_t>(*v);
}

}  // namespace

FusionInput::FusionInput(std::vector<RankedList> lists, std::optional<std::vector<double>> weights)
    : lists_(std::move(lists)), weights_(std::move(weights)) {
  if (lists_.empty()) throw std::invalid_argument("fusion needs at least one list");
  if (weights_) {
    if (weights_->size() != lists_.size()) {
      throw std::invalid_argument("weights must align with the input lists");
    }
    for (double w : *weights_) {
      if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be positive");
    }
  }
}

std::vector<double> FusionInput::weights() const {
  if (weights_) return *weights_;
  return std::vector<double>(lists_.size(), 1.0);
}

RankedList rrf(const FusionInput& input, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("RRF k must be positive");
  ScoreAccumulator acc;
  for (const auto& list : input.lists()) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      acc.add(list[i].doc, 1.0 / (k + static_cast<double>(i + 1)));
    }
  }
  return acc.sum();
}

RankedList borda_fuse(const FusionInput& input) {
  const auto universe = union_of(input);
  const double n = static_cast<double>(universe.size());
  ScoreAccumulator acc;
  for (const auto& list : input.lists()) {
    const double leftover = (n - static_cast<double>(list.size()) + 1.0) / 2.0;
    auto ranks = list.rank_index();
    for (const auto& doc : universe) {
      auto it = ranks.find(doc);
      acc.add(doc, it == ranks.end() ? leftover : n - static_cast<double>(it->second) + 1.0);
    }
  }
  return acc.sum();
}

BinSpec BinSpec::standard() { return parse("1-10:1,11-100:10,101-1000:100"); }

BinSpec BinSpec::parse(std::string_view text) {
  BinSpec spec;
  std::size_t expected_start = 1;
  std::stringstream ss{std::string(text)};
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim_copy(part);
    if (part.empty()) continue;
    auto colon = part.find(':');
    auto dash = part.find('-');
    if (colon == std::string::npos || dash == std::string::npos || dash > colon) {
      throw std::invalid_argument("bad bin segment '" + part + "', expected FROM-TO:WIDTH");
    }
    std::size_t from = parse_size(std::string_view(part).substr(0, dash));
    std::size_t to = parse_size(std::string_view(part).substr(dash + 1, colon - dash - 1));
    std::size_t width = parse_size(std::string_view(part).substr(colon + 1));
    if (from != expected_start || to < from || width == 0 || (to - from + 1) % width != 0) {
      throw std::invalid_argument("bin segment '" + part + "' does not tile the ranks from " +
                                  std::to_string(expected_start));
    }
    for (std::size_t b = from + width - 1; b <= to; b += width) spec.upper_bounds.push_back(b);
    expected_start = to + 1;
  }
  if (spec.upper_bounds.empty()) throw std::invalid_argument("empty bin spec");
  return spec;
}

std::optional<std::size_t> BinSpec::bin_of(std::size_t rank) const {
  if (rank == 0) return std::nullopt;
  auto it = std::lower_bound(upper_bounds.begin(), upper_bounds.end(), rank);
  if (it == upper_bounds.end()) return std::nullopt;
  return static_cast<std::size_t>(it - upper_bounds.begin());
}

double BayesModel::llr_for_rank(std::size_t rank) const {
  auto bin = bins.bin_of(rank);
  return bin ? log_likelihood_ratio[*bin] : unranked_llr;
}

void BayesModel::save(std::ostream& out) const {
  out << "# BayesFuse model: log P(bin|rel) / P(bin|nonrel)\n";
  out << "bins =";
  for (auto b : bins.upper_bounds) out << ' ' << b;
  out << "\nllr =";
  for (double v : log_likelihood_ratio) out << ' ' << format_double(v);
  out << "\nunranked_llr = " << format_double(unranked_llr) << '\n';
}

BayesModel BayesModel::load(std::istream& in) {
  BayesModel model;
  bool have_bins = false, have_llr = false, have_unranked = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto stripped = trim_copy(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    auto key = trim_copy(std::string_view(stripped).substr(0, eq));
    auto values = split_whitespace(std::string_view(stripped).substr(eq + 1));
    if (key == "bins") {
      for (auto v : values) model.bins.upper_bounds.push_back(parse_size(v));
      have_bins = true;
    } else if (key == "llr" || key == "unranked_llr") {
      std::vector<double> parsed;
      for (auto v : values) {
        auto d = parse_double(v);
        if (!d) throw ParseError("bad number '" + std::string(v) + "'", line_no);
        parsed.push_back(*d);
      }
      if (key == "llr") {
        model.log_likelihood_ratio = std::move(parsed);
        have_llr = true;
      } else {
        if (parsed.size() != 1) throw ParseError("unranked_llr takes one value", line_no);
        model.unranked_llr = parsed.front();
        have_unranked = true;
      }
    } else {
      throw ParseError("unknown key '" + key + "'", line_no);
    }
  }
  if (!have_bins || !have_llr || !have_unranked) {
    throw ParseError("model needs bins, llr and unranked_llr");
  }
  if (model.bins.upper_bounds.empty() ||
      !std::is_sorted(model.bins.upper_bounds.begin(), model.bins.upper_bounds.end()) ||
      std::adjacent_find(model.bins.upper_bounds.begin(), model.bins.upper_bounds.end()) !=
          model.bins.upper_bounds.end() ||
      model.bins.upper_bounds.front() == 0) {
    throw ParseError("bins must be strictly increasing positive ranks");
  }
  if (model.log_likelihood_ratio.size() != model.bins.count()) {
    throw ParseError("llr count does not match bin count");
  }
  return model;
}

BayesCounts& BayesCounts::operator+=(const BayesCounts& other) {
  if (relevant.empty()) {
    relevant.assign(other.relevant.size(), 0.0);
    nonrelevant.assign(other.nonrelevant.size(), 0.0);
  }
  if (other.relevant.size() != relevant.size()) {
    throw std::invalid_argument("cannot merge counts from different bin specs");
  }
  for (std::size_t i = 0; i < relevant.size(); ++i) {
    relevant[i] += other.relevant[i];
    nonrelevant[i] += other.nonrelevant[i];
  }
  retrieved_judged += other.retrieved_judged;
  return *this;
}

BayesCounts count_bayes(const std::vector<Run>& training_runs, const Qrels& qrels,
                        const BinSpec& bins) {
  const std::size_t slots = bins.count() + 1;
  BayesCounts counts{std::vector<double>(slots, 0.0), std::vector<double>(slots, 0.0), 0};
  for (const auto& run : training_runs) {
    for (const auto& [topic, list] : run.topics) {
      const auto* judged = qrels.topic(topic);
      if (judged == nullptr) continue;
      auto ranks = list.rank_index();
      for (const auto& [doc, grade] : *judged) {
        auto it = ranks.find(doc);
        std::size_t slot = slots - 1;
        if (it != ranks.end()) {
          ++counts.retrieved_judged;
          if (auto b = bins.bin_of(it->second)) slot = *b;
        }
        (grade >= 1 ? counts.relevant : counts.nonrelevant)[slot] += 1.0;
      }
    }
  }
  return counts;
}

BayesModel bayes_model_from_counts(const BayesCounts& counts, const BinSpec& bins) {
  const std::size_t slots = bins.count() + 1;
  if (counts.relevant.size() != slots || counts.nonrelevant.size() != slots) {
    throw std::invalid_argument("counts do not match the bin spec");
  }
  if (counts.retrieved_judged == 0) {
    throw std::invalid_argument("no judged documents in training runs");
  }
  double rel_total = 0.0, nonrel_total = 0.0;
  for (std::size_t i = 0; i < slots; ++i) {
    rel_total += counts.relevant[i];
    nonrel_total += counts.nonrelevant[i];
  }
  if (rel_total == 0.0 || nonrel_total == 0.0) {
    throw std::invalid_argument("training data needs both relevant and non-relevant judgments");
  }

  const double extra = kBayesPseudoCount * static_cast<double>(slots);
  auto llr = [&](std::size_t i) {
    double p_rel = (counts.relevant[i] + kBayesPseudoCount) / (rel_total + extra);
    double p_non = (counts.nonrelevant[i] + kBayesPseudoCount) / (nonrel_total + extra);
    return std::log(p_rel / p_non);
  };
  BayesModel model;
  model.bins = bins;
  for (std::size_t i = 0; i + 1 < slots; ++i) model.log_likelihood_ratio.push_back(llr(i));
  model.unranked_llr = llr(slots - 1);
  return model;
}

BayesModel train_bayes(const std::vector<Run>& training_runs, const Qrels& qrels,
                       const BinSpec& bins, BayesCounts* counts) {
  auto tally = count_bayes(training_runs, qrels, bins);
  auto model = bayes_model_from_counts(tally, bins);
  if (counts != nullptr) *counts = std::move(tally);
  return model;
}

RankedList bayes_fuse(const FusionInput& input, const BayesModel& model) {
  const auto universe = union_of(input);
  ScoreAccumulator acc;
  for (const auto& list : input.lists()) {
    auto ranks = list.rank_index();
    for (const auto& doc : universe) {
      auto it = ranks.find(doc);
      acc.add(doc, it == ranks.end() ? model.unranked_llr : model.llr_for_rank(it->second));
    }
  }
  return acc.sum();
}

RankedList min_max_normalize(const RankedList& list) {
  if (list.empty()) return list;
  double hi = list[0].score;
  double lo = list[list.size() - 1].score;
  std::vector<ScoredDoc> out;
  out.reserve(list.size());
  for (const auto& e : list) {
    out.push_back({e.doc, hi == lo ? 1.0 : (e.score - lo) / (hi - lo)});
  }
  return RankedList::from_unsorted(std::move(out));
}

RankedList wmnz(const FusionInput& input) {
  const auto weights = input.weights();
  std::map<DocId, std::vector<double>> weighted, nonzero;
  for (std::size_t i = 0; i < input.lists().size(); ++i) {
    for (const auto& e : input.lists()[i]) {
      weighted[e.doc].push_back(weights[i] * e.score);
      auto& nz = nonzero[e.doc];
      if (e.score > 0.0) nz.push_back(weights[i]);
    }
  }
  std::vector<ScoredDoc> out;
  out.reserve(weighted.size());
  for (auto& [doc, parts] : weighted) {
    auto& nz = nonzero[doc];
    std::sort(parts.begin(), parts.end());
    std::sort(nz.begin(), nz.end());
    double s = 0.0, w = 0.0;
    for (double p : parts) s += p;
    for (double p : nz) w += p;
    out.push_back({doc, s * w});
  }
  return RankedList::from_unsorted(std::move(out));
}

RankedList combmnz(const FusionInput& input) {
  ScoreAccumulator acc;
  for (const auto& list : input.lists()) {
    for (const auto& e : list) acc.add(e.doc, e.score);
  }
  return acc.finish([](const DocId&, const std::vector<double>& parts) {
    double nonzero = 0.0;
    for (double p : parts) nonzero += p > 0.0 ? 1.0 : 0.0;
    return ScoreAccumulator::sorted_sum(parts) * nonzero;
  });
}

std::string method_name(const FusionMethod& method) {
  struct Visitor {
    std::string operator()(const RrfMethod&) const { return "rrf"; }
    std::string operator()(const BordaMethod&) const { return "borda"; }
    std::string operator()(const BayesMethod&) const { return "bayes"; }
    std::string operator()(const WmnzMethod&) const { return "wmnz"; }
    std::string operator()(const CombMnzMethod&) const { return "combmnz"; }
  };
  return std::visit(Visitor{}, method);
}

FusionMethod make_method(std::string_view token, double rrf_k, std::optional<BayesModel> model) {
  if (token == "rrf") {
    if (!(rrf_k > 0.0)) throw std::invalid_argument("RRF k must be positive");
    return RrfMethod{rrf_k};
  }
  if (token == "borda") return BordaMethod{};
  if (token == "wmnz") return WmnzMethod{};
  if (token == "combmnz") return CombMnzMethod{};
  if (token == "bayes") {
    if (!model) throw std::invalid_argument("bayes fusion requires a trained model");
    return BayesMethod{std::move(*model)};
  }
  throw std::invalid_argument("unknown fusion method '" + std::string(token) +
                              "', expected rrf|borda|bayes|wmnz|combmnz");
}

namespace {

FusionInput normalized(const FusionInput& input, Normalization norm) {
  if (norm == Normalization::None) return input;
  std::vector<RankedList> lists;
  lists.reserve(input.lists().size());
  for (const auto& l : input.lists()) lists.push_back(min_max_normalize(l));
  return FusionInput(std::move(lists),
                     input.has_weights() ? std::optional(input.weights()) : std::nullopt);
}

}  // namespace

RankedList fuse(const FusionMethod& method, const FusionInput& input) {
  struct Visitor {
    const FusionInput& input;
    RankedList operator()(const RrfMethod& m) const { return rrf(input, m.k); }
    RankedList operator()(const BordaMethod&) const { return borda_fuse(input); }
    RankedList operator()(const BayesMethod& m) const { return bayes_fuse(input, m.model); }
    RankedList operator()(const WmnzMethod& m) const { return wmnz(normalized(input, m.normalization)); }
    RankedList operator()(const CombMnzMethod& m) const {
      return combmnz(normalized(input, m.normalization));
    }
  };
  return std::visit(Visitor{input}, method);
}

}  // namespace bibfusion
