#pragma once

/// \file biblio.hpp
/// Bibliometric metadata table and the query-agnostic rankings built from it.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "bibfusion/trec_io.hpp"

namespace bibfusion {

/// The five signals, in canonical label order C, A, P, R, I.
enum class Signal : std::uint8_t {
  Citations = 0,
  Altmetric = 1,
  PubYear = 2,
  ResearchLevel = 3,
  ImpactFactor = 4,
};

inline constexpr std::array<Signal, 5> kAllSignals = {
    Signal::Citations, Signal::Altmetric, Signal::PubYear, Signal::ResearchLevel,
    Signal::ImpactFactor};

char signal_letter(Signal s) noexcept;
std::string signal_name(Signal s);
/// Accepts C/A/P/R/I (case-insensitive); throws std::invalid_argument otherwise.
Signal signal_from_letter(char c);

/// Subset of signals; iteration and labels follow C, A, P, R, I order.
class SignalSet {
 public:
  SignalSet() = default;
  SignalSet(std::initializer_list<Signal> signals);

  /// "CAP", "capri", "IC" ... Empty string or "none" gives the empty set.
  static SignalSet parse(std::string_view label);
  /// All 31 non-empty subsets ordered by size, then by label order.
  static std::vector<SignalSet> all_nonempty();

  void insert(Signal s) noexcept { bits_ |= static_cast<std::uint8_t>(1u << static_cast<int>(s)); }
  bool contains(Signal s) const noexcept { return (bits_ >> static_cast<int>(s)) & 1u; }
  bool empty() const noexcept { return bits_ == 0; }
  std::size_t size() const noexcept;
  std::vector<Signal> members() const;
  std::string label() const;

  friend bool operator==(const SignalSet&, const SignalSet&) = default;

 private:
  std::uint8_t bits_ = 0;
};

struct BiblioRecord {
  DocId doc;
  std::optional<std::int64_t> citations;
  std::optional<double> altmetric;
  std::optional<int> pub_year;
  std::optional<int> research_level;
  std::optional<double> impact_factor;

  /// Ranking value for the signal; nullopt when missing.
  std::optional<double> value(Signal s) const;
  bool has_any_signal() const;
};

/// Header names bound to each field. An empty signal column name means the
/// table does not carry that signal.
struct ColumnMap {
  std::string doc = "pmid";
  std::string citations = "citations";
  std::string altmetric = "altmetric";
  std::string pub_year = "pub_year";
  std::string research_level = "research_level";
  std::string impact_factor = "impact_factor";

  std::string& column(Signal s);
  const std::string& column(Signal s) const;
};

struct TableDialect {
  char delimiter = ',';
  /// Cells treated as missing in addition to the empty cell.
  std::set<std::string> missing_tokens = {"NA", "NaN", "nan", "null", "None"};
  /// Throw on rows with no signal value instead of dropping them.
  bool strict = false;
};

struct LoadStats {
  std::size_t rows = 0;
  std::size_t loaded = 0;
  std::size_t rejected_empty = 0;
};

class BiblioTable {
 public:
  /// Throws std::invalid_argument if the record has no signal or the doc exists.
  void add(BiblioRecord record);

  const BiblioRecord* find(const DocId& doc) const;
  std::size_t size() const noexcept { return records_.size(); }

  /// Number of docs among `docs` holding signal `s`.
  std::size_t coverage(Signal s, const std::set<DocId>& docs) const;

 private:
  std::unordered_map<DocId, BiblioRecord> records_;
};

/// Reads a delimited table with a header row. Errors carry the 1-based line.
BiblioTable load_biblio_table(std::istream& in, const ColumnMap& columns,
                              const TableDialect& dialect = {}, LoadStats* stats = nullptr);
BiblioTable load_biblio_table(const std::string& path, const ColumnMap& columns,
                              const TableDialect& dialect = {}, LoadStats* stats = nullptr);

/// Splits one delimited line, honouring double-quoted cells.
std::vector<std::string> split_delimited(std::string_view line, char delimiter);

/// Candidates that carry the signal, scored by its value, in canonical order.
RankedList signal_ranking(Signal signal, const std::set<DocId>& candidates,
                          const BiblioTable& table);

enum class PoolPolicy { Judged, Run };

PoolPolicy parse_pool_policy(std::string_view text);

/// Judged pool: every doc judged for the topic. Run pool: every doc the
/// baseline retrieved for the topic.
std::set<DocId> candidate_pool(PoolPolicy policy, const TopicId& topic, const Qrels& qrels,
                               const Run* base_run = nullptr);

/// Union of judged documents over all topics.
std::set<DocId> judged_documents(const Qrels& qrels);

}  // namespace bibfusion
