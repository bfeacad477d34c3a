#pragma once

/// \file trec_io.hpp
/// TREC run and qrels files: parsing, canonical in-memory form, serialization.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bibfusion {

/// Raised for malformed input. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Document identifier: a non-empty token without whitespace.
class DocId {
 public:
  explicit DocId(std::string value);

  const std::string& str() const noexcept { return value_; }

  friend auto operator<=>(const DocId&, const DocId&) = default;
  friend bool operator==(const DocId&, const DocId&) = default;

 private:
  std::string value_;
};

using TopicId = std::string;

struct ScoredDoc {
  DocId doc;
  double score;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// One topic's ordering. Entries are always canonical: descending score,
/// ties broken by ascending DocId, no duplicate documents.
class RankedList {
 public:
  RankedList() = default;

  /// Sorts into canonical order. Throws std::invalid_argument on duplicates.
  static RankedList from_unsorted(std::vector<ScoredDoc> entries);

  const std::vector<ScoredDoc>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const ScoredDoc& operator[](std::size_t i) const { return entries_[i]; }

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  /// Keeps the first `depth` entries.
  void truncate(std::size_t depth);

  /// Map from document to 1-based rank.
  std::map<DocId, std::size_t> rank_index() const;

  friend bool operator==(const RankedList&, const RankedList&) = default;

 private:
  std::vector<ScoredDoc> entries_;
};

/// Strict weak order used for every ranking in the project.
bool canonical_before(const ScoredDoc& a, const ScoredDoc& b) noexcept;

struct Run {
  std::string tag;
  std::map<TopicId, RankedList> topics;

  friend bool operator==(const Run&, const Run&) = default;
};

inline constexpr std::size_t kDefaultDepth = 1000;

/// Judgments for one topic.
using TopicJudgments = std::map<DocId, int>;

class Qrels {
 public:
  /// Throws std::invalid_argument if the pair already exists.
  void add(const TopicId& topic, DocId doc, int grade);

  std::optional<int> grade(const TopicId& topic, const DocId& doc) const;

  /// nullptr when the topic has no judgments.
  const TopicJudgments* topic(const TopicId& topic) const;

  const std::map<TopicId, TopicJudgments>& topics() const noexcept { return topics_; }

  /// Total number of (topic, doc) judgments.
  std::size_t size() const noexcept { return size_; }

 private:
  std::map<TopicId, TopicJudgments> topics_;
  std::size_t size_ = 0;
};

/// Parses `topic Q0 doc rank score tag` lines. Ranks in the file are ignored;
/// order is recomputed from scores and each topic is cut to `depth_limit`.
Run parse_run(std::istream& in, std::size_t depth_limit = kDefaultDepth);
Run load_run(const std::string& path, std::size_t depth_limit = kDefaultDepth);

/// Parses `topic 0 doc grade` lines; grades must lie in [0, max_grade].
Qrels parse_qrels(std::istream& in, int max_grade = 2);
Qrels load_qrels(const std::string& path, int max_grade = 2);

Run canonicalize_run(Run run);

/// Emits topics in ascending topic-id order with shortest round-trip scores.
void write_run(const Run& run, std::ostream& out);
void save_run(const Run& run, const std::string& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Whole-string parse of a finite double; nullopt on any failure.
std::optional<double> parse_double(std::string_view text);

/// Splits on runs of ASCII whitespace.
std::vector<std::string_view> split_whitespace(std::string_view line);

}  // namespace bibfusion

template <>
struct std::hash<bibfusion::DocId> {
  std::size_t operator()(const bibfusion::DocId& d) const noexcept {
    return std::hash<std::string>{}(d.str());
  }
};
