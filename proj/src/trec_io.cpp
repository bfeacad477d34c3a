#include "bibfusion/trec_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace bibfusion {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::optional<long long> parse_integer(std::string_view text) {
  long long value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

ParseError::ParseError(const std::string& what, std::size_t line)
    : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
      line_(line) {}

DocId::DocId(std::string value) : value_(std::move(value)) {
  if (value_.empty()) throw std::invalid_argument("empty document id");
  if (std::any_of(value_.begin(), value_.end(), is_space)) {
    throw std::invalid_argument("document id contains whitespace: '" + value_ + "'");
  }
}

bool canonical_before(const ScoredDoc& a, const ScoredDoc& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.doc < b.doc;
}

RankedList RankedList::from_unsorted(std::vector<ScoredDoc> entries) {
  std::sort(entries.begin(), entries.end(), canonical_before);
  std::set<std::string_view> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.doc.str()).second) {
      throw std::invalid_argument("duplicate document in ranking: " + e.doc.str());
    }
  }
  RankedList list;
  list.entries_ = std::move(entries);
  return list;
}

void RankedList::truncate(std::size_t depth) {
  if (entries_.size() > depth) entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(depth), entries_.end());
}

std::map<DocId, std::size_t> RankedList::rank_index() const {
  std::map<DocId, std::size_t> index;
  for (std::size_t i = 0; i < entries_.size(); ++i) index.emplace(entries_[i].doc, i + 1);
  return index;
}

void Qrels::add(const TopicId& topic, DocId doc, int grade) {
  auto [it, inserted] = topics_[topic].emplace(std::move(doc), grade);
  if (!inserted) {
    throw std::invalid_argument("duplicate judgment for topic " + topic + ", doc " +
                                it->first.str());
  }
  ++size_;
}

std::optional<int> Qrels::grade(const TopicId& topic, const DocId& doc) const {
  const auto* judged = this->topic(topic);
  if (judged == nullptr) return std::nullopt;
  auto it = judged->find(doc);
  if (it == judged->end()) return std::nullopt;
  return it->second;
}

const TopicJudgments* Qrels::topic(const TopicId& topic) const {
  auto it = topics_.find(topic);
  return it == topics_.end() ? nullptr : &it->second;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

std::optional<double> parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Run parse_run(std::istream& in, std::size_t depth_limit) {
  if (depth_limit == 0) throw std::invalid_argument("depth limit must be positive");
  Run run;
  std::map<TopicId, std::vector<ScoredDoc>> raw;
  std::map<TopicId, std::set<std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() != 6) {
      throw ParseError("expected 6 fields, got " + std::to_string(fields.size()), line_no);
    }
    auto score = parse_double(fields[4]);
    if (!score) throw ParseError("score is not a finite number: '" + std::string(fields[4]) + "'", line_no);
    if (!any) {
      run.tag = std::string(fields[5]);
      any = true;
    }
    TopicId topic(fields[0]);
    std::string doc(fields[2]);
    if (!seen[topic].insert(doc).second) {
      throw ParseError("duplicate document " + doc + " for topic " + topic, line_no);
    }
    raw[topic].push_back({DocId(std::move(doc)), *score});
  }
  if (!any) throw ParseError("run is empty");
  for (auto& [topic, entries] : raw) {
    auto list = RankedList::from_unsorted(std::move(entries));
    list.truncate(depth_limit);
    run.topics.emplace(topic, std::move(list));
  }
  return run;
}

Run load_run(const std::string& path, std::size_t depth_limit) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run file: " + path);
  try {
    return parse_run(in, depth_limit);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Qrels parse_qrels(std::istream& in, int max_grade) {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() != 4) {
      throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), line_no);
    }
    auto grade = parse_integer(fields[3]);
    if (!grade) throw ParseError("grade is not an integer: '" + std::string(fields[3]) + "'", line_no);
    if (*grade < 0 || *grade > max_grade) {
      throw ParseError("grade " + std::to_string(*grade) + " outside [0, " +
                           std::to_string(max_grade) + "]",
                       line_no);
    }
    try {
      qrels.add(TopicId(fields[0]), DocId(std::string(fields[2])), static_cast<int>(*grade));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (qrels.size() == 0) throw ParseError("qrels are empty");
  return qrels;
}

Qrels load_qrels(const std::string& path, int max_grade) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open qrels file: " + path);
  try {
    return parse_qrels(in, max_grade);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Run canonicalize_run(Run run) {
  for (auto& [topic, list] : run.topics) {
    list = RankedList::from_unsorted(list.entries());
  }
  return run;
}

void write_run(const Run& run, std::ostream& out) {
  for (const auto& [topic, list] : run.topics) {
    std::size_t rank = 1;
    for (const auto& e : list) {
      out << topic << " Q0 " << e.doc.str() << ' ' << rank++ << ' ' << format_double(e.score)
          << ' ' << run.tag << '\n';
    }
  }
}

void save_run(const Run& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write run file: " + path);
  write_run(run, out);
}

}  // namespace bibfusion
