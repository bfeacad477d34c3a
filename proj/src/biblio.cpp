#include "bibfusion/biblio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>

namespace bibfusion {

namespace {

constexpr std::array<char, 5> kLetters = {'C', 'A', 'P', 'R', 'I'};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Integral columns often arrive as "12.0" from tabular exports.
std::optional<std::int64_t> as_integral(double v) {
  if (std::floor(v) != v || std::fabs(v) > 9.0e15) return std::nullopt;
  return static_cast<std::int64_t>(v);
}

}  // namespace

char signal_letter(Signal s) noexcept { return kLetters[static_cast<std::size_t>(s)]; }

std::string signal_name(Signal s) {
  switch (s) {
    case Signal::Citations: return "citations";
    case Signal::Altmetric: return "altmetric";
    case Signal::PubYear: return "pub_year";
    case Signal::ResearchLevel: return "research_level";
    case Signal::ImpactFactor: return "impact_factor";
  }
  return "?";
}

Signal signal_from_letter(char c) {
  char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (std::size_t i = 0; i < kLetters.size(); ++i) {
    if (kLetters[i] == upper) return static_cast<Signal>(i);
  }
  throw std::invalid_argument(std::string("unknown signal '") + c + "', expected one of CAPRI");
}

SignalSet::SignalSet(std::initializer_list<Signal> signals) {
  for (auto s : signals) insert(s);
}

SignalSet SignalSet::parse(std::string_view label) {
  label = trim(label);
  SignalSet set;
  if (label.empty() || label == "none" || label == "-") return set;
  for (char c : label) set.insert(signal_from_letter(c));
  return set;
}

std::vector<SignalSet> SignalSet::all_nonempty() {
  std::vector<SignalSet> subsets;
  for (unsigned mask = 1; mask < 32; ++mask) {
    SignalSet s;
    s.bits_ = static_cast<std::uint8_t>(mask);
    subsets.push_back(s);
  }
  std::stable_sort(subsets.begin(), subsets.end(), [](const SignalSet& a, const SignalSet& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    // Lower bits first puts C before A before P ...
    for (int i = 0; i < 5; ++i) {
      bool ai = (a.bits_ >> i) & 1u, bi = (b.bits_ >> i) & 1u;
      if (ai != bi) return ai;
    }
    return false;
  });
  return subsets;
}

std::size_t SignalSet::size() const noexcept {
  std::size_t n = 0;
  for (auto s : kAllSignals) n += contains(s) ? 1 : 0;
  return n;
}

std::vector<Signal> SignalSet::members() const {
  std::vector<Signal> out;
  for (auto s : kAllSignals) {
    if (contains(s)) out.push_back(s);
  }
  return out;
}

std::string SignalSet::label() const {
  std::string out;
  for (auto s : members()) out.push_back(signal_letter(s));
  return out;
}

std::optional<double> BiblioRecord::value(Signal s) const {
  switch (s) {
    case Signal::Citations:
      if (citations) return static_cast<double>(*citations);
      return std::nullopt;
    case Signal::Altmetric: return altmetric;
    case Signal::PubYear:
      if (pub_year) return static_cast<double>(*pub_year);
      return std::nullopt;
    case Signal::ResearchLevel:
      if (research_level) return static_cast<double>(*research_level);
      return std::nullopt;
    case Signal::ImpactFactor: return impact_factor;
  }
  return std::nullopt;
}

bool BiblioRecord::has_any_signal() const {
  return std::any_of(kAllSignals.begin(), kAllSignals.end(),
                     [this](Signal s) { return value(s).has_value(); });
}

std::string& ColumnMap::column(Signal s) {
  return const_cast<std::string&>(std::as_const(*this).column(s));
}

const std::string& ColumnMap::column(Signal s) const {
  switch (s) {
    case Signal::Citations: return citations;
    case Signal::Altmetric: return altmetric;
    case Signal::PubYear: return pub_year;
    case Signal::ResearchLevel: return research_level;
    case Signal::ImpactFactor: return impact_factor;
  }
  return citations;
}

void BiblioTable::add(BiblioRecord record) {
  if (!record.has_any_signal()) {
    throw std::invalid_argument("record for " + record.doc.str() + " carries no signal");
  }
  if (record.research_level && (*record.research_level < 1 || *record.research_level > 4)) {
    throw std::invalid_argument("research level outside 1..4 for " + record.doc.str());
  }
  DocId key = record.doc;
  auto [it, inserted] = records_.emplace(std::move(key), std::move(record));
  if (!inserted) throw std::invalid_argument("duplicate record for " + it->first.str());
}

const BiblioRecord* BiblioTable::find(const DocId& doc) const {
  auto it = records_.find(doc);
  return it == records_.end() ? nullptr : &it->second;
}

std::size_t BiblioTable::coverage(Signal s, const std::set<DocId>& docs) const {
  std::size_t n = 0;
  for (const auto& d : docs) {
    const auto* rec = find(d);
    if (rec != nullptr && rec->value(s)) ++n;
  }
  return n;
}

std::vector<std::string> split_delimited(std::string_view line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

BiblioTable load_biblio_table(std::istream& in, const ColumnMap& columns,
                              const TableDialect& dialect, LoadStats* stats) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_delimited(line, dialect.delimiter);
      break;
    }
  }
  if (header.empty()) throw ParseError("bibliometric table has no header row");
  for (auto& h : header) h = std::string(trim(h));

  auto locate = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  auto doc_col = locate(columns.doc);
  if (columns.doc.empty() || !doc_col) {
    throw ParseError("document id column '" + columns.doc + "' not found in header", line_no);
  }
  std::array<std::optional<std::size_t>, 5> signal_cols;
  for (auto s : kAllSignals) {
    const auto& name = columns.column(s);
    if (name.empty()) continue;
    signal_cols[static_cast<std::size_t>(s)] = locate(name);
    if (!signal_cols[static_cast<std::size_t>(s)]) {
      throw ParseError("column '" + name + "' for " + signal_name(s) + " not found in header",
                       line_no);
    }
  }

  BiblioTable table;
  LoadStats local;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++local.rows;
    auto cells = split_delimited(line, dialect.delimiter);
    auto cell = [&](std::size_t col) -> std::string_view {
      return col < cells.size() ? trim(cells[col]) : std::string_view{};
    };

    std::string_view doc_text = cell(*doc_col);
    if (doc_text.empty()) throw ParseError("empty document id", line_no);
    BiblioRecord rec{DocId(std::string(doc_text)), {}, {}, {}, {}, {}};

    for (auto s : kAllSignals) {
      const auto& col = signal_cols[static_cast<std::size_t>(s)];
      if (!col) continue;
      std::string_view text = cell(*col);
      if (text.empty() || dialect.missing_tokens.count(std::string(text)) > 0) continue;
      auto bad = [&](const std::string& why) {
        return ParseError(signal_name(s) + " cell '" + std::string(text) + "' " + why, line_no);
      };
      auto v = parse_double(text);
      if (!v) throw bad("is not a number");
      switch (s) {
        case Signal::Citations: {
          auto n = as_integral(*v);
          if (!n || *n < 0) throw bad("is not a non-negative integer");
          rec.citations = *n;
          break;
        }
        case Signal::Altmetric:
          if (*v < 0) throw bad("is negative");
          rec.altmetric = *v;
          break;
        case Signal::PubYear: {
          auto n = as_integral(*v);
          if (!n) throw bad("is not an integer year");
          rec.pub_year = static_cast<int>(*n);
          break;
        }
        case Signal::ResearchLevel: {
          auto n = as_integral(*v);
          if (!n || *n < 1 || *n > 4) throw bad("is not a research level in 1..4");
          rec.research_level = static_cast<int>(*n);
          break;
        }
        case Signal::ImpactFactor:
          if (*v < 0) throw bad("is negative");
          rec.impact_factor = *v;
          break;
      }
    }

    if (!rec.has_any_signal()) {
      if (dialect.strict) throw ParseError("row carries no bibliometric value", line_no);
      ++local.rejected_empty;
      continue;
    }
    try {
      table.add(std::move(rec));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
    ++local.loaded;
  }
  if (stats != nullptr) *stats = local;
  return table;
}

BiblioTable load_biblio_table(const std::string& path, const ColumnMap& columns,
                              const TableDialect& dialect, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bibliometric table: " + path);
  try {
    return load_biblio_table(in, columns, dialect, stats);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

RankedList signal_ranking(Signal signal, const std::set<DocId>& candidates,
                          const BiblioTable& table) {
  if (candidates.empty()) throw std::invalid_argument("empty candidate set");
  std::vector<ScoredDoc> entries;
  for (const auto& doc : candidates) {
    const auto* rec = table.find(doc);
    if (rec == nullptr) continue;
    if (auto v = rec->value(signal)) entries.push_back({doc, *v});
  }
  return RankedList::from_unsorted(std::move(entries));
}

PoolPolicy parse_pool_policy(std::string_view text) {
  if (text == "judged") return PoolPolicy::Judged;
  if (text == "run") return PoolPolicy::Run;
  throw std::invalid_argument("unknown pool policy '" + std::string(text) + "', expected judged|run");
}

std::set<DocId> candidate_pool(PoolPolicy policy, const TopicId& topic, const Qrels& qrels,
                               const Run* base_run) {
  std::set<DocId> pool;
  if (policy == PoolPolicy::Judged) {
    const auto* judged = qrels.topic(topic);
    if (judged == nullptr) throw std::invalid_argument("topic " + topic + " has no judgments");
    for (const auto& [doc, grade] : *judged) pool.insert(doc);
    return pool;
  }
  if (base_run == nullptr) throw std::invalid_argument("run pool requires a baseline run");
  auto it = base_run->topics.find(topic);
  if (it == base_run->topics.end()) {
    throw std::invalid_argument("topic " + topic + " absent from run " + base_run->tag);
  }
  for (const auto& e : it->second) pool.insert(e.doc);
  return pool;
}

std::set<DocId> judged_documents(const Qrels& qrels) {
  std::set<DocId> docs;
  for (const auto& [topic, judged] : qrels.topics()) {
    for (const auto& [doc, grade] : judged) docs.insert(doc);
  }
  return docs;
}

}  // namespace bibfusion
