#include "bibfusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace bibfusion {

namespace {

struct JudgedCounts {
  std::size_t relevant = 0;
  std::size_t nonrelevant = 0;
};

JudgedCounts count_judged(const TopicJudgments& judged) {
  JudgedCounts c;
  for (const auto& [doc, grade] : judged) {
    (binary_relevant(grade) ? c.relevant : c.nonrelevant) += 1;
  }
  return c;
}

std::optional<int> lookup(const TopicJudgments& judged, const DocId& doc) {
  auto it = judged.find(doc);
  if (it == judged.end()) return std::nullopt;
  return it->second;
}

double gain_of(int grade, Gain gain) {
  if (grade <= 0) return 0.0;
  return gain == Gain::Linear ? static_cast<double>(grade) : std::exp2(grade) - 1.0;
}

std::size_t depth_of(const RankedList& list, std::size_t cutoff) {
  return std::min(list.size(), cutoff);
}

}  // namespace

void MetricSpec::validate() const {
  if (cutoff == 0) throw std::invalid_argument("metric cutoff must be >= 1");
  if (kind == MetricKind::RBP && !(rbp_p > 0.0 && rbp_p < 1.0)) {
    throw std::invalid_argument("RBP persistence must lie in (0, 1)");
  }
}

std::string MetricSpec::name() const {
  switch (kind) {
    case MetricKind::Recall: return "recall";
    case MetricKind::Precision: return "P";
    case MetricKind::AP: return "AP";
    case MetricKind::NDCG: return gain == Gain::Linear ? "nDCG" : "nDCG_exp";
    case MetricKind::Bpref: return "bpref";
    case MetricKind::RBP: return "RBP(" + format_double(rbp_p) + ")";
  }
  return "?";
}

std::string MetricSpec::label() const { return name() + "@" + std::to_string(cutoff); }

std::vector<MetricSpec> standard_battery(Gain gain) {
  return {MetricSpec::recall(), MetricSpec::ndcg(1000, gain), MetricSpec::ap(),
          MetricSpec::precision(), MetricSpec::bpref()};
}

namespace {

MetricSpec parse_metric_parts(std::string_view name, std::size_t cutoff) {
  MetricSpec spec;
  spec.cutoff = cutoff;
  if (name == "recall") {
    spec.kind = MetricKind::Recall;
  } else if (name == "P" || name == "precision") {
    spec.kind = MetricKind::Precision;
  } else if (name == "AP" || name == "map") {
    spec.kind = MetricKind::AP;
  } else if (name == "nDCG" || name == "ndcg") {
    spec.kind = MetricKind::NDCG;
  } else if (name == "nDCG_exp" || name == "ndcg_exp") {
    spec.kind = MetricKind::NDCG;
    spec.gain = Gain::Exponential;
  } else if (name == "bpref") {
    spec.kind = MetricKind::Bpref;
  } else if (name.size() > 5 && (name.substr(0, 4) == "RBP(" || name.substr(0, 4) == "rbp(") &&
             name.back() == ')') {
    spec.kind = MetricKind::RBP;
    auto p = parse_double(name.substr(4, name.size() - 5));
    if (!p) throw std::invalid_argument("bad RBP persistence in '" + std::string(name) + "'");
    spec.rbp_p = *p;
  } else {
    throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
  }
  spec.validate();
  return spec;
}

std::size_t parse_cutoff(std::string_view text) {
  auto v = parse_double(text);
  if (!v || *v < 1 || std::floor(*v) != *v) {
    throw std::invalid_argument("bad metric cutoff '" + std::string(text) + "'");
  }
  return static_cast<std::size_t>(*v);
}

}  // namespace

MetricSpec parse_metric(std::string_view label) {
  auto at = label.rfind('@');
  if (at == std::string_view::npos) {
    auto name = label;
    std::size_t cutoff = (name == "P" || name == "precision") ? 10 : 1000;
    return parse_metric_parts(name, cutoff);
  }
  return parse_metric_parts(label.substr(0, at), parse_cutoff(label.substr(at + 1)));
}

std::optional<double> recall_at(const RankedList& list, const TopicJudgments& judged,
                                std::size_t cutoff) {
  auto counts = count_judged(judged);
  if (counts.relevant == 0) return std::nullopt;
  std::size_t found = 0;
  for (std::size_t i = 0; i < depth_of(list, cutoff); ++i) {
    auto g = lookup(judged, list[i].doc);
    if (g && binary_relevant(*g)) ++found;
  }
  return static_cast<double>(found) / static_cast<double>(counts.relevant);
}

std::optional<double> precision_at(const RankedList& list, const TopicJudgments& judged,
                                   std::size_t cutoff) {
  std::size_t found = 0;
  for (std::size_t i = 0; i < depth_of(list, cutoff); ++i) {
    auto g = lookup(judged, list[i].doc);
    if (g && binary_relevant(*g)) ++found;
  }
  return static_cast<double>(found) / static_cast<double>(cutoff);
}

std::optional<double> average_precision(const RankedList& list, const TopicJudgments& judged,
                                        std::size_t cutoff) {
  auto counts = count_judged(judged);
  if (counts.relevant == 0) return std::nullopt;
  double sum = 0.0;
  std::size_t found = 0;
  for (std::size_t i = 0; i < depth_of(list, cutoff); ++i) {
    auto g = lookup(judged, list[i].doc);
    if (g && binary_relevant(*g)) {
      ++found;
      sum += static_cast<double>(found) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(counts.relevant);
}

std::optional<double> ndcg(const RankedList& list, const TopicJudgments& judged,
                           std::size_t cutoff, Gain gain) {
  std::vector<int> grades;
  grades.reserve(judged.size());
  for (const auto& [doc, grade] : judged) {
    if (grade > 0) grades.push_back(grade);
  }
  if (grades.empty()) return std::nullopt;
  std::sort(grades.begin(), grades.end(), std::greater<>());

  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(grades.size(), cutoff); ++i) {
    ideal += gain_of(grades[i], gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  double dcg = 0.0;
  for (std::size_t i = 0; i < depth_of(list, cutoff); ++i) {
    auto g = lookup(judged, list[i].doc);
    if (g) dcg += gain_of(*g, gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / ideal;
}

std::optional<double> bpref(const RankedList& list, const TopicJudgments& judged,
                            std::size_t cutoff) {
  auto counts = count_judged(judged);
  if (counts.relevant == 0 || counts.nonrelevant == 0) return std::nullopt;
  const double denom = static_cast<double>(std::min(counts.relevant, counts.nonrelevant));
  std::size_t nonrel_above = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < depth_of(list, cutoff); ++i) {
    auto g = lookup(judged, list[i].doc);
    if (!g) continue;
    if (binary_relevant(*g)) {
      sum += 1.0 - std::min(static_cast<double>(nonrel_above), denom) / denom;
    } else {
      ++nonrel_above;
    }
  }
  return sum / static_cast<double>(counts.relevant);
}

std::optional<double> rbp(const RankedList& list, const TopicJudgments& judged, double p,
                          std::size_t depth) {
  double sum = 0.0;
  double weight = 1.0;
  for (std::size_t i = 0; i < depth_of(list, depth); ++i) {
    auto g = lookup(judged, list[i].doc);
    if (g && binary_relevant(*g)) sum += weight;
    weight *= p;
  }
  return (1.0 - p) * sum;
}

std::optional<double> compute_metric(const MetricSpec& spec, const RankedList& list,
                                     const TopicJudgments& judged) {
  switch (spec.kind) {
    case MetricKind::Recall: return recall_at(list, judged, spec.cutoff);
    case MetricKind::Precision: return precision_at(list, judged, spec.cutoff);
    case MetricKind::AP: return average_precision(list, judged, spec.cutoff);
    case MetricKind::NDCG: return ndcg(list, judged, spec.cutoff, spec.gain);
    case MetricKind::Bpref: return bpref(list, judged, spec.cutoff);
    case MetricKind::RBP: return rbp(list, judged, spec.rbp_p, spec.cutoff);
  }
  return std::nullopt;
}

std::optional<std::size_t> EvalReport::index_of(const MetricSpec& spec) const {
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i] == spec) return i;
  }
  return std::nullopt;
}

std::optional<double> EvalReport::mean(const MetricSpec& spec) const {
  auto idx = index_of(spec);
  if (!idx) return std::nullopt;
  return aggregate[*idx];
}

EvalReport evaluate_run(const Run& run, const Qrels& qrels, const std::vector<MetricSpec>& specs) {
  for (const auto& s : specs) s.validate();
  EvalReport report;
  report.run_tag = run.tag;
  report.specs = specs;
  for (const auto& [topic, list] : run.topics) {
    if (qrels.topic(topic) == nullptr) report.skipped_topics.push_back(topic);
  }

  const RankedList empty;
  std::vector<double> sums(specs.size(), 0.0);
  std::vector<std::size_t> counts(specs.size(), 0);
  for (const auto& [topic, judged] : qrels.topics()) {
    if (count_judged(judged).relevant == 0) continue;
    auto it = run.topics.find(topic);
    const RankedList& list = it == run.topics.end() ? empty : it->second;
    auto& row = report.per_topic[topic];
    row.reserve(specs.size());
    for (std::size_t m = 0; m < specs.size(); ++m) {
      auto v = compute_metric(specs[m], list, judged);
      row.push_back(v);
      if (v) {
        sums[m] += *v;
        ++counts[m];
      }
    }
  }
  for (std::size_t m = 0; m < specs.size(); ++m) {
    report.aggregate.push_back(counts[m] == 0 ? std::nullopt
                                              : std::optional(sums[m] / static_cast<double>(counts[m])));
  }
  return report;
}

void write_eval_csv(const std::vector<EvalReport>& reports, std::ostream& out, bool header) {
  if (header) out << "run_tag,topic,metric,cutoff,value\n";
  for (const auto& r : reports) {
    for (const auto& [topic, row] : r.per_topic) {
      for (std::size_t m = 0; m < r.specs.size(); ++m) {
        if (!row[m]) continue;
        out << r.run_tag << ',' << topic << ',' << r.specs[m].name() << ',' << r.specs[m].cutoff
            << ',' << format_double(*row[m]) << '\n';
      }
    }
    for (std::size_t m = 0; m < r.specs.size(); ++m) {
      if (!r.aggregate[m]) continue;
      out << r.run_tag << ",ALL," << r.specs[m].name() << ',' << r.specs[m].cutoff << ','
          << format_double(*r.aggregate[m]) << '\n';
    }
  }
}

std::vector<EvalReport> read_eval_csv(std::istream& in) {
  std::vector<EvalReport> reports;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("run_tag,", 0) == 0) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 5) throw ParseError("expected 5 CSV fields", line_no);
    auto value = parse_double(cells[4]);
    if (!value) throw ParseError("bad value '" + cells[4] + "'", line_no);
    MetricSpec spec;
    try {
      spec = parse_metric(cells[2] + "@" + cells[3]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }

    if (reports.empty() || reports.back().run_tag != cells[0]) {
      for (const auto& r : reports) {
        if (r.run_tag == cells[0]) throw ParseError("rows for run " + cells[0] + " are not contiguous", line_no);
      }
      reports.emplace_back();
      reports.back().run_tag = cells[0];
    }
    auto& report = reports.back();
    auto idx = report.index_of(spec);
    if (!idx) {
      report.specs.push_back(spec);
      report.aggregate.push_back(std::nullopt);
      for (auto& [topic, row] : report.per_topic) row.push_back(std::nullopt);
      idx = report.specs.size() - 1;
    }
    if (cells[1] == "ALL") {
      report.aggregate[*idx] = *value;
    } else {
      auto& row = report.per_topic[cells[1]];
      row.resize(report.specs.size());
      row[*idx] = *value;
    }
  }
  return reports;
}

}  // namespace bibfusion
