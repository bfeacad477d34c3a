#pragma once

// Shared fixtures and independent reference implementations for the tests.
// The oracles work on plain strings and recompute everything from the
// textbook definitions; they share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bibfusion/fusion.hpp"
#include "bibfusion/trec_io.hpp"

namespace testsupport {

using bibfusion::DocId;
using bibfusion::RankedList;
using bibfusion::ScoredDoc;

inline RankedList scored(const std::vector<std::pair<std::string, double>>& entries) {
  std::vector<ScoredDoc> v;
  for (const auto& [d, s] : entries) v.push_back({DocId(d), s});
  return RankedList::from_unsorted(std::move(v));
}

/// A list in exactly the given order (scores n, n-1, ..., 1).
inline RankedList ordered(const std::vector<std::string>& docs) {
  std::vector<ScoredDoc> v;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    v.push_back({DocId(docs[i]), static_cast<double>(docs.size() - i)});
  }
  return RankedList::from_unsorted(std::move(v));
}

inline std::vector<std::string> doc_names(const RankedList& list) {
  std::vector<std::string> out;
  for (const auto& e : list) out.push_back(e.doc.str());
  return out;
}

inline bibfusion::TopicJudgments judgments(const std::map<std::string, int>& grades) {
  bibfusion::TopicJudgments j;
  for (const auto& [d, g] : grades) j.emplace(DocId(d), g);
  return j;
}

inline std::string doc_name(std::size_t i) {
  std::string s = "d" + std::to_string(i);
  return s;
}

// -- metric oracles -----------------------------------------------------------

namespace oracle {

using Ranking = std::vector<std::string>;
using Grades = std::map<std::string, int>;

inline int grade_of(const Grades& g, const std::string& d) {
  auto it = g.find(d);
  return it == g.end() ? -1 : it->second;  // -1: unjudged
}

inline std::size_t total_relevant(const Grades& g) {
  std::size_t r = 0;
  for (const auto& [d, v] : g) r += v >= 1;
  return r;
}

inline Ranking top(const Ranking& r, std::size_t k) {
  return Ranking(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(std::min(k, r.size())));
}

inline double recall(const Ranking& r, const Grades& g, std::size_t k) {
  std::set<std::string> rel, hit;
  for (const auto& [d, v] : g) {
    if (v >= 1) rel.insert(d);
  }
  for (const auto& d : top(r, k)) {
    if (rel.count(d)) hit.insert(d);
  }
  return static_cast<double>(hit.size()) / static_cast<double>(rel.size());
}

inline double precision(const Ranking& r, const Grades& g, std::size_t k) {
  double hits = 0;
  for (const auto& d : top(r, k)) hits += grade_of(g, d) >= 1;
  return hits / static_cast<double>(k);
}

inline double ap(const Ranking& r, const Grades& g, std::size_t k) {
  auto t = top(r, k);
  double sum = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (grade_of(g, t[i]) < 1) continue;
    sum += precision(t, g, i + 1);
  }
  return sum / static_cast<double>(total_relevant(g));
}

inline double dcg_of(const std::vector<int>& grades, std::size_t k, bool exponential) {
  double s = 0;
  for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
    if (grades[i] <= 0) continue;
    double gain = exponential ? std::pow(2.0, grades[i]) - 1.0 : grades[i];
    s += gain / (std::log(static_cast<double>(i) + 2.0) / std::log(2.0));
  }
  return s;
}

inline double ndcg(const Ranking& r, const Grades& g, std::size_t k, bool exponential = false) {
  std::vector<int> got;
  for (const auto& d : r) got.push_back(std::max(0, grade_of(g, d)));
  std::vector<int> ideal;
  for (const auto& [d, v] : g) ideal.push_back(v);
  std::sort(ideal.rbegin(), ideal.rend());
  return dcg_of(got, k, exponential) / dcg_of(ideal, k, exponential);
}

inline double bpref(const Ranking& r, const Grades& g, std::size_t k) {
  double R = 0, N = 0;
  for (const auto& [d, v] : g) (v >= 1 ? R : N) += 1;
  double m = std::min(R, N);
  auto t = top(r, k);
  double sum = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (grade_of(g, t[i]) < 1) continue;
    double above = 0;
    for (std::size_t j = 0; j < i; ++j) above += grade_of(g, t[j]) == 0;
    sum += 1.0 - std::min(above, m) / m;
  }
  return sum / R;
}

inline double rbp(const Ranking& r, const Grades& g, double p, std::size_t depth) {
  double s = 0;
  for (std::size_t i = 0; i < std::min(depth, r.size()); ++i) {
    if (grade_of(g, r[i]) >= 1) s += (1 - p) * std::pow(p, static_cast<double>(i));
  }
  return s;
}

// -- fusion oracles -------------------------------------------------------------

using Lists = std::vector<Ranking>;

inline std::set<std::string> universe(const Lists& lists) {
  std::set<std::string> u;
  for (const auto& l : lists) u.insert(l.begin(), l.end());
  return u;
}

/// 1-based rank of d in l, 0 when absent.
inline std::size_t rank_in(const Ranking& l, const std::string& d) {
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l[i] == d) return i + 1;
  }
  return 0;
}

inline std::map<std::string, double> rrf(const Lists& lists, double k) {
  std::map<std::string, double> s;
  for (const auto& d : universe(lists)) {
    std::vector<double> parts;
    for (const auto& l : lists) {
      if (auto r = rank_in(l, d)) parts.push_back(1.0 / (k + static_cast<double>(r)));
    }
    double total = 0;
    for (double p : parts) total += p;
    s[d] = total;
  }
  return s;
}

inline std::map<std::string, double> borda(const Lists& lists) {
  auto u = universe(lists);
  double n = static_cast<double>(u.size());
  std::map<std::string, double> s;
  for (const auto& d : u) {
    for (const auto& l : lists) {
      auto r = rank_in(l, d);
      s[d] += r ? n - static_cast<double>(r) + 1 : (n - static_cast<double>(l.size()) + 1) / 2;
    }
  }
  return s;
}

inline std::map<std::string, double> bayes(const Lists& lists, const bibfusion::BayesModel& m) {
  std::map<std::string, double> s;
  for (const auto& d : universe(lists)) {
    for (const auto& l : lists) {
      auto r = rank_in(l, d);
      double v = m.unranked_llr;
      if (r) {
        for (std::size_t b = 0; b < m.bins.upper_bounds.size(); ++b) {
          if (r <= m.bins.upper_bounds[b]) {
            v = m.log_likelihood_ratio[b];
            break;
          }
        }
      }
      s[d] += v;
    }
  }
  return s;
}

/// Score lists given as (doc -> score) maps.
using ScoreMaps = std::vector<std::map<std::string, double>>;

inline std::map<std::string, double> wmnz(const ScoreMaps& lists, const std::vector<double>& w) {
  std::map<std::string, double> s;
  std::set<std::string> u;
  for (const auto& l : lists) {
    for (const auto& [d, v] : l) u.insert(d);
  }
  for (const auto& d : u) {
    double sum = 0, wsum = 0;
    for (std::size_t i = 0; i < lists.size(); ++i) {
      auto it = lists[i].find(d);
      if (it == lists[i].end()) continue;
      sum += w[i] * it->second;
      if (it->second > 0) wsum += w[i];
    }
    s[d] = sum * wsum;
  }
  return s;
}

/// Order implied by the scores: descending score, then ascending id.
inline Ranking order_of(const std::map<std::string, double>& scores) {
  std::vector<std::pair<std::string, double>> v(scores.begin(), scores.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Ranking r;
  for (const auto& [d, s] : v) r.push_back(d);
  return r;
}

}  // namespace oracle

// -- random instances -------------------------------------------------------------

inline oracle::Ranking random_ranking(std::mt19937_64& rng, const std::vector<std::string>& pool,
                                      std::size_t n) {
  auto docs = pool;
  std::shuffle(docs.begin(), docs.end(), rng);
  docs.resize(std::min(n, docs.size()));
  return docs;
}

inline std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace testsupport
