#include "bibfusion/experiment.hpp"

#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace bibfusion {

namespace fs = std::filesystem;

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

Run read_run_file(const fs::path& path, std::size_t depth) {
  if (path.extension() != ".gz") return load_run(path.string(), depth);
  gzFile gz = gzopen(path.string().c_str(), "rb");
  if (gz == nullptr) throw std::runtime_error("cannot open run file: " + path.string());
  std::string text;
  char buf[1 << 16];
  int got = 0;
  while ((got = gzread(gz, buf, sizeof(buf))) > 0) text.append(buf, static_cast<std::size_t>(got));
  bool failed = got < 0;
  gzclose(gz);
  if (failed) throw std::runtime_error("corrupt gzip run file: " + path.string());
  std::istringstream in(text);
  try {
    return parse_run(in, depth);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<fs::path> list_run_files(const fs::path& dir, const std::string& manifest,
                                     std::ostream& log) {
  if (!fs::is_directory(dir)) throw std::runtime_error("runs directory not found: " + dir.string());
  std::vector<fs::path> files;
  if (manifest.empty()) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
  }
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest);
  std::string line;
  while (std::getline(in, line)) {
    auto fields = split_whitespace(line);
    if (fields.empty() || fields.front().front() == '#') continue;
    fs::path p = dir / std::string(fields.front());
    if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      log << "warning: run listed in manifest is missing: " << p.string() << '\n';
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

// -- coverage ---------------------------------------------------------------

std::vector<CoverageRow> coverage_table(const std::string& year, const Qrels& qrels,
                                        const BiblioTable& table) {
  auto judged = judged_documents(qrels);
  std::vector<CoverageRow> rows;
  for (auto s : kAllSignals) {
    CoverageRow row{year, s, table.coverage(s, judged), judged.size(), 0.0};
    if (row.total > 0) row.fraction = static_cast<double>(row.count) / static_cast<double>(row.total);
    rows.push_back(row);
  }
  return rows;
}

void write_coverage_csv(const std::vector<CoverageRow>& rows, std::ostream& out) {
  out << "year,signal,count,fraction\n";
  for (const auto& r : rows) {
    out << r.year << ',' << signal_letter(r.signal) << ',' << r.count << ','
        << format_double(r.fraction) << '\n';
  }
}

// -- bibliometric rankings ----------------------------------------------------

namespace {

std::vector<TopicId> pool_topics(PoolPolicy policy, const Qrels& qrels, const Run* base_run) {
  std::vector<TopicId> topics;
  if (policy == PoolPolicy::Judged) {
    for (const auto& [topic, judged] : qrels.topics()) topics.push_back(topic);
  } else {
    if (base_run == nullptr) throw std::invalid_argument("run pool requires a baseline run");
    for (const auto& [topic, list] : base_run->topics) topics.push_back(topic);
  }
  return topics;
}

}  // namespace

Run signal_run(Signal signal, PoolPolicy policy, const Qrels& qrels, const BiblioTable& table,
               const Run* base_run) {
  Run run;
  run.tag = std::string(1, signal_letter(signal));
  for (const auto& topic : pool_topics(policy, qrels, base_run)) {
    auto candidates = candidate_pool(policy, topic, qrels, base_run);
    if (candidates.empty()) continue;
    run.topics.emplace(topic, signal_ranking(signal, candidates, table));
  }
  return run;
}

Run subset_run(const SignalSet& subset, const FusionMethod& method, PoolPolicy policy,
               const Qrels& qrels, const BiblioTable& table, const Run* base_run,
               std::size_t depth) {
  if (subset.empty()) throw std::invalid_argument("signal subset is empty");
  Run run;
  run.tag = subset.label();
  const auto members = subset.members();
  for (const auto& topic : pool_topics(policy, qrels, base_run)) {
    auto candidates = candidate_pool(policy, topic, qrels, base_run);
    if (candidates.empty()) continue;
    std::vector<RankedList> lists;
    for (auto s : members) lists.push_back(signal_ranking(s, candidates, table));
    auto fused = fuse(method, FusionInput(std::move(lists)));
    fused.truncate(depth);
    run.topics.emplace(topic, std::move(fused));
  }
  return run;
}

std::vector<EvalReport> signal_eval(PoolPolicy policy, const Qrels& qrels,
                                    const BiblioTable& table, const std::vector<MetricSpec>& specs,
                                    const Run* base_run) {
  std::vector<EvalReport> reports;
  for (auto s : kAllSignals) {
    reports.push_back(evaluate_run(signal_run(s, policy, qrels, table, base_run), qrels, specs));
  }
  return reports;
}

void write_signal_eval_csv(const std::string& year, const std::vector<EvalReport>& reports,
                           std::ostream& out) {
  out << "year,signal,metric,cutoff,value\n";
  for (const auto& r : reports) {
    for (std::size_t m = 0; m < r.specs.size(); ++m) {
      if (!r.aggregate[m]) continue;
      out << year << ',' << r.run_tag << ',' << r.specs[m].name() << ',' << r.specs[m].cutoff
          << ',' << format_double(*r.aggregate[m]) << '\n';
    }
  }
}

SweepResult sweep(const FusionMethod& method, PoolPolicy policy, const Qrels& qrels,
                  const BiblioTable& table, const std::vector<MetricSpec>& specs,
                  const Run* base_run, std::size_t depth, std::size_t threads) {
  const auto subsets = SignalSet::all_nonempty();
  SweepResult result(subsets.size());
  parallel_for(subsets.size(), threads, [&](std::size_t i) {
    auto run = subset_run(subsets[i], method, policy, qrels, table, base_run, depth);
    result[i] = {subsets[i].label(), evaluate_run(run, qrels, specs)};
  });
  return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "subset,metric,value\n";
  for (const auto& [label, report] : result) {
    for (std::size_t m = 0; m < report.specs.size(); ++m) {
      if (!report.aggregate[m]) continue;
      out << label << ',' << report.specs[m].label() << ',' << format_double(*report.aggregate[m])
          << '\n';
    }
  }
}

// -- fusion of system runs ----------------------------------------------------

Run fuse_with_signals(const Run& baseline, const SignalSet& subset, const FusionMethod& method,
                      const BiblioTable& table, std::size_t depth, const std::string& tag_suffix) {
  Run fused;
  fused.tag = baseline.tag + tag_suffix;
  if (subset.empty()) {
    fused.topics = baseline.topics;
    return fused;
  }
  const auto members = subset.members();
  for (const auto& [topic, list] : baseline.topics) {
    std::set<DocId> candidates;
    for (const auto& e : list) candidates.insert(e.doc);
    std::vector<RankedList> lists{list};
    if (!candidates.empty()) {
      for (auto s : members) lists.push_back(signal_ranking(s, candidates, table));
    }
    auto out = fuse(method, FusionInput(std::move(lists)));
    out.truncate(depth);
    fused.topics.emplace(topic, std::move(out));
  }
  return fused;
}

namespace {

FuseYearResult finish_fuse_year(std::vector<std::optional<SystemResult>> slots,
                                const FuseYearOptions& options, std::ostream& log) {
  FuseYearResult result;
  for (auto& s : slots) {
    if (s) result.systems.push_back(std::move(*s));
  }
  std::stable_sort(result.systems.begin(), result.systems.end(),
                   [](const SystemResult& a, const SystemResult& b) { return a.system < b.system; });
  std::map<std::string, std::size_t> seen;
  for (auto& sys : result.systems) {
    auto n = ++seen[sys.system];
    if (n == 1) continue;
    auto renamed = sys.system + "#" + std::to_string(n);
    log << "warning: duplicate run tag " << sys.system << ", renamed to " << renamed << '\n';
    sys.system = renamed;
    sys.baseline.run_tag = renamed;
    sys.fused.run_tag = renamed;
  }
  if (result.systems.empty()) throw std::runtime_error("no usable baseline runs");

  const auto& specs = options.specs;
  std::vector<std::vector<SystemOutcome>> outcomes(specs.size(),
                                                   std::vector<SystemOutcome>(result.systems.size()));
  parallel_for(specs.size() * result.systems.size(), options.threads, [&](std::size_t job) {
    std::size_t m = job / result.systems.size();
    std::size_t i = job % result.systems.size();
    const auto& sys = result.systems[i];
    auto pair = PairedScores::from_reports(sys.baseline, sys.fused, specs[m]);
    SystemOutcome o{sys.system, pair.mean_delta(), 1.0};
    if (options.significance && pair.size() >= 2) {
      o.p_value = fisher_randomization(pair, options.iterations, options.seed ^ stable_hash(sys.system));
    }
    outcomes[m][i] = std::move(o);
  });
  for (std::size_t m = 0; m < specs.size(); ++m) {
    result.metrics.push_back({specs[m], summarize_outcomes(outcomes[m], options.alpha), outcomes[m]});
  }
  return result;
}

}  // namespace

FuseYearResult fuse_year(std::size_t count, const std::function<Run(std::size_t)>& load,
                         const FusionMethod& method, const BiblioTable& table, const Qrels& qrels,
                         const FuseYearOptions& options, std::ostream& log) {
  if (count == 0) throw std::runtime_error("no baseline runs to fuse");
  if (options.specs.empty()) throw std::invalid_argument("no metrics configured");
  std::vector<std::optional<SystemResult>> slots(count);
  std::vector<std::string> warnings(count);
  const std::string suffix = "." + method_name(method) + "-" +
                             (options.subset.empty() ? std::string("none") : options.subset.label());
  parallel_for(count, options.threads, [&](std::size_t i) {
    Run baseline;
    try {
      baseline = load(i);
    } catch (const std::exception& e) {
      warnings[i] = std::string("warning: skipping run: ") + e.what();
      return;
    }
    auto fused = fuse_with_signals(baseline, options.subset, method, table, options.depth, suffix);
    if (options.on_fused) options.on_fused(fused, i);
    SystemResult r{baseline.tag, evaluate_run(baseline, qrels, options.specs),
                   evaluate_run(fused, qrels, options.specs)};
    r.fused.run_tag = baseline.tag;
    slots[i] = std::move(r);
  });
  for (const auto& w : warnings) {
    if (!w.empty()) log << w << '\n';
  }
  return finish_fuse_year(std::move(slots), options, log);
}

FuseYearResult fuse_year(const std::vector<Run>& baselines, const FusionMethod& method,
                         const BiblioTable& table, const Qrels& qrels,
                         const FuseYearOptions& options, std::ostream& log) {
  return fuse_year(
      baselines.size(), [&](std::size_t i) { return baselines[i]; }, method, table, qrels, options,
      log);
}

void write_deltas_csv(const std::string& year, const std::string& method,
                      const FuseYearResult& result, const SignalSet& subset, std::ostream& out) {
  out << "year,method,signals,system,metric,cutoff,baseline,fused,delta,p_value\n";
  const std::string label = subset.empty() ? "none" : subset.label();
  for (std::size_t i = 0; i < result.systems.size(); ++i) {
    const auto& sys = result.systems[i];
    for (const auto& ms : result.metrics) {
      auto b = sys.baseline.mean(ms.spec);
      auto f = sys.fused.mean(ms.spec);
      if (!b || !f) continue;
      out << year << ',' << method << ',' << label << ',' << sys.system << ',' << ms.spec.name()
          << ',' << ms.spec.cutoff << ',' << format_double(*b) << ',' << format_double(*f) << ','
          << format_double(*f - *b) << ',' << format_double(ms.outcomes[i].p_value) << '\n';
    }
  }
}

void write_summary_csv(const std::string& year, const std::string& method,
                       const FuseYearResult& result, std::ostream& out) {
  out << "year,method,metric,n_systems,n_improved,n_significant,avg_improvement,overall_change\n";
  for (const auto& ms : result.metrics) {
    const auto& s = ms.summary;
    out << year << ',' << method << ',' << ms.spec.label() << ',' << s.n_systems << ','
        << s.n_improved << ',' << s.n_significant << ',' << format_double(s.avg_improvement_significant)
        << ',' << format_double(s.overall_change) << '\n';
  }
}

// -- BayesFuse training ---------------------------------------------------------

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  k = std::min(k, n);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates on raw engine output (modulo bias is negligible for
  // run counts and keeps the draw identical across standard libraries).
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

BayesModel train_bayes_from_years(const std::vector<TrainingYear>& years, std::size_t sample,
                                  std::uint64_t seed, const BinSpec& bins, std::size_t depth,
                                  int max_grade, std::ostream& log,
                                  std::vector<fs::path>* chosen) {
  if (years.empty()) throw std::invalid_argument("BayesFuse needs at least one training year");
  BayesCounts total;
  for (const auto& year : years) {
    auto qrels = load_qrels(year.qrels.string(), max_grade);
    auto files = list_run_files(year.runs_dir, "", log);
    if (files.empty()) throw std::runtime_error("no training runs in " + year.runs_dir.string());
    auto picks = sample_indices(files.size(), sample, seed ^ stable_hash(year.runs_dir.string()));
    std::vector<Run> runs;
    for (auto i : picks) {
      runs.push_back(read_run_file(files[i], depth));
      if (chosen != nullptr) chosen->push_back(files[i]);
    }
    total += count_bayes(runs, qrels, bins);
  }
  return bayes_model_from_counts(total, bins);
}

// -- curves and sweeps -----------------------------------------------------------

std::vector<CurveRow> ndcg_curves(const std::vector<EvalReport>& before,
                                  const std::vector<EvalReport>& after,
                                  const std::vector<double>& thresholds) {
  auto names = [](const std::vector<EvalReport>& reports) {
    std::set<std::string> s;
    for (const auto& r : reports) s.insert(r.run_tag);
    return s;
  };
  if (names(before) != names(after) || names(before).size() != before.size() ||
      names(after).size() != after.size()) {
    throw std::invalid_argument("baseline and fused reports cover different systems");
  }
  const std::vector<std::pair<std::string, MetricSpec>> measures = {
      {"nDCG@10", MetricSpec::ndcg(10)}, {"nDCG@1000", MetricSpec::ndcg(1000)}};
  std::vector<CurveRow> rows;
  for (const auto& [label, spec] : measures) {
    for (const auto& [phase, reports] :
         {std::pair<std::string, const std::vector<EvalReport>*>{"before", &before},
          std::pair<std::string, const std::vector<EvalReport>*>{"after", &after}}) {
      std::vector<double> values;
      for (const auto& r : *reports) {
        auto v = r.mean(spec);
        if (!v) throw std::invalid_argument("report " + r.run_tag + " lacks " + label);
        values.push_back(*v);
      }
      for (double t : thresholds) {
        auto n = static_cast<std::size_t>(
            std::count_if(values.begin(), values.end(), [t](double v) { return v >= t; }));
        rows.push_back({label, phase, t, n});
      }
    }
  }
  return rows;
}

void write_curves_csv(const std::vector<CurveRow>& rows, std::ostream& out) {
  out << "measure,phase,threshold,count\n";
  for (const auto& r : rows) {
    out << r.measure << ',' << r.phase << ',' << format_double(r.threshold) << ',' << r.count << '\n';
  }
}

std::vector<RbpRow> rbp_sweep(const std::string& year, const std::vector<Run>& baselines,
                              const std::vector<Run>& fused, const Qrels& qrels,
                              const std::vector<double>& p_grid, std::size_t depth) {
  if (baselines.size() != fused.size()) {
    throw std::invalid_argument("baseline and fused run counts differ");
  }
  std::vector<MetricSpec> specs;
  for (double p : p_grid) specs.push_back(MetricSpec::rbp(p, depth));
  std::vector<RbpRow> rows;
  for (double p : p_grid) rows.push_back({year, p, 0, baselines.size()});
  for (std::size_t i = 0; i < baselines.size(); ++i) {
    auto b = evaluate_run(baselines[i], qrels, specs);
    auto f = evaluate_run(fused[i], qrels, specs);
    for (std::size_t m = 0; m < specs.size(); ++m) {
      if (b.aggregate[m] && f.aggregate[m] && *f.aggregate[m] > *b.aggregate[m]) {
        ++rows[m].n_improved;
      }
    }
  }
  return rows;
}

std::vector<RbpRow> rbp_rows(const std::string& year, const FuseYearResult& result) {
  std::vector<RbpRow> rows;
  for (const auto& ms : result.metrics) {
    if (ms.spec.kind != MetricKind::RBP) continue;
    rows.push_back({year, ms.spec.rbp_p, ms.summary.n_improved, ms.summary.n_systems});
  }
  return rows;
}

void write_rbp_csv(const std::vector<RbpRow>& rows, std::ostream& out) {
  out << "year,p,n_improved,n_total\n";
  for (const auto& r : rows) {
    out << r.year << ',' << format_double(r.p) << ',' << r.n_improved << ',' << r.n_total << '\n';
  }
}

}  // namespace bibfusion
