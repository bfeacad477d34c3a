#pragma once

/// \file experiment.hpp
/// Experiment pipelines behind the CLI: coverage, single-signal evaluation,
/// the signal-subset sweep, run + bibliometric fusion for a whole track
/// year, nDCG system-count curves and the RBP persistence sweep.
///
/// Everything here is deterministic given its inputs and seed; parallel
/// work writes into preallocated slots and aggregation runs in sorted order.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bibfusion/biblio.hpp"
#include "bibfusion/config.hpp"
#include "bibfusion/fusion.hpp"
#include "bibfusion/metrics.hpp"
#include "bibfusion/significance.hpp"
#include "bibfusion/trec_io.hpp"

namespace bibfusion {

/// Runs fn(0..n-1) on up to `threads` workers. The first exception is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Reads a run file, transparently gunzipping `*.gz`.
Run read_run_file(const std::filesystem::path& path, std::size_t depth = kDefaultDepth);

/// Regular files of `dir` sorted by name. With a manifest (one file name per
/// line), exactly the listed files are returned and missing ones reported.
std::vector<std::filesystem::path> list_run_files(const std::filesystem::path& dir,
                                                  const std::string& manifest,
                                                  std::ostream& log);

// -- coverage ---------------------------------------------------------------

struct CoverageRow {
  std::string year;
  Signal signal;
  std::size_t count = 0;
  std::size_t total = 0;
  double fraction = 0.0;
};

/// Unique judged documents holding each signal, relative to all judged docs.
std::vector<CoverageRow> coverage_table(const std::string& year, const Qrels& qrels,
                                        const BiblioTable& table);
void write_coverage_csv(const std::vector<CoverageRow>& rows, std::ostream& out);

// -- bibliometric rankings ----------------------------------------------------

/// Per-topic ranking by one signal. Topics come from the qrels (judged pool)
/// or from `base_run` (run pool).
Run signal_run(Signal signal, PoolPolicy policy, const Qrels& qrels, const BiblioTable& table,
               const Run* base_run = nullptr);

/// Per-topic fusion of the subset's signal rankings, truncated to `depth`.
Run subset_run(const SignalSet& subset, const FusionMethod& method, PoolPolicy policy,
               const Qrels& qrels, const BiblioTable& table, const Run* base_run = nullptr,
               std::size_t depth = kDefaultDepth);

/// One EvalReport per signal, tagged with the signal letter.
std::vector<EvalReport> signal_eval(PoolPolicy policy, const Qrels& qrels,
                                    const BiblioTable& table, const std::vector<MetricSpec>& specs,
                                    const Run* base_run = nullptr);

/// `year,signal,metric,cutoff,value` from the aggregate rows.
void write_signal_eval_csv(const std::string& year, const std::vector<EvalReport>& reports,
                           std::ostream& out);

/// Subset label -> report, in SignalSet::all_nonempty order.
using SweepResult = std::vector<std::pair<std::string, EvalReport>>;

SweepResult sweep(const FusionMethod& method, PoolPolicy policy, const Qrels& qrels,
                  const BiblioTable& table, const std::vector<MetricSpec>& specs,
                  const Run* base_run = nullptr, std::size_t depth = kDefaultDepth,
                  std::size_t threads = 1);

/// `subset,metric,value` with metric labels such as `nDCG@1000`.
void write_sweep_csv(const SweepResult& result, std::ostream& out);

// -- fusion of system runs ----------------------------------------------------

/// Re-ranks every topic of `baseline`: the baseline list fused with the
/// subset's signal rankings over the documents the baseline retrieved.
/// An empty subset returns the baseline unchanged.
Run fuse_with_signals(const Run& baseline, const SignalSet& subset, const FusionMethod& method,
                      const BiblioTable& table, std::size_t depth = kDefaultDepth,
                      const std::string& tag_suffix = "");

struct SystemResult {
  std::string system;
  EvalReport baseline;
  EvalReport fused;
};

struct MetricSummary {
  MetricSpec spec;
  SignificanceSummary summary;
  std::vector<SystemOutcome> outcomes;  // sorted by system
};

struct FuseYearResult {
  std::vector<SystemResult> systems;  // sorted by system
  std::vector<MetricSummary> metrics;
};

struct FuseYearOptions {
  SignalSet subset = SignalSet::parse("CAPRI");
  std::size_t depth = kDefaultDepth;
  std::vector<MetricSpec> specs;
  std::size_t iterations = kDefaultIterations;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::size_t threads = 1;
  bool significance = true;  // skip the randomization tests when false
  /// Called with each fused run (from worker threads) when set.
  std::function<void(const Run& fused, std::size_t index)> on_fused;
};

/// `load(i)` yields baseline i of `count`; failures are skipped and logged.
FuseYearResult fuse_year(std::size_t count, const std::function<Run(std::size_t)>& load,
                         const FusionMethod& method, const BiblioTable& table, const Qrels& qrels,
                         const FuseYearOptions& options, std::ostream& log);

FuseYearResult fuse_year(const std::vector<Run>& baselines, const FusionMethod& method,
                         const BiblioTable& table, const Qrels& qrels,
                         const FuseYearOptions& options, std::ostream& log);

/// `year,method,signals,system,metric,cutoff,baseline,fused,delta,p_value`.
void write_deltas_csv(const std::string& year, const std::string& method,
                      const FuseYearResult& result, const SignalSet& subset, std::ostream& out);

/// `year,method,metric,n_systems,n_improved,n_significant,avg_improvement,overall_change`.
void write_summary_csv(const std::string& year, const std::string& method,
                       const FuseYearResult& result, std::ostream& out);

// -- BayesFuse training ---------------------------------------------------------

/// k distinct indices out of n, sorted, from a seeded Fisher-Yates shuffle.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

struct TrainingYear {
  std::filesystem::path runs_dir;
  std::filesystem::path qrels;
};

/// Samples `sample` runs per training year and pools their bin counts.
/// `chosen` receives the sampled run files.
BayesModel train_bayes_from_years(const std::vector<TrainingYear>& years, std::size_t sample,
                                  std::uint64_t seed, const BinSpec& bins, std::size_t depth,
                                  int max_grade, std::ostream& log,
                                  std::vector<std::filesystem::path>* chosen = nullptr);

// -- curves and sweeps -----------------------------------------------------------

struct CurveRow {
  std::string measure;
  std::string phase;
  double threshold = 0.0;
  std::size_t count = 0;
};

/// For nDCG@10 and nDCG@1000, before and after: systems scoring >= t.
/// Throws std::invalid_argument if the two report sets name different systems.
std::vector<CurveRow> ndcg_curves(const std::vector<EvalReport>& before,
                                  const std::vector<EvalReport>& after,
                                  const std::vector<double>& thresholds);
void write_curves_csv(const std::vector<CurveRow>& rows, std::ostream& out);

struct RbpRow {
  std::string year;
  double p = 0.0;
  std::size_t n_improved = 0;
  std::size_t n_total = 0;
};

/// Counts, for each p, the systems whose mean RBP rises after fusion.
/// `baselines[i]` pairs with `fused[i]`.
std::vector<RbpRow> rbp_sweep(const std::string& year, const std::vector<Run>& baselines,
                              const std::vector<Run>& fused, const Qrels& qrels,
                              const std::vector<double>& p_grid, std::size_t depth = kDefaultDepth);
/// Same counts from a fuse_year result evaluated with RBP specs.
std::vector<RbpRow> rbp_rows(const std::string& year, const FuseYearResult& result);
void write_rbp_csv(const std::vector<RbpRow>& rows, std::ostream& out);

}  // namespace bibfusion
