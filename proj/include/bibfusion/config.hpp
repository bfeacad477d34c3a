#pragma once

/// \file config.hpp
/// Experiment configuration. The same `key = value` vocabulary is used by
/// config files and by CLI flags (`--key value`); flags win.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bibfusion/biblio.hpp"
#include "bibfusion/fusion.hpp"
#include "bibfusion/metrics.hpp"

namespace bibfusion {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string year = "unknown";

  std::string qrels;
  std::string runs_dir;
  std::string manifest;
  std::string biblio;
  std::string out = ".";

  ColumnMap columns;
  TableDialect dialect;
  int max_grade = 2;

  PoolPolicy pool = PoolPolicy::Judged;
  std::string base_run;  // run pool for signal-eval / sweep

  std::string method = "rrf";
  double rrf_k = 60.0;
  SignalSet signals = SignalSet::parse("CAPRI");
  std::size_t depth = 1000;
  Gain gain = Gain::Linear;

  // BayesFuse
  std::string bayes_model;
  std::vector<std::string> train_runs_dirs;
  std::vector<std::string> train_qrels;
  std::size_t train_sample = 5;
  std::string bins = "1-10:1,11-100:10,101-1000:100";

  std::uint64_t seed = 42;
  std::size_t iterations = 10000;
  double alpha = 0.05;

  bool write_runs = false;
  std::string fused_dir;
  std::string baseline_report;
  std::string fused_report;
  std::string run;        // evaluate
  std::string baseline;   // sigtest
  std::string treatment;  // sigtest
  std::vector<std::string> metrics;
  std::vector<double> p_grid = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
  std::vector<double> thresholds;  // empty: 0.00, 0.01, ..., 1.00

  std::size_t threads = 0;  // 0: hardware concurrency

  /// Sets one key. Accepts `-` or `_` separators. Throws ConfigError.
  void set(std::string key, const std::string& value);

  /// Reads `key = value` lines; `#` starts a comment.
  void load(std::istream& in);
  void load_file(const std::string& path);

  /// Resolved metric list (`metrics` or the standard battery).
  std::vector<MetricSpec> metric_specs() const;
  std::vector<double> threshold_grid() const;
  std::size_t worker_count() const;
};

/// Every key `set` understands, for help output and the CLI.
const std::vector<std::string>& config_keys();

}  // namespace bibfusion
