// bibfusion: command-line front end for the fusion and evaluation pipelines.
//
//   bibfusion <command> [--config FILE] [--key value ...]
//
// Every config key is also a flag; flags override the config file.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "bibfusion/biblio.hpp"
#include "bibfusion/config.hpp"
#include "bibfusion/experiment.hpp"
#include "bibfusion/fusion.hpp"
#include "bibfusion/metrics.hpp"
#include "bibfusion/significance.hpp"
#include "bibfusion/trec_io.hpp"

namespace fs = std::filesystem;
using namespace bibfusion;

namespace {

void require(const std::string& value, const std::string& key) {
  if (value.empty()) throw ConfigError("missing required setting --" + key);
}

std::ofstream open_output(const ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out);
  auto path = fs::path(cfg.out) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

Qrels read_qrels(const ExperimentConfig& cfg) {
  require(cfg.qrels, "qrels");
  return load_qrels(cfg.qrels, cfg.max_grade);
}

BiblioTable read_table(const ExperimentConfig& cfg) {
  require(cfg.biblio, "biblio");
  LoadStats stats;
  auto table = load_biblio_table(cfg.biblio, cfg.columns, cfg.dialect, &stats);
  std::cerr << "biblio: " << stats.loaded << " records loaded, " << stats.rejected_empty
            << " rows without any signal dropped\n";
  return table;
}

FusionMethod resolve_method(const ExperimentConfig& cfg) {
  if (cfg.method != "bayes") return make_method(cfg.method, cfg.rrf_k);
  if (!cfg.bayes_model.empty()) {
    std::ifstream in(cfg.bayes_model);
    if (!in) throw ConfigError("cannot open bayes model " + cfg.bayes_model);
    return BayesMethod{BayesModel::load(in)};
  }
  if (cfg.train_runs_dirs.empty()) {
    throw ConfigError("method bayes needs --bayes-model or --train-runs-dir/--train-qrels");
  }
  if (cfg.train_runs_dirs.size() != cfg.train_qrels.size()) {
    throw ConfigError("train-runs-dir and train-qrels must list the same number of years");
  }
  std::vector<TrainingYear> years;
  for (std::size_t i = 0; i < cfg.train_runs_dirs.size(); ++i) {
    years.push_back({cfg.train_runs_dirs[i], cfg.train_qrels[i]});
  }
  std::vector<fs::path> chosen;
  auto model = train_bayes_from_years(years, cfg.train_sample, cfg.seed, BinSpec::parse(cfg.bins),
                                      cfg.depth, cfg.max_grade, std::cerr, &chosen);
  auto model_out = open_output(cfg, "bayes_model.txt");
  model.save(model_out);
  auto runs_out = open_output(cfg, "bayes_training_runs.txt");
  for (const auto& p : chosen) runs_out << p.generic_string() << '\n';
  return BayesMethod{std::move(model)};
}

std::unique_ptr<Run> optional_base_run(const ExperimentConfig& cfg) {
  if (cfg.pool != PoolPolicy::Run) return nullptr;
  require(cfg.base_run, "base-run");
  return std::make_unique<Run>(read_run_file(cfg.base_run, cfg.depth));
}

int cmd_coverage(const ExperimentConfig& cfg) {
  auto qrels = read_qrels(cfg);
  auto table = read_table(cfg);
  auto out = open_output(cfg, "coverage.csv");
  write_coverage_csv(coverage_table(cfg.year, qrels, table), out);
  return 0;
}

int cmd_signal_eval(const ExperimentConfig& cfg) {
  auto qrels = read_qrels(cfg);
  auto table = read_table(cfg);
  auto base = optional_base_run(cfg);
  auto reports = signal_eval(cfg.pool, qrels, table, cfg.metric_specs(), base.get());
  auto out = open_output(cfg, "signal_eval.csv");
  write_signal_eval_csv(cfg.year, reports, out);
  auto topics = open_output(cfg, "signal_eval_topics.csv");
  write_eval_csv(reports, topics);
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  auto qrels = read_qrels(cfg);
  auto table = read_table(cfg);
  auto base = optional_base_run(cfg);
  auto method = resolve_method(cfg);
  auto result = sweep(method, cfg.pool, qrels, table, cfg.metric_specs(), base.get(), cfg.depth,
                      cfg.worker_count());
  auto out = open_output(cfg, "sweep.csv");
  write_sweep_csv(result, out);
  return 0;
}

std::vector<fs::path> baseline_files(const ExperimentConfig& cfg) {
  require(cfg.runs_dir, "runs-dir");
  auto files = list_run_files(cfg.runs_dir, cfg.manifest, std::cerr);
  if (files.empty()) throw std::runtime_error("no run files in " + cfg.runs_dir);
  return files;
}

FuseYearResult run_fuse_year(const ExperimentConfig& cfg, const std::vector<MetricSpec>& specs,
                             bool significance) {
  auto qrels = read_qrels(cfg);
  auto table = read_table(cfg);
  auto method = resolve_method(cfg);
  auto files = baseline_files(cfg);

  FuseYearOptions options;
  options.subset = cfg.signals;
  options.depth = cfg.depth;
  options.specs = specs;
  options.iterations = cfg.iterations;
  options.seed = cfg.seed;
  options.alpha = cfg.alpha;
  options.threads = cfg.worker_count();
  options.significance = significance;
  if (cfg.write_runs) {
    fs::path dir = cfg.fused_dir.empty() ? fs::path(cfg.out) / "fused" : fs::path(cfg.fused_dir);
    fs::create_directories(dir);
    options.on_fused = [dir, &files](const Run& fused, std::size_t i) {
      auto name = files[i].filename().string();
      if (name.size() > 3 && name.ends_with(".gz")) name.resize(name.size() - 3);
      save_run(fused, (dir / name).string());
    };
  }
  return fuse_year(
      files.size(), [&](std::size_t i) { return read_run_file(files[i], cfg.depth); }, method,
      table, qrels, options, std::cerr);
}

int cmd_fuse_year(const ExperimentConfig& cfg) {
  auto specs = cfg.metric_specs();
  // nDCG@10 feeds the ndcg-curves command.
  if (std::find(specs.begin(), specs.end(), MetricSpec::ndcg(10, cfg.gain)) == specs.end()) {
    specs.push_back(MetricSpec::ndcg(10, cfg.gain));
  }
  auto result = run_fuse_year(cfg, specs, true);
  std::vector<EvalReport> before, after;
  for (const auto& s : result.systems) {
    before.push_back(s.baseline);
    after.push_back(s.fused);
  }
  auto b = open_output(cfg, "eval_baseline.csv");
  write_eval_csv(before, b);
  auto f = open_output(cfg, "eval_fused.csv");
  write_eval_csv(after, f);
  auto d = open_output(cfg, "deltas.csv");
  write_deltas_csv(cfg.year, cfg.method, result, cfg.signals, d);
  auto s = open_output(cfg, "summary.csv");
  write_summary_csv(cfg.year, cfg.method, result, s);
  return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg) {
  require(cfg.run, "run");
  auto qrels = read_qrels(cfg);
  auto run = read_run_file(cfg.run, cfg.depth);
  auto report = evaluate_run(run, qrels, cfg.metric_specs());
  for (const auto& t : report.skipped_topics) {
    std::cerr << "warning: topic " << t << " has no judgments, skipped\n";
  }
  auto out = open_output(cfg, "eval.csv");
  write_eval_csv({report}, out);
  return 0;
}

int cmd_sigtest(const ExperimentConfig& cfg) {
  require(cfg.baseline, "baseline");
  require(cfg.treatment, "treatment");
  auto qrels = read_qrels(cfg);
  auto specs = cfg.metric_specs();
  auto b = evaluate_run(read_run_file(cfg.baseline, cfg.depth), qrels, specs);
  auto t = evaluate_run(read_run_file(cfg.treatment, cfg.depth), qrels, specs);
  auto out = open_output(cfg, "sigtest.csv");
  out << "metric,cutoff,n_topics,baseline,treatment,delta,p_value\n";
  for (const auto& spec : specs) {
    auto pair = PairedScores::from_reports(b, t, spec);
    if (pair.size() < 2) {
      std::cerr << "warning: " << spec.label() << " defined on fewer than 2 topics, skipped\n";
      continue;
    }
    double p = fisher_randomization(pair, cfg.iterations, cfg.seed ^ stable_hash(spec.label()));
    out << spec.name() << ',' << spec.cutoff << ',' << pair.size() << ','
        << format_double(*b.mean(spec)) << ',' << format_double(*t.mean(spec)) << ','
        << format_double(pair.mean_delta()) << ',' << format_double(p) << '\n';
  }
  return 0;
}

std::vector<EvalReport> read_reports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report " + path);
  return read_eval_csv(in);
}

int cmd_ndcg_curves(const ExperimentConfig& cfg) {
  require(cfg.baseline_report, "baseline-report");
  require(cfg.fused_report, "fused-report");
  auto rows = ndcg_curves(read_reports(cfg.baseline_report), read_reports(cfg.fused_report),
                          cfg.threshold_grid());
  auto out = open_output(cfg, "ndcg_curves.csv");
  write_curves_csv(rows, out);
  return 0;
}

int cmd_rbp_sweep(const ExperimentConfig& cfg) {
  std::vector<RbpRow> rows;
  if (!cfg.fused_dir.empty() && !cfg.write_runs) {
    // Pair baselines with previously written fused runs by file name.
    auto qrels = read_qrels(cfg);
    std::vector<Run> baselines, fused;
    for (const auto& file : baseline_files(cfg)) {
      auto name = file.filename().string();
      if (name.ends_with(".gz")) name.resize(name.size() - 3);
      auto partner = fs::path(cfg.fused_dir) / name;
      if (!fs::exists(partner)) {
        std::cerr << "warning: no fused run for " << name << ", skipped\n";
        continue;
      }
      try {
        auto b = read_run_file(file, cfg.depth);
        auto f = read_run_file(partner, cfg.depth);
        baselines.push_back(std::move(b));
        fused.push_back(std::move(f));
      } catch (const std::exception& e) {
        std::cerr << "warning: skipping " << name << ": " << e.what() << '\n';
      }
    }
    if (baselines.empty()) throw std::runtime_error("no baseline/fused run pairs");
    rows = rbp_sweep(cfg.year, baselines, fused, qrels, cfg.p_grid, cfg.depth);
  } else {
    std::vector<MetricSpec> specs;
    for (double p : cfg.p_grid) specs.push_back(MetricSpec::rbp(p, cfg.depth));
    rows = rbp_rows(cfg.year, run_fuse_year(cfg, specs, false));
  }
  auto out = open_output(cfg, "rbp_sweep.csv");
  write_rbp_csv(rows, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank fusion of retrieval runs with bibliometric signals, and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  app.add_option("--config", config_file, "key = value configuration file");
  std::map<std::string, std::string> flags;
  for (const auto& key : config_keys()) {
    app.add_option("--" + key, flags[key]);
  }

  using Command = int (*)(const ExperimentConfig&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"coverage", "judged documents holding each signal", cmd_coverage},
      {"signal-eval", "evaluate each signal as a standalone ranking", cmd_signal_eval},
      {"sweep", "fuse every non-empty signal subset and evaluate", cmd_sweep},
      {"fuse-year", "fuse every run of a year with the signals; deltas and significance",
       cmd_fuse_year},
      {"evaluate", "evaluate one run", cmd_evaluate},
      {"sigtest", "paired randomization test between two runs", cmd_sigtest},
      {"ndcg-curves", "systems above each nDCG threshold, before and after fusion",
       cmd_ndcg_curves},
      {"rbp-sweep", "systems improved in RBP for each persistence value", cmd_rbp_sweep},
  };
  for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  try {
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& key : config_keys()) {
      if (app.count("--" + key) > 0) cfg.set(key, flags[key]);
    }
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }

  for (const auto& [name, help, fn] : commands) {
    if (!app.got_subcommand(name)) continue;
    try {
      return fn(cfg);
    } catch (const ConfigError& e) {
      std::cerr << "configuration error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 1;
}
