#include "bibfusion/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <thread>

namespace bibfusion {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string text = value;
  if (!text.empty() && text.front() == '[' && text.back() == ']') text = text.substr(1, text.size() - 2);
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    auto item = trim(std::string_view(text).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  auto v = parse_double(trim(value));
  if (!v) throw ConfigError(key + ": expected a number, got '" + value + "'");
  return *v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
  double v = to_double(key, value);
  if (v < 0 || std::floor(v) != v || v > 1.8e19) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return static_cast<std::uint64_t>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  auto v = trim(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(to_double(key, item));
  return out;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "year", "qrels", "runs-dir", "manifest", "biblio", "out",
      "col-doc", "col-citations", "col-altmetric", "col-pub-year", "col-research-level",
      "col-impact-factor", "delimiter", "strict-table", "max-grade", "pool", "base-run",
      "method", "rrf-k", "signals", "depth", "gain", "bayes-model", "train-runs-dir",
      "train-qrels", "train-sample", "bins", "seed", "iterations", "alpha", "write-runs",
      "fused-dir", "baseline-report", "fused-report", "run", "baseline", "treatment",
      "metrics", "p-grid", "thresholds", "threads"};
  return keys;
}

void ExperimentConfig::set(std::string key, const std::string& raw) {
  std::replace(key.begin(), key.end(), '_', '-');
  key = trim(key);
  const std::string value = trim(raw);
  try {
    if (key == "year") year = value;
    else if (key == "qrels") qrels = value;
    else if (key == "runs-dir") runs_dir = value;
    else if (key == "manifest") manifest = value;
    else if (key == "biblio") biblio = value;
    else if (key == "out") out = value;
    else if (key == "col-doc") columns.doc = value;
    else if (key == "col-citations") columns.citations = value;
    else if (key == "col-altmetric") columns.altmetric = value;
    else if (key == "col-pub-year") columns.pub_year = value;
    else if (key == "col-research-level") columns.research_level = value;
    else if (key == "col-impact-factor") columns.impact_factor = value;
    else if (key == "delimiter") {
      if (value == "tab" || value == "\\t") dialect.delimiter = '\t';
      else if (value.size() == 1) dialect.delimiter = value[0];
      else throw ConfigError("delimiter: expected a single character or 'tab'");
    } else if (key == "strict-table") dialect.strict = to_bool(key, value);
    else if (key == "max-grade") max_grade = static_cast<int>(to_unsigned(key, value));
    else if (key == "pool") pool = parse_pool_policy(value);
    else if (key == "base-run") base_run = value;
    else if (key == "method") {
      static const std::vector<std::string> known = {"rrf", "borda", "bayes", "wmnz", "combmnz"};
      if (std::find(known.begin(), known.end(), value) == known.end()) {
        throw ConfigError("method: unknown fusion method '" + value + "'");
      }
      method = value;
    } else if (key == "rrf-k") {
      rrf_k = to_double(key, value);
      if (!(rrf_k > 0)) throw ConfigError("rrf-k must be positive");
    } else if (key == "signals") signals = SignalSet::parse(value);
    else if (key == "depth") {
      depth = to_unsigned(key, value);
      if (depth == 0) throw ConfigError("depth must be positive");
    } else if (key == "gain") {
      if (value == "linear") gain = Gain::Linear;
      else if (value == "exp" || value == "exponential") gain = Gain::Exponential;
      else throw ConfigError("gain: expected linear|exp");
    } else if (key == "bayes-model") bayes_model = value;
    else if (key == "train-runs-dir") train_runs_dirs = split_list(value);
    else if (key == "train-qrels") train_qrels = split_list(value);
    else if (key == "train-sample") train_sample = to_unsigned(key, value);
    else if (key == "bins") {
      BinSpec::parse(value);
      bins = value;
    } else if (key == "seed") seed = to_unsigned(key, value);
    else if (key == "iterations") {
      iterations = to_unsigned(key, value);
      if (iterations < 1000) throw ConfigError("iterations must be >= 1000");
    } else if (key == "alpha") {
      alpha = to_double(key, value);
      if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
    } else if (key == "write-runs") write_runs = to_bool(key, value);
    else if (key == "fused-dir") fused_dir = value;
    else if (key == "baseline-report") baseline_report = value;
    else if (key == "fused-report") fused_report = value;
    else if (key == "run") run = value;
    else if (key == "baseline") baseline = value;
    else if (key == "treatment") treatment = value;
    else if (key == "metrics") {
      metrics = split_list(value);
      for (const auto& m : metrics) parse_metric(m);
    } else if (key == "p-grid") {
      p_grid = to_doubles(key, value);
      for (double p : p_grid) {
        if (!(p > 0 && p < 1)) throw ConfigError("p-grid values must lie in (0, 1)");
      }
    } else if (key == "thresholds") thresholds = to_doubles(key, value);
    else if (key == "threads") threads = to_unsigned(key, value);
    else throw ConfigError("unknown configuration key '" + key + "'");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

void ExperimentConfig::load(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto text = trim(line);
    if (text.empty()) continue;
    auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    set(text.substr(0, eq), text.substr(eq + 1));
  }
}

void ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  load(in);
}

std::vector<MetricSpec> ExperimentConfig::metric_specs() const {
  if (metrics.empty()) return standard_battery(gain);
  std::vector<MetricSpec> specs;
  for (const auto& m : metrics) specs.push_back(parse_metric(m));
  return specs;
}

std::vector<double> ExperimentConfig::threshold_grid() const {
  if (!thresholds.empty()) return thresholds;
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  return grid;
}

std::size_t ExperimentConfig::worker_count() const {
  if (threads > 0) return threads;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

}  // namespace bibfusion
