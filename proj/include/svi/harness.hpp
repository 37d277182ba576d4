#pragma once

// Experiment matrix: configuration, parallel replicate execution, trace and
// summary files.

#include <svi/csv.hpp>
#include <svi/driver.hpp>
#include <svi/gmm.hpp>
#include <svi/model.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace svi::harness {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Configuration

struct Preset {
  Eigen::Index N = 500;
  std::uint64_t seed = 0;
  GmmParams truth;

  bool operator==(const Preset& o) const {
    return N == o.N && seed == o.seed && truth.weights == o.truth.weights &&
           truth.means == o.truth.means && truth.sds == o.truth.sds;
  }
};

inline GmmParams make_params(std::vector<double> weights, std::vector<std::vector<double>> means,
                             double sd) {
  const auto K = static_cast<Eigen::Index>(weights.size());
  const auto p = static_cast<Eigen::Index>(means.front().size());
  GmmParams g{Eigen::VectorXd(K), Eigen::MatrixXd(K, p), Eigen::MatrixXd::Constant(K, p, sd)};
  for (Eigen::Index k = 0; k < K; ++k) {
    g.weights[k] = weights[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < p; ++j) {
      g.means(k, j) = means[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    }
  }
  return g;
}

/// Built-in simulated datasets: N = 500 draws from well-separated unit-sd mixtures.
inline std::map<std::string, Preset> builtin_presets() {
  std::map<std::string, Preset> presets;
  presets["sim-p2k2"] = {500, 2201, make_params({0.5, 0.5}, {{-2, -2}, {2, 2}}, 1.0)};
  presets["sim-p2k3"] = {500, 2301,
                         make_params({1.0 / 3, 1.0 / 3, 1.0 / 3}, {{-3, 0}, {3, 0}, {0, 3}}, 1.0)};
  presets["sim-p3k4"] = {500, 3401,
                         make_params({0.25, 0.25, 0.25, 0.25},
                                     {{-2, -2, -2}, {2, 2, -2}, {2, -2, 2}, {-2, 2, 2}}, 1.0)};
  return presets;
}

struct DatasetEntry {
  std::string name;
  std::optional<std::string> preset;
  std::optional<std::string> csv;
  std::optional<std::string> label_column;
  /// Number of mixture components to fit; presets default to their true K.
  std::optional<int> K;

  bool operator==(const DatasetEntry&) const = default;
};

struct MethodEntry {
  std::string label;
  RunConfig run;

  bool operator==(const MethodEntry&) const = default;
};

inline std::string default_label(const RunConfig& rc) {
  return std::string(to_string(rc.method)) + "(" + std::to_string(rc.samples) + ")";
}

/// Settings shared by every method unless the method entry says otherwise.
struct MethodDefaults {
  double learning_rate = 1e-4;
  long max_iters = 500;
  long patience = 10;
  TemperatureSchedule schedule{ScheduleKind::Log, 1.0};

  bool operator==(const MethodDefaults&) const = default;
};

struct ExperimentConfig {
  std::vector<DatasetEntry> datasets{{"sim-p2k2", "sim-p2k2", std::nullopt, std::nullopt, std::nullopt}};
  std::vector<MethodEntry> methods;
  std::map<std::string, Preset> presets = builtin_presets();
  GmmSpec priors;  // K and p are filled per dataset
  MethodDefaults defaults;
  long replicates = 1;
  std::uint64_t base_seed = 1;
  int jobs = 1;
  std::string out = "results";
  bool record_time = true;

  bool operator==(const ExperimentConfig&) const = default;

  void validate() const {
    if (replicates < 1) throw DomainError("config: replicates must be at least 1");
    if (jobs < 1) throw DomainError("config: jobs must be at least 1");
    if (datasets.empty()) throw DomainError("config: no datasets");
    if (methods.empty()) throw DomainError("config: no methods");
    for (const auto& m : methods) m.run.validate();
    for (const auto& d : datasets) {
      if (d.preset.has_value() == d.csv.has_value()) {
        throw DomainError("config: dataset '" + d.name + "' needs exactly one of preset/csv");
      }
      if (d.preset && !presets.contains(*d.preset)) {
        throw DomainError("config: unknown preset '" + *d.preset + "'");
      }
    }
  }
};

inline RunConfig make_run_config(Method method, const MethodDefaults& defaults,
                                 std::optional<std::size_t> samples = std::nullopt) {
  RunConfig rc;
  rc.method = method;
  rc.samples = samples.value_or(default_samples(method));
  rc.learning_rate = defaults.learning_rate;
  rc.max_iters = defaults.max_iters;
  rc.patience = defaults.patience;
  rc.schedule = defaults.schedule;
  return rc;
}

inline json schedule_to_json(const TemperatureSchedule& s) {
  return {{"kind", std::string(to_string(s.kind))}, {"k", s.k}};
}

inline TemperatureSchedule schedule_from_json(const json& j, TemperatureSchedule base = {}) {
  if (j.contains("kind")) {
    base.kind = parse_schedule_kind(j.at("kind").get<std::string>());
    base.k = default_coefficient(base.kind);
  }
  if (j.contains("k")) base.k = j.at("k").get<double>();
  return base;
}

inline json params_to_json(const GmmParams& g) {
  json means = json::array(), sds = json::array();
  for (Eigen::Index k = 0; k < g.means.rows(); ++k) {
    json mrow = json::array(), srow = json::array();
    for (Eigen::Index j = 0; j < g.means.cols(); ++j) {
      mrow.push_back(g.means(k, j));
      srow.push_back(g.sds(k, j));
    }
    means.push_back(mrow);
    sds.push_back(srow);
  }
  return {{"weights", std::vector<double>(g.weights.data(), g.weights.data() + g.weights.size())},
          {"means", means},
          {"sds", sds}};
}

inline GmmParams params_from_json(const json& j) {
  const auto w = j.at("weights").get<std::vector<double>>();
  const auto m = j.at("means").get<std::vector<std::vector<double>>>();
  const auto K = static_cast<Eigen::Index>(w.size());
  if (m.size() != w.size() || m.empty()) throw DomainError("preset: means need one row per weight");
  const auto p = static_cast<Eigen::Index>(m.front().size());
  GmmParams g{Eigen::Map<const Eigen::VectorXd>(w.data(), K), Eigen::MatrixXd(K, p),
              Eigen::MatrixXd(K, p)};
  std::vector<std::vector<double>> s;
  if (j.contains("sds")) {
    s = j.at("sds").get<std::vector<std::vector<double>>>();
  } else {
    s.assign(w.size(), std::vector<double>(static_cast<std::size_t>(p), 1.0));
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    if (m[ks].size() != static_cast<std::size_t>(p) || s.at(ks).size() != static_cast<std::size_t>(p)) {
      throw DomainError("preset: ragged means/sds");
    }
    for (Eigen::Index c = 0; c < p; ++c) {
      g.means(k, c) = m[ks][static_cast<std::size_t>(c)];
      g.sds(k, c) = s[ks][static_cast<std::size_t>(c)];
    }
  }
  g.validate();
  return g;
}

inline json to_json(const ExperimentConfig& c) {
  json datasets = json::array();
  for (const auto& d : c.datasets) {
    json e{{"name", d.name}};
    if (d.preset) e["preset"] = *d.preset;
    if (d.csv) e["csv"] = *d.csv;
    if (d.label_column) e["label_column"] = *d.label_column;
    if (d.K) e["K"] = *d.K;
    datasets.push_back(e);
  }
  json methods = json::array();
  for (const auto& m : c.methods) {
    json e{{"label", m.label},
           {"method", std::string(to_string(m.run.method))},
           {"samples", m.run.samples},
           {"learning_rate", m.run.learning_rate},
           {"max_iters", m.run.max_iters},
           {"patience", m.run.patience},
           {"temper", schedule_to_json(m.run.schedule)}};
    if (m.run.sequence) e["sequence"] = std::string(to_string(*m.run.sequence));
    methods.push_back(e);
  }
  json presets = json::object();
  for (const auto& [name, p] : c.presets) {
    json e = params_to_json(p.truth);
    e["N"] = p.N;
    e["seed"] = p.seed;
    presets[name] = e;
  }
  return {{"datasets", datasets},
          {"methods", methods},
          {"presets", presets},
          {"model",
           {{"prior_mean_scale", c.priors.prior_mean_scale},
            {"prior_dirichlet_alpha", c.priors.prior_dirichlet_alpha},
            {"prior_logsd_scale", c.priors.prior_logsd_scale}}},
          {"defaults",
           {{"learning_rate", c.defaults.learning_rate},
            {"max_iters", c.defaults.max_iters},
            {"patience", c.defaults.patience},
            {"temper", schedule_to_json(c.defaults.schedule)}}},
          {"replicates", c.replicates},
          {"base_seed", c.base_seed},
          {"jobs", c.jobs},
          {"out", c.out},
          {"record_time", c.record_time}};
}

/// Builds a config from JSON. Missing keys keep their defaults; a missing
/// "methods" list yields the three-method comparison (yoasovi-naive, qmcvi, mcvi).
inline ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("defaults")) {
    const json& d = j.at("defaults");
    c.defaults.learning_rate = d.value("learning_rate", c.defaults.learning_rate);
    c.defaults.max_iters = d.value("max_iters", c.defaults.max_iters);
    c.defaults.patience = d.value("patience", c.defaults.patience);
    if (d.contains("temper")) c.defaults.schedule = schedule_from_json(d.at("temper"), c.defaults.schedule);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    c.priors.prior_mean_scale = m.value("prior_mean_scale", c.priors.prior_mean_scale);
    c.priors.prior_dirichlet_alpha = m.value("prior_dirichlet_alpha", c.priors.prior_dirichlet_alpha);
    c.priors.prior_logsd_scale = m.value("prior_logsd_scale", c.priors.prior_logsd_scale);
  }
  if (j.contains("presets")) {
    for (const auto& [name, e] : j.at("presets").items()) {
      Preset p;
      p.N = e.value("N", static_cast<Eigen::Index>(500));
      p.seed = e.value("seed", std::uint64_t{0});
      p.truth = params_from_json(e);
      c.presets[name] = p;
    }
  }
  if (j.contains("datasets")) {
    c.datasets.clear();
    for (const auto& e : j.at("datasets")) {
      DatasetEntry d;
      if (e.contains("preset")) d.preset = e.at("preset").get<std::string>();
      if (e.contains("csv")) d.csv = e.at("csv").get<std::string>();
      if (e.contains("label_column")) d.label_column = e.at("label_column").get<std::string>();
      if (e.contains("K")) d.K = e.at("K").get<int>();
      d.name = e.value("name", d.preset ? *d.preset : d.csv ? fs::path(*d.csv).stem().string() : "");
      c.datasets.push_back(d);
    }
  }
  if (j.contains("methods")) {
    for (const auto& e : j.at("methods")) {
      const Method method = parse_method(e.at("method").get<std::string>());
      RunConfig rc = make_run_config(
          method, c.defaults,
          e.contains("samples") ? std::optional<std::size_t>(e.at("samples").get<std::size_t>())
                                : std::nullopt);
      rc.learning_rate = e.value("learning_rate", rc.learning_rate);
      rc.max_iters = e.value("max_iters", rc.max_iters);
      rc.patience = e.value("patience", rc.patience);
      if (e.contains("temper")) rc.schedule = schedule_from_json(e.at("temper"), rc.schedule);
      if (e.contains("sequence")) rc.sequence = parse_sequence_kind(e.at("sequence").get<std::string>());
      c.methods.push_back({e.value("label", default_label(rc)), rc});
    }
  } else {
    for (Method m : {Method::YoasoviNaive, Method::Qmcvi, Method::Mcvi}) {
      RunConfig rc = make_run_config(m, c.defaults);
      c.methods.push_back({default_label(rc), rc});
    }
  }
  c.replicates = j.value("replicates", c.replicates);
  c.base_seed = j.value("base_seed", c.base_seed);
  c.jobs = j.value("jobs", c.jobs);
  c.out = j.value("out", c.out);
  c.record_time = j.value("record_time", c.record_time);
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return from_json(json::parse(in, nullptr, true, /*ignore_comments=*/true));
}

// ---------------------------------------------------------------------------
// Datasets

struct PreparedDataset {
  DatasetEntry entry;
  Dataset data;
  GmmSpec spec;
};

inline PreparedDataset prepare_dataset(const ExperimentConfig& c, const DatasetEntry& entry) {
  PreparedDataset out{entry, {}, c.priors};
  if (entry.preset) {
    const Preset& preset = c.presets.at(*entry.preset);
    out.data = simulate(preset.truth, preset.N, preset.seed, entry.name);
    out.spec.K = entry.K.value_or(preset.truth.K());
  } else {
    out.data = load_csv(*entry.csv, CsvOptions{entry.label_column});
    out.data.name = entry.name;
    out.spec.K = entry.K.value_or(2);
  }
  out.spec.p = static_cast<int>(out.data.p());
  out.spec.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Trace files

inline constexpr const char* kTraceHeader = "iter,elapsed_s,elbo,accepted,M";

inline void write_trace_csv(const std::vector<RunRecord>& records, std::ostream& os) {
  os << kTraceHeader << '\n';
  for (const auto& r : records) {
    os << r.iter << ',' << format_double(r.elapsed_seconds) << ',' << format_double(r.elbo) << ','
       << (r.accepted ? 1 : 0) << ',' << format_double(r.M) << '\n';
  }
}

inline void write_trace_csv(const std::vector<RunRecord>& records, const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_trace_csv(records, os);
}

inline std::vector<RunRecord> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw ParseError(path.string() + ": missing trace header", 1, 0);
  }
  std::vector<RunRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 5) throw ParseError(path.string() + ": malformed trace row", line_no, 0);
    records.push_back({std::stol(cells[0]), parse_double(cells[1]), parse_double(cells[2]),
                       cells[3] == "1", parse_double(cells[4])});
  }
  return records;
}

struct TrajectoryPoint {
  double elapsed_seconds;
  double elbo;
};

/// Records with elapsed time within the horizon.
inline std::vector<TrajectoryPoint> emit_trajectory(const std::vector<RunRecord>& records,
                                                    double horizon_seconds) {
  std::vector<TrajectoryPoint> out;
  for (const auto& r : records) {
    if (r.elapsed_seconds <= horizon_seconds) out.push_back({r.elapsed_seconds, r.elbo});
  }
  return out;
}

/// One series writes "elapsed_s,elbo"; several write "series,elapsed_s,elbo".
inline void write_trajectories(
    const std::vector<std::pair<std::string, std::vector<TrajectoryPoint>>>& series,
    std::ostream& os) {
  const bool labeled = series.size() > 1;
  os << (labeled ? "series,elapsed_s,elbo" : "elapsed_s,elbo") << '\n';
  for (const auto& [label, points] : series) {
    for (const auto& pt : points) {
      if (labeled) os << label << ',';
      os << format_double(pt.elapsed_seconds) << ',' << format_double(pt.elbo) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Matrix execution

struct RunOutcome {
  std::string dataset;
  std::string method;
  long replicate = 0;
  std::uint64_t seed = 0;
  RunSummary summary;
  fs::path trace_path;
};

struct Stat {
  double mean = 0.0;
  double sd = 0.0;
};

inline Stat mean_sd(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

struct SummaryRow {
  std::string dataset;
  std::string method;
  long replicates = 0;
  long failed = 0;
  Stat iterations, seconds, elbo, dic;
  double converged_fraction = 0.0;
};

inline std::vector<SummaryRow> summarize(const std::vector<RunOutcome>& runs) {
  std::vector<SummaryRow> rows;
  std::map<std::pair<std::string, std::string>, std::vector<const RunOutcome*>> cells;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& r : runs) {
    auto key = std::make_pair(r.dataset, r.method);
    if (!cells.contains(key)) order.push_back(key);
    cells[key].push_back(&r);
  }
  for (const auto& key : order) {
    const auto& group = cells[key];
    SummaryRow row;
    row.dataset = key.first;
    row.method = key.second;
    row.replicates = static_cast<long>(group.size());
    std::vector<double> it, sec, elbo, d;
    long converged = 0;
    for (const auto* r : group) {
      if (r->summary.error) ++row.failed;
      if (r->summary.converged) ++converged;
      it.push_back(static_cast<double>(r->summary.iterations));
      sec.push_back(r->summary.wall_seconds);
      elbo.push_back(r->summary.final_elbo);
      d.push_back(r->summary.dic);
    }
    row.iterations = mean_sd(it);
    row.seconds = mean_sd(sec);
    row.elbo = mean_sd(elbo);
    row.dic = mean_sd(d);
    row.converged_fraction = static_cast<double>(converged) / static_cast<double>(group.size());
    rows.push_back(row);
  }
  return rows;
}

inline void write_runs_csv(const std::vector<RunOutcome>& runs, std::ostream& os) {
  os << "dataset,method,replicate,seed,iterations,seconds,elbo,dic,converged,density_evaluations,"
        "trace,status\n";
  for (const auto& r : runs) {
    std::string status = r.summary.error ? *r.summary.error : "ok";
    std::replace(status.begin(), status.end(), ',', ';');
    os << r.dataset << ',' << r.method << ',' << r.replicate << ',' << r.seed << ','
       << r.summary.iterations << ',' << format_double(r.summary.wall_seconds) << ','
       << format_double(r.summary.final_elbo) << ',' << format_double(r.summary.dic) << ','
       << (r.summary.converged ? 1 : 0) << ',' << r.summary.density_evaluations << ','
       << r.trace_path.filename().string() << ',' << status << '\n';
  }
}

inline constexpr const char* kSummaryHeader =
    "dataset,method,replicates,failed,iterations_mean,iterations_sd,seconds_mean,seconds_sd,"
    "elbo_mean,elbo_sd,dic_mean,dic_sd,converged_fraction";

inline void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os) {
  os << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    os << r.dataset << ',' << r.method << ',' << r.replicates << ',' << r.failed << ','
       << format_double(r.iterations.mean) << ',' << format_double(r.iterations.sd) << ','
       << format_double(r.seconds.mean) << ',' << format_double(r.seconds.sd) << ','
       << format_double(r.elbo.mean) << ',' << format_double(r.elbo.sd) << ','
       << format_double(r.dic.mean) << ',' << format_double(r.dic.sd) << ','
       << format_double(r.converged_fraction) << '\n';
  }
}

inline void print_summary_table(const std::vector<SummaryRow>& rows, std::ostream& os) {
  auto cell = [&](double v, int width, int precision) {
    os << std::setw(width) << std::fixed << std::setprecision(precision) << v;
  };
  os << std::left << std::setw(12) << "dataset" << std::setw(26) << "method" << std::right
     << std::setw(9) << "iter" << std::setw(9) << "sd" << std::setw(10) << "secs" << std::setw(9)
     << "sd" << std::setw(13) << "ELBO" << std::setw(11) << "sd" << std::setw(13) << "DIC"
     << std::setw(11) << "sd" << std::setw(7) << "conv" << std::setw(7) << "fail" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(12) << r.dataset << std::setw(26) << r.method << std::right;
    cell(r.iterations.mean, 9, 1);
    cell(r.iterations.sd, 9, 1);
    cell(r.seconds.mean, 10, 3);
    cell(r.seconds.sd, 9, 3);
    cell(r.elbo.mean, 13, 1);
    cell(r.elbo.sd, 11, 1);
    cell(r.dic.mean, 13, 1);
    cell(r.dic.sd, 11, 1);
    cell(r.converged_fraction, 7, 2);
    os << std::setw(7) << r.failed << '\n';
  }
  os.unsetf(std::ios::floatfield);
}

inline std::string file_safe(std::string s) {
  for (char& ch : s) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') ch = '_';
  }
  return s;
}

struct MatrixResult {
  std::vector<RunOutcome> runs;
  std::vector<SummaryRow> summary;
  /// True when every run of at least one (dataset, method) cell failed.
  bool any_cell_failed = false;
};

/**
 * Executes every (dataset, method, replicate) run; replicate r uses seed
 * base_seed + r. Writes one CSV per run under <out>/traces, plus <out>/runs.csv and
 * <out>/summary.csv. Runs are spread over `jobs` threads.
 */
inline MatrixResult run_matrix(const ExperimentConfig& config) {
  config.validate();
  const fs::path out_dir(config.out);
  fs::create_directories(out_dir / "traces");

  std::vector<PreparedDataset> prepared;
  for (const auto& entry : config.datasets) prepared.push_back(prepare_dataset(config, entry));

  struct Task {
    std::size_t dataset, method;
    long replicate;
  };
  std::vector<Task> tasks;
  for (std::size_t d = 0; d < prepared.size(); ++d) {
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      for (long r = 0; r < config.replicates; ++r) tasks.push_back({d, m, r});
    }
  }

  MatrixResult result;
  result.runs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& task = tasks[i];
      const PreparedDataset& ds = prepared[task.dataset];
      const MethodEntry& method = config.methods[task.method];
      RunOutcome& outcome = result.runs[i];
      outcome.dataset = ds.entry.name;
      outcome.method = method.label;
      outcome.replicate = task.replicate;
      outcome.seed = config.base_seed + static_cast<std::uint64_t>(task.replicate);
      outcome.trace_path = out_dir / "traces" /
                           (file_safe(ds.entry.name) + "__" + file_safe(method.label) + "__r" +
                            std::to_string(task.replicate) + ".csv");
      RunConfig rc = method.run;
      rc.seed = outcome.seed;
      rc.record_time = config.record_time;
      try {
        const GmmModel model(ds.spec, ds.data);
        const RunTrace trace = run_gmm(rc, model);
        outcome.summary = trace.summary;
        write_trace_csv(trace.records, outcome.trace_path);
      } catch (const std::exception& e) {
        outcome.summary.error = e.what();
        write_trace_csv({}, outcome.trace_path);
      }
    }
  };

  const int n_threads = std::min<int>(config.jobs, static_cast<int>(tasks.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  result.summary = summarize(result.runs);
  for (const auto& row : result.summary) {
    if (row.failed == row.replicates) result.any_cell_failed = true;
  }

  {
    std::ofstream os(out_dir / "runs.csv", std::ios::binary);
    write_runs_csv(result.runs, os);
  }
  {
    std::ofstream os(out_dir / "summary.csv", std::ios::binary);
    write_summary_csv(result.summary, os);
  }
  return result;
}

}  // namespace svi::harness
