#include "rtgee/io.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace rtgee {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string at_line(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

double parse_real(const std::string& field, const std::string& where, const std::string& column) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw DataError(where + "column '" + column + "' is not a finite number: '" + field + "'");
  }
  return value;
}

long parse_time(const std::string& field, const std::string& where) {
  long value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw DataError(where + "time must be an integer: '" + field + "'");
  }
  return value;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

ErrorDistribution parse_errors(const std::string& name) {
  if (name == "t3") return ErrorDistribution::StudentT3;
  if (name == "normal") return ErrorDistribution::Normal;
  throw std::invalid_argument("unknown error distribution '" + name + "'");
}

std::string to_string(ErrorDistribution e) { return e == ErrorDistribution::StudentT3 ? "t3" : "normal"; }

json correlation_json(const CorrelationModel& model) {
  json j{{"kind", to_string(model.kind)}, {"repair_shrinkage", model.repair_shrinkage}};
  if (model.kind == CorrelationKind::Exchangeable || model.kind == CorrelationKind::AR1) j["alpha"] = model.alpha;
  if (model.kind == CorrelationKind::UnstructuredRobust) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < model.grid.rows(); ++r) rows.push_back(vector_json(model.grid.row(r).transpose()));
    j["grid"] = rows;
  }
  return j;
}

constexpr const char* kPathHeader = "lambda,b_opt,rpwd,df,converged";

void write_path_rows(std::ostream& out, const std::string& prefix, const std::vector<TuningPathEntry>& path) {
  for (const auto& e : path) {
    out << prefix << format_number(e.lambda) << ',' << format_number(e.b_opt) << ',' << format_number(e.rpwd) << ','
        << e.df << ',' << (e.converged ? 1 : 0) << '\n';
  }
}

FitConfig analysis_config(const MethodSpec& spec, const AnalysisOptions& options) {
  RunOptions run;
  run.fixed_b = options.fixed_b;
  run.tau = options.tau;
  run.epsilon = options.epsilon;
  run.max_iter = options.max_iter;
  run.leverage = options.leverage;
  return method_config(spec, run);
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

LongitudinalDataset parse_dataset(std::istream& in, const std::string& source, const DatasetSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw DataError(source + ": file is empty");
  const char* required[] = {"subject", "time", "y"};
  for (std::size_t k = 0; k < 3; ++k) {
    if (header.size() <= k || header[k] != required[k]) {
      throw DataError(at_line(source, line_no) + "header must start with subject,time,y (missing '" + required[k] + "')");
    }
  }
  const std::vector<std::string> file_covariates(header.begin() + 3, header.end());
  if (file_covariates.empty() && !schema.intercept && !schema.time_covariate) {
    throw DataError(at_line(source, line_no) + "no covariate columns");
  }

  struct Row {
    long time;
    double y;
    std::vector<double> x;
    std::size_t line;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> rows;
  std::map<std::pair<std::string, long>, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = at_line(source, line_no);
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw DataError(where + "expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw DataError(where + "empty subject id");
    Row row{parse_time(fields[1], where), parse_real(fields[2], where, "y"), {}, line_no};
    for (std::size_t k = 3; k < fields.size(); ++k) row.x.push_back(parse_real(fields[k], where, header[k]));
    const auto key = std::make_pair(fields[0], row.time);
    if (auto it = seen.find(key); it != seen.end()) {
      throw DataError(where + "duplicate (subject, time) = (" + fields[0] + ", " + fields[1] + "), first seen on line " +
                      std::to_string(it->second));
    }
    seen.emplace(key, line_no);
    if (!rows.count(fields[0])) order.push_back(fields[0]);
    rows[fields[0]].push_back(std::move(row));
  }
  if (order.empty()) throw DataError(source + ": no data rows");

  LongitudinalDataset data;
  if (schema.intercept) data.covariate_names.push_back("intercept");
  if (schema.time_covariate) data.covariate_names.push_back("time");
  data.covariate_names.insert(data.covariate_names.end(), file_covariates.begin(), file_covariates.end());
  for (const auto& [key, line] : seen) data.time_labels.push_back(key.second);
  std::sort(data.time_labels.begin(), data.time_labels.end());
  data.time_labels.erase(std::unique(data.time_labels.begin(), data.time_labels.end()), data.time_labels.end());

  const auto p = static_cast<Eigen::Index>(data.covariate_names.size());
  for (const auto& id : order) {
    auto& subject_rows = rows[id];
    std::sort(subject_rows.begin(), subject_rows.end(), [](const Row& a, const Row& b) { return a.time < b.time; });
    const auto m = static_cast<Eigen::Index>(subject_rows.size());
    Subject s{id, Eigen::MatrixXd(m, p), Eigen::VectorXd(m), {}};
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& r = subject_rows[static_cast<std::size_t>(j)];
      Eigen::Index col = 0;
      if (schema.intercept) s.x(j, col++) = 1.0;
      if (schema.time_covariate) s.x(j, col++) = static_cast<double>(r.time);
      for (double v : r.x) s.x(j, col++) = v;
      s.y(j) = r.y;
      const auto grid = std::lower_bound(data.time_labels.begin(), data.time_labels.end(), r.time);
      s.times.push_back(static_cast<int>(grid - data.time_labels.begin()));
    }
    data.subjects.push_back(std::move(s));
  }
  data.validate();
  return data;
}

LongitudinalDataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return parse_dataset(in, path.string(), schema);
}

void write_dataset(std::ostream& out, const LongitudinalDataset& data) {
  out << "subject,time,y";
  for (const auto& name : data.covariate_names) out << ',' << name;
  out << '\n';
  for (const auto& s : data.subjects) {
    for (Eigen::Index j = 0; j < s.y.size(); ++j) {
      out << s.id << ',' << data.time_labels[static_cast<std::size_t>(s.times[static_cast<std::size_t>(j)])] << ','
          << format_number(s.y(j));
      for (Eigen::Index k = 0; k < s.x.cols(); ++k) out << ',' << format_number(s.x(j, k));
      out << '\n';
    }
  }
}

void write_dataset(const std::filesystem::path& path, const LongitudinalDataset& data) {
  auto out = open_output(path);
  write_dataset(out, data);
}

MethodSpec parse_method_spec(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("method spec must look like 'rtgee:exc', got '" + text + "'");
  return {parse_method(text.substr(0, colon)), parse_correlation_kind(text.substr(colon + 1))};
}

std::string to_string(const MethodSpec& spec) { return to_string(spec.method) + ":" + to_string(spec.correlation); }

ScenarioConfig parse_scenario(const std::string& json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(source + ": " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument(source + ": scenario must be a JSON object");
  static const std::vector<std::string> known = {
      "design", "errors", "case", "name", "n", "p", "m", "unbalanced", "beta_true", "true_correlation", "alpha",
      "covariate_rho", "seed", "methods", "replicates", "b_min_efficiency", "lambda_grid", "refine_grid",
      "refine_max_active", "fixed_b", "tau", "epsilon", "max_iter"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument(source + ": unknown key '" + key + "'");
    }
  }

  try {
    const auto errors = parse_errors(j.value("errors", std::string("t3")));
    const auto c = parse_contamination_case(j.value("case", std::string("case1")));
    const auto design = j.value("design", std::string("low"));
    ScenarioConfig cfg;
    if (design == "low") {
      cfg.scenario = low_dimensional_design(errors, c);
    } else if (design == "diverging") {
      cfg.scenario = diverging_design(errors, c, j.value("n", 200));
    } else if (design == "high") {
      cfg.scenario = high_dimensional_design(errors, c);
    } else {
      throw std::invalid_argument("unknown design '" + design + "'");
    }
    auto& s = cfg.scenario;
    s.name = j.value("name", s.name);
    s.n = j.value("n", s.n);
    s.m = j.value("m", s.m);
    s.unbalanced = j.value("unbalanced", s.unbalanced);
    if (j.contains("p")) {
      s.p = j.at("p").get<int>();
      s.beta_true = sparse_beta(s.p);
    }
    if (j.contains("beta_true")) {
      const auto beta = j.at("beta_true").get<std::vector<double>>();
      s.beta_true = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
      if (!j.contains("p")) s.p = static_cast<int>(beta.size());
    }
    if (j.contains("true_correlation")) s.true_correlation = parse_correlation_kind(j.at("true_correlation").get<std::string>());
    s.alpha = j.value("alpha", s.alpha);
    s.covariate_rho = j.value("covariate_rho", s.covariate_rho);
    s.seed = j.value("seed", s.seed);
    s.validate();

    for (const auto& m : j.value("methods", std::vector<std::string>{"rtgee:run"})) cfg.methods.push_back(parse_method_spec(m));
    if (cfg.methods.empty()) throw std::invalid_argument("methods must not be empty");
    auto& o = cfg.options;
    o.replicates = j.value("replicates", o.replicates);
    o.b_min_efficiency = j.value("b_min_efficiency", o.b_min_efficiency);
    o.lambda_grid = j.value("lambda_grid", o.lambda_grid);
    o.refine_grid = j.value("refine_grid", o.refine_grid);
    o.refine_max_active = j.value("refine_max_active", o.refine_max_active);
    o.fixed_b = j.value("fixed_b", o.fixed_b);
    o.tau = j.value("tau", o.tau);
    o.epsilon = j.value("epsilon", o.epsilon);
    o.max_iter = j.value("max_iter", o.max_iter);
    if (o.replicates < 1) throw std::invalid_argument("replicates must be positive");
    return cfg;
  } catch (const json::exception& e) {
    throw std::invalid_argument(source + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(source + ": " + e.what());
  }
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_file(path), path.string());
}

AnalysisResult analyze(const LongitudinalDataset& data, const MethodSpec& spec, const AnalysisOptions& options) {
  const auto start = Clock::now();
  AnalysisResult out;
  out.spec = spec;
  out.seed = options.seed;
  FitConfig cfg = analysis_config(spec, options);
  const FitInputs inputs = prepare_inputs(data, cfg.leverage);

  if (spec.method == Method::RTGEE && options.fixed_b <= 0.0) {
    out.b_candidates = candidate_b_grid(options.b_min_efficiency);
    if (out.b_candidates.empty()) throw std::invalid_argument("no biweight constant meets the minimum efficiency");
  } else {
    out.b_candidates = {cfg.score.constant()};
  }
  if (options.fixed_lambda >= 0.0) {
    out.lambda_grid = {options.fixed_lambda};
  } else if (!options.lambda_grid.empty()) {
    out.lambda_grid = options.lambda_grid;
  } else {
    out.lambda_grid = default_lambda_grid(inputs.beta_init, options.tau);
    if (options.refine_grid) {
      out.lambda_grid = refine_lambda_grid(out.lambda_grid, inputs.beta_init, options.tau, options.refine_max_active);
    }
  }
  out.tuning = select_lambda(data, cfg, out.lambda_grid, out.b_candidates, inputs);
  cfg.lambda = out.tuning.lambda_opt;
  cfg.score = cfg.score.with_constant(out.tuning.b_opt);
  out.config = cfg;
  out.seconds = seconds_since(start);
  return out;
}

CvResult mse_cv(const LongitudinalDataset& data, const FitConfig& config, unsigned threads) {
  if (data.n() < 2) throw std::invalid_argument("cross-validation needs at least two subjects");
  const auto start = Clock::now();
  const std::size_t n = data.n();
  std::vector<double> loss(n, 0.0);
  std::vector<char> ok(n, 0);
  auto run_fold = [&](std::size_t i) {
    try {
      const FitResult fit = solve(data.without_subject(i), config);
      if (!fit.converged) return;
      const auto& s = data.subjects[i];
      loss[i] = (s.y - s.x * fit.beta_hat).squaredNorm();
      ok[i] = 1;
    } catch (const std::exception&) {
    }
  };
  const unsigned workers = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) run_fold(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run_fold(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  CvResult out;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i]) {
      total += loss[i];
      ++out.used;
    } else {
      out.failed.push_back(i);
    }
  }
  if (out.used == 0) throw std::runtime_error("no cross-validation split converged");
  out.mse = total / out.used;
  out.seconds = seconds_since(start);
  return out;
}

unsigned thread_count_from_env(unsigned fallback) {
  const char* value = std::getenv("RTGEE_THREADS");
  if (value == nullptr || *value == '\0') return fallback;
  unsigned parsed = 0;
  const auto* end = value + std::char_traits<char>::length(value);
  const auto [ptr, ec] = std::from_chars(value, end, parsed);
  if (ec != std::errc() || ptr != end || parsed == 0) {
    throw std::invalid_argument(std::string("RTGEE_THREADS must be a positive integer, got '") + value + "'");
  }
  return parsed;
}

void write_metrics_csv(std::ostream& out, const CellResult& cell) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < cell.scenario.beta_true.size(); ++j) {
    if (cell.scenario.beta_true(j) != 0.0) support.push_back(j);
  }
  out << "scenario,method,corr,used,nonconverged,valid,C,IC,CF,AMSPE,MMSPE,AMSE,RE";
  for (auto j : support) out << ",bias_" << j + 1 << ",sd_" << j + 1 << ",coverage_" << j + 1;
  out << '\n';
  for (const auto& m : cell.metrics) {
    out << cell.scenario.name << ',' << to_string(m.spec.method) << ',' << to_string(m.spec.correlation) << ',' << m.used
        << ',' << m.nonconverged << ',' << (m.valid ? 1 : 0) << ',' << format_number(m.C) << ',' << format_number(m.IC)
        << ',' << format_number(m.CF) << ',' << format_number(m.amspe) << ',' << format_number(m.mmspe) << ','
        << format_number(m.amse) << ',' << format_number(m.relative_efficiency);
    for (auto j : support) {
      out << ',' << format_number(m.bias(j)) << ',' << format_number(m.sd(j)) << ',' << format_number(m.coverage(j));
    }
    out << '\n';
  }
}

std::string replicate_json(const ReplicateRecord& r) {
  json j{{"replicate", r.replicate},
         {"seed", r.seed},
         {"method", to_string(r.spec.method)},
         {"corr", to_string(r.spec.correlation)},
         {"converged", r.converged},
         {"lambda", r.lambda},
         {"b", r.b},
         {"iterations", r.iterations},
         {"beta_hat", vector_json(r.beta_hat)},
         {"standard_errors", vector_json(r.standard_errors)},
         {"active_set", r.active_set},
         {"correct_zeros", r.correct_zeros},
         {"incorrect_zeros", r.incorrect_zeros},
         {"exact_support", r.exact_support},
         {"mspe", r.mspe},
         {"squared_error", r.squared_error}};
  return j.dump();
}

void write_cell_reports(const std::filesystem::path& dir, const CellResult& cell, double seconds) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_output(dir / "metrics.csv");
    write_metrics_csv(out, cell);
  }
  {
    auto out = open_output(dir / "replicates.jsonl");
    for (const auto& r : cell.records) out << replicate_json(r) << '\n';
  }
  {
    auto out = open_output(dir / "tuning_path.csv");
    out << "replicate,method,corr," << kPathHeader << '\n';
    for (const auto& r : cell.records) {
      write_path_rows(out, std::to_string(r.replicate) + "," + to_string(r.spec.method) + "," +
                               to_string(r.spec.correlation) + ",",
                      r.path);
    }
  }
  const auto& s = cell.scenario;
  {
    auto out = open_output(dir / "relative_efficiency.csv");
    out << "scenario,errors,n,p,method,corr,AMSE,RE\n";
    for (const auto& m : cell.metrics) {
      out << s.name << ',' << to_string(s.errors) << ',' << s.n << ',' << s.p << ',' << to_string(m.spec.method) << ','
          << to_string(m.spec.correlation) << ',' << format_number(m.amse) << ',' << format_number(m.relative_efficiency)
          << '\n';
    }
  }
  const auto& o = cell.options;
  const bool tuned_b = o.fixed_b <= 0.0 && std::any_of(cell.metrics.begin(), cell.metrics.end(), [](const SimMetrics& m) {
                         return m.spec.method == Method::RTGEE;
                       });
  json methods = json::array();
  for (const auto& m : cell.metrics) {
    const FitConfig cfg = method_config(m.spec, o);
    methods.push_back({{"method", to_string(m.spec.method)},
                       {"corr", to_string(m.spec.correlation)},
                       {"score", cfg.score.describe()},
                       {"leverage", cfg.leverage.has_value()},
                       {"used", m.used},
                       {"nonconverged", m.nonconverged},
                       {"valid", m.valid}});
  }
  json report{
      {"scenario",
       {{"name", s.name},
        {"n", s.n},
        {"p", s.p},
        {"m", s.m},
        {"unbalanced", s.unbalanced},
        {"beta_true", vector_json(s.beta_true)},
        {"errors", to_string(s.errors)},
        {"true_correlation", to_string(s.true_correlation)},
        {"alpha", s.alpha},
        {"covariate_rho", s.covariate_rho},
        {"y_contamination_rate", s.contamination.y_rate},
        {"y_shift", s.contamination.y_shift == OutlierShift::Normal10 ? "normal10" : "constant5"},
        {"x_contamination_rate", s.contamination.x_rate}}},
      {"seed", s.seed},
      {"replicates", o.replicates},
      {"b_candidates", tuned_b ? candidate_b_grid(o.b_min_efficiency) : std::vector<double>{}},
      {"fixed_b", o.fixed_b},
      {"b_min_efficiency", o.b_min_efficiency},
      {"lambda_grid", o.lambda_grid.empty() ? json("data-driven") : json(o.lambda_grid)},
      {"refine_grid", o.refine_grid},
      {"refine_max_active", o.refine_max_active},
      {"tau", o.tau},
      {"epsilon", o.epsilon},
      {"max_iter", o.max_iter},
      {"leverage", {{"r", o.leverage.r}, {"quantile", o.leverage.quantile}}},
      {"methods", methods},
      {"seconds", seconds}};
  auto out = open_output(dir / "report.json");
  out << report.dump(2) << '\n';
}

void write_analysis_reports(const std::filesystem::path& dir, const LongitudinalDataset& data,
                            const AnalysisResult& result, const CvResult* cv) {
  std::filesystem::create_directories(dir);
  const FitResult& fit = result.tuning.best;
  const Eigen::VectorXd se = fit.standard_errors(data.n());
  std::vector<bool> active(static_cast<std::size_t>(data.p()), false);
  for (int j : fit.active_set) active[static_cast<std::size_t>(j)] = true;
  std::vector<std::string> selected;
  {
    auto out = open_output(dir / "coefficients.csv");
    out << "name,estimate,std_error,selected\n";
    for (int k = 0; k < data.p(); ++k) {
      const auto idx = static_cast<std::size_t>(k);
      const double estimate = active[idx] ? fit.beta_hat(k) : 0.0;
      out << data.covariate_names[idx] << ',' << format_number(estimate) << ','
          << format_number(active[idx] ? se(k) : 0.0) << ',' << (active[idx] ? 1 : 0) << '\n';
      if (active[idx]) selected.push_back(data.covariate_names[idx]);
    }
  }
  {
    auto out = open_output(dir / "tuning_path.csv");
    out << kPathHeader << '\n';
    write_path_rows(out, "", result.tuning.rpwd_path);
  }
  const auto& cfg = result.config;
  json report{{"method", to_string(result.spec.method)},
              {"corr", to_string(result.spec.correlation)},
              {"score", cfg.score.describe()},
              {"leverage", cfg.leverage.has_value()},
              {"seed", result.seed},
              {"n", data.n()},
              {"p", data.p()},
              {"observations", data.num_observations()},
              {"lambda_opt", result.tuning.lambda_opt},
              {"b_opt", result.tuning.b_opt},
              {"rpwd_constant", result.tuning.rpwd_constant},
              {"b_candidates", result.b_candidates},
              {"lambda_grid", result.lambda_grid},
              {"tau", cfg.tau},
              {"epsilon", cfg.epsilon},
              {"max_iter", cfg.max_iter},
              {"converged", fit.converged},
              {"iterations", fit.iterations},
              {"phi", fit.phi_hat},
              {"correlation", correlation_json(fit.correlation)},
              {"selected", selected},
              {"notes", fit.notes},
              {"seconds", result.seconds}};
  if (cv != nullptr) {
    std::vector<std::string> failed;
    for (auto i : cv->failed) failed.push_back(data.subjects[i].id);
    report["mse_cv"] = {{"value", cv->mse},
                        {"used", cv->used},
                        {"failed", failed},
                        {"tuning", "frozen at the full-data lambda and b"},
                        {"seconds", cv->seconds}};
  }
  auto out = open_output(dir / "report.json");
  out << report.dump(2) << '\n';
}

}  // namespace rtgee
