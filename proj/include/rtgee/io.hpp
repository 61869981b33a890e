#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rtgee/simulation.hpp"

namespace rtgee {

/// Optional design columns prepended to the file's covariates.
struct DatasetSchema {
  bool intercept = false;
  /// Adds the time label as a numeric covariate named "time".
  bool time_covariate = false;
};

/// Long-format CSV with header `subject,time,y,<covariates...>`. Rows are
/// grouped by subject (first-appearance order) and sorted by time; the time
/// grid is the sorted set of distinct integer time labels. Throws DataError
/// with the offending line number on malformed input.
LongitudinalDataset parse_dataset(std::istream& in, const std::string& source, const DatasetSchema& schema = {});
LongitudinalDataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema = {});

/// Writes the long-format CSV with 17 significant digits.
void write_dataset(std::ostream& out, const LongitudinalDataset& data);
void write_dataset(const std::filesystem::path& path, const LongitudinalDataset& data);

/// Shortest round-trip representation with at most 17 significant digits.
std::string format_number(double value);

/// One simulation cell read from a JSON scenario file.
struct ScenarioConfig {
  SimScenario scenario;
  std::vector<MethodSpec> methods;
  RunOptions options;
};

/// Keys: design (low|diverging|high), errors (t3|normal), case, name, n, p, m,
/// unbalanced, beta_true, true_correlation, alpha, covariate_rho, seed,
/// methods (["rtgee:run", ...]), replicates, b_min_efficiency, lambda_grid,
/// refine_grid, refine_max_active, fixed_b, tau, epsilon, max_iter. Unknown
/// keys are rejected.
ScenarioConfig parse_scenario(const std::string& json_text, const std::string& source = "scenario");
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// "method:corr", e.g. "rtgee:exc".
MethodSpec parse_method_spec(const std::string& text);
std::string to_string(const MethodSpec& spec);

/// Tuned fit of one method on observed data.
struct AnalysisOptions {
  /// Empty: data-driven grid (refined as in RunOptions).
  std::vector<double> lambda_grid;
  bool refine_grid = true;
  int refine_max_active = 30;
  double b_min_efficiency = 0.70;
  /// Nonzero: skip b tuning and use this biweight constant.
  double fixed_b = 0.0;
  /// Nonnegative: skip lambda tuning and fit at this value.
  double fixed_lambda = -1.0;
  double tau = 1.0;
  double epsilon = 1e-8;
  int max_iter = 100;
  LeverageConfig leverage;
  /// Echoed in reports; the fit itself is deterministic.
  std::uint64_t seed = 0;
};

struct AnalysisResult {
  MethodSpec spec;
  FitConfig config;  // lambda and score constant set to the selected values
  TuningResult tuning;
  std::vector<double> b_candidates;
  std::vector<double> lambda_grid;
  std::uint64_t seed = 0;
  double seconds = 0.0;
};

AnalysisResult analyze(const LongitudinalDataset& data, const MethodSpec& spec, const AnalysisOptions& options);

struct CvResult {
  double mse = 0.0;
  int used = 0;
  std::vector<std::size_t> failed;  // subjects whose split did not converge
  double seconds = 0.0;
};

/// Leave-one-subject-out (1/n_used) sum_i ||Y_i - X_i beta_(-i)||^2 with the
/// configuration (lambda, b) held fixed across folds. Folds run on up to
/// `threads` threads; the result does not depend on the thread count.
CvResult mse_cv(const LongitudinalDataset& data, const FitConfig& config, unsigned threads = 1);

/// Thread count from RTGEE_THREADS, else `fallback`.
unsigned thread_count_from_env(unsigned fallback = 1);

/// Simulation artifacts: metrics.csv, replicates.jsonl, tuning_path.csv,
/// relative_efficiency.csv and report.json in `dir`.
void write_cell_reports(const std::filesystem::path& dir, const CellResult& cell, double seconds);

/// Fit artifacts: coefficients.csv, tuning_path.csv and report.json in `dir`.
/// `cv` may be null.
void write_analysis_reports(const std::filesystem::path& dir, const LongitudinalDataset& data,
                            const AnalysisResult& result, const CvResult* cv);

void write_metrics_csv(std::ostream& out, const CellResult& cell);
/// One JSON object per line (no trailing newline).
std::string replicate_json(const ReplicateRecord& record);

}  // namespace rtgee
