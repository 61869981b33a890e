#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rtgee/tuning.hpp"

namespace rtgee {

/// Simulation RNG: 64-bit Mersenne Twister (std::mt19937_64). Per-replicate
/// streams are seeded with splitmix64(scenario seed, replicate index), so
/// replicates are independent of execution order.
using Rng = std::mt19937_64;

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate);

enum class ErrorDistribution { Normal, StudentT3 };
enum class OutlierShift { Normal10, Constant5 };

/// Additive contamination applied to uniformly chosen observation cells.
struct Contamination {
  double y_rate = 0.0;
  OutlierShift y_shift = OutlierShift::Normal10;
  double x_rate = 0.0;  // t3 draws added to the first covariate
};

enum class ContaminationCase { Case1, Case2, Case3, Case2Prime, Case3Prime, Case2DoublePrime, Case3DoublePrime };

Contamination contamination_for(ContaminationCase c);
ContaminationCase parse_contamination_case(const std::string& name);
std::string to_string(ContaminationCase c);

struct SimScenario {
  std::string name = "scenario";
  int n = 100;
  int p = 20;
  int m = 10;
  bool unbalanced = false;  // m_i uniform on {2, ..., 5} over the grid {1, ..., 5}
  Eigen::VectorXd beta_true;
  ErrorDistribution errors = ErrorDistribution::StudentT3;
  CorrelationKind true_correlation = CorrelationKind::Exchangeable;
  double alpha = 0.7;
  double covariate_rho = 0.5;
  Contamination contamination;
  std::uint64_t seed = 20240101;

  int num_nonzero() const { return static_cast<int>((beta_true.array() != 0.0).count()); }
  void validate() const;
};

/// (0.7, 0.7, -0.4, 0, ..., 0).
Eigen::VectorXd sparse_beta(int p);
/// (0.7, 0.7, -0.4) repeated over the first s entries, zeros after.
Eigen::VectorXd cyclic_beta(int p, int s);

struct DivergingDims {
  int p = 0;
  int s = 0;
};
/// p_n = floor(4 n^{2/5}) - 5 and s_n = floor(p_n / 5).
DivergingDims diverging_dims(int n);

/// n = 100, p = 20, m = 10.
SimScenario low_dimensional_design(ErrorDistribution errors, ContaminationCase c);
/// n = 200 with diverging p and unbalanced m_i.
SimScenario diverging_design(ErrorDistribution errors, ContaminationCase c, int n = 200);
/// n = 100, p = 300, m = 10.
SimScenario high_dimensional_design(ErrorDistribution errors, ContaminationCase c);

/// m_i x p blocks with rows N(0, [rho^|k-l|]), independent across rows.
std::vector<Eigen::MatrixXd> gen_covariates(const std::vector<int>& sizes, int p, double rho, Rng& rng);

/// Correlated error vectors, eps_i = L z (Normal) or L z / sqrt(w/3), w ~ chi2_3.
std::vector<Eigen::VectorXd> gen_errors(const std::vector<std::vector<int>>& times, ErrorDistribution dist,
                                        CorrelationKind corr, double alpha, Rng& rng);

struct ContaminationLog {
  std::vector<std::size_t> y_cells;
  std::vector<std::size_t> x_cells;
};

/// Adds outliers in place to responses and first covariates (flat observation
/// order, subject by subject).
ContaminationLog contaminate(std::vector<Eigen::VectorXd>& responses, std::vector<Eigen::MatrixXd>& covariates,
                             const Contamination& c, Rng& rng);

struct SimulatedData {
  LongitudinalDataset data;  // possibly contaminated
  std::vector<Eigen::MatrixXd> clean_x;
};

SimulatedData simulate_dataset(const SimScenario& scenario, Rng& rng);

enum class Method { SGEE, RSGEE, RTGEE };
std::string to_string(Method m);
Method parse_method(const std::string& name);

struct MethodSpec {
  Method method = Method::RTGEE;
  CorrelationKind correlation = CorrelationKind::UnstructuredRobust;
};

struct RunOptions {
  int replicates = 100;
  double b_min_efficiency = 0.70;
  /// Empty: data-driven grid per replicate.
  std::vector<double> lambda_grid;
  /// Refine the data-driven grid so that active sets of size up to
  /// refine_max_active are each visited (see refine_lambda_grid).
  bool refine_grid = true;
  int refine_max_active = 30;
  /// Nonzero: skip b tuning and use this biweight constant.
  double fixed_b = 0.0;
  double tau = 1.0;
  double epsilon = 1e-8;
  int max_iter = 100;
  LeverageConfig leverage;
  unsigned threads = 1;
};

/// Base configuration (score family, leverage) used for a method.
FitConfig method_config(const MethodSpec& spec, const RunOptions& options);

struct ReplicateRecord {
  int replicate = 0;
  std::uint64_t seed = 0;
  MethodSpec spec;
  bool converged = false;
  double lambda = 0.0;
  double b = 0.0;
  int iterations = 0;
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd standard_errors;
  std::vector<int> active_set;
  int correct_zeros = 0;
  int incorrect_zeros = 0;
  bool exact_support = false;
  double mspe = 0.0;
  double squared_error = 0.0;
  std::vector<TuningPathEntry> path;
};

struct SimMetrics {
  MethodSpec spec;
  int used = 0;
  int nonconverged = 0;
  bool valid = true;  // false when more than 10% of replicates fail
  double C = 0.0;
  double IC = 0.0;
  double CF = 0.0;
  Eigen::VectorXd bias;
  Eigen::VectorXd sd;
  Eigen::VectorXd coverage;
  double amspe = 0.0;
  double mmspe = 0.0;
  double amse = 0.0;
  double relative_efficiency = 0.0;  // AMSE(SGEE, same correlation) / AMSE(method); NaN without SGEE
};

struct CellResult {
  SimScenario scenario;
  RunOptions options;
  std::vector<SimMetrics> metrics;
  std::vector<ReplicateRecord> records;  // replicate-major, method-minor
};

/// Scores one replicate's fit against the truth.
ReplicateRecord score_replicate(const SimScenario& scenario, const SimulatedData& sim, const FitResult& fit);

/// Aggregates the converged records of one method. Throws when none converged.
SimMetrics aggregate(const SimScenario& scenario, const MethodSpec& spec, const std::vector<ReplicateRecord>& records);

CellResult run_cell(const SimScenario& scenario, const std::vector<MethodSpec>& methods, const RunOptions& options);

}  // namespace rtgee
