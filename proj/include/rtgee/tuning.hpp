#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "rtgee/solver.hpp"

namespace rtgee {

struct TuningPathEntry {
  double lambda = 0.0;
  double b_opt = 0.0;
  double rpwd = 0.0;
  int df = 0;
  bool converged = false;
};

struct TuningResult {
  double lambda_opt = 0.0;
  double b_opt = 0.0;
  /// Constant at which RPWD was evaluated along the path.
  double rpwd_constant = 0.0;
  std::vector<TuningPathEntry> rpwd_path;
  /// Every converged fit along the path, keyed by lambda (only when requested).
  std::map<double, FitResult> fits;
  FitResult best;
};

struct BSelection {
  double b_opt = 0.0;
  FitResult fit;
  double log_det = 0.0;
  /// Converged fit at the constant passed as `keep`, if any.
  std::optional<FitResult> kept;
};

/// Fits `base` at `lambda` for each constant in `candidates` and keeps the one
/// whose sandwich covariance, restricted to the active set, has the smallest
/// determinant (compared on the log scale; ties go to the smaller constant).
/// Identity scores ignore the candidates and fit once.
BSelection select_b(const LongitudinalDataset& data, const FitConfig& base, double lambda,
                    const std::vector<double>& candidates, const FitInputs& inputs,
                    std::optional<double> keep = std::nullopt);

/// sum_i h_i' R_i^{-1} h_i + df log(n), with h_i evaluated at the fit's beta
/// and working correlation and the given scale.
double rpwd(const LongitudinalDataset& data, const FitResult& fit, const ScoreFunction& score,
            const std::vector<Eigen::VectorXd>& weights, double phi);

/// Scale shared by every RPWD evaluation on a path: inputs.reference_phi, or
/// the MAD scale at beta_init when that is unset.
double rpwd_scale(const LongitudinalDataset& data, const FitInputs& inputs);

/// Largest candidate constant (the base constant for identity scores or an
/// empty candidate list).
double rpwd_constant(const FitConfig& base, const std::vector<double>& b_candidates);

/// Number of coordinates with delta_j != 1.
int degrees_of_freedom(const Eigen::VectorXd& delta);

struct TuningOptions {
  bool keep_fits = false;
};

/// Walks the grid in increasing order. At each lambda, b_opt comes from
/// select_b; RPWD is evaluated on the fit at the common constant
/// rpwd_constant(base, b_candidates) and the scale from rpwd_scale, so values
/// along the path are comparable. The minimizer's b_opt fit is
/// returned. Every lambda that shrinks all coordinates shares one empty-model
/// fit at the common constant.
TuningResult select_lambda(const LongitudinalDataset& data, const FitConfig& base, const std::vector<double>& lambda_grid,
                           const std::vector<double>& b_candidates, const FitInputs& inputs,
                           const TuningOptions& options = {});
TuningResult select_lambda(const LongitudinalDataset& data, const FitConfig& base, const std::vector<double>& lambda_grid,
                           const std::vector<double>& b_candidates);

/// {0} followed by 30 log-spaced values from 1e-4 lambda_max to lambda_max,
/// lambda_max = max_j |beta0_j|^(1 + tau).
std::vector<double> default_lambda_grid(const Eigen::VectorXd& beta0, double tau);
std::vector<double> default_lambda_grid(const LongitudinalDataset& data, double tau);

/// Adds to `grid` the geometric midpoints between consecutive distinct
/// thresholds |beta0_j|^(1 + tau) (sorted decreasingly) so that every active
/// set of size 1..max_active is reached; returns a sorted, duplicate-free grid.
std::vector<double> refine_lambda_grid(const std::vector<double>& grid, const Eigen::VectorXd& beta0, double tau,
                                       int max_active = 30);

}  // namespace rtgee
