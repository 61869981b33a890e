#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rtgee/correlation.hpp"
#include "rtgee/dataset.hpp"
#include "rtgee/leverage.hpp"
#include "rtgee/score.hpp"

namespace rtgee {

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitConfig {
  double lambda = 0.0;
  double tau = 1.0;
  ScoreFunction score = ScoreFunction::tukey(4.685);
  CorrelationKind correlation = CorrelationKind::UnstructuredRobust;
  std::optional<LeverageConfig> leverage = LeverageConfig{};
  double epsilon = 1e-8;
  int max_iter = 100;
  /// Sandwich bread uses the sample mean of psi'(e_ij) at the fit instead of
  /// the Gaussian kappa1 (identical for the identity score).
  bool empirical_bread = true;

  void validate() const;
};

struct FitResult {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd delta_hat;
  std::vector<int> active_set;  // ascending indices j with delta_j < 1
  double phi_hat = 0.0;
  CorrelationModel correlation;
  Eigen::MatrixXd covariance;  // p x p, zero outside the active set
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> notes;

  Eigen::VectorXd standard_errors() const { return covariance.diagonal().cwiseMax(0.0).cwiseSqrt(); }
  /// Standard errors from the covariance scaled by n / (n - |active set|);
  /// falls back to the unscaled values when n <= |active set|.
  Eigen::VectorXd standard_errors(std::size_t n) const;
};

/// Quantities that do not change across the (lambda, b) grid of one dataset:
/// the initial estimator and the leverage weights.
/// Blocks sum_i x_ik w_il x_il' (p x p, index k * m + l) over the subjects
/// observed at `times`.
struct PatternGram {
  std::vector<int> times;
  std::vector<Eigen::MatrixXd> blocks;
};

/// Null when the blocks would exceed `max_entries` doubles in total.
std::shared_ptr<const std::vector<PatternGram>> pattern_gram(const LongitudinalDataset& data,
                                                             const std::vector<Eigen::VectorXd>& weights,
                                                             std::size_t max_entries);

struct FitInputs {
  Eigen::VectorXd beta_init;
  std::vector<Eigen::VectorXd> weights;
  /// MAD scale of the residuals at beta_init times N / (N - p) (when N > p);
  /// 0 when degenerate. Shared by
  /// every fit on a tuning path so that RPWD values are comparable.
  double reference_phi = 0.0;
  /// Optional cache that speeds up Fisher steps; results do not depend on it.
  std::shared_ptr<const std::vector<PatternGram>> gram;
};

FitInputs prepare_inputs(const LongitudinalDataset& data, const std::optional<LeverageConfig>& leverage);
/// Fills reference_phi from the residuals at beta_init.
FitInputs make_inputs(const LongitudinalDataset& data, Eigen::VectorXd beta_init, std::vector<Eigen::VectorXd> weights);

/// Ridge-stabilized Tukey IRLS under working independence (efficiency 0.85,
/// ridge 1e-4, at most 50 iterations). The scale is fixed at the normalized
/// MAD of the least-squares residuals, inflated by N / (N - p) when N > p.
Eigen::VectorXd initial_estimate(const LongitudinalDataset& data);

/// delta_j = min{1, lambda / |beta0_j|^(1 + tau)}, with delta_j = 1 when beta0_j = 0
/// and lambda > 0.
Eigen::VectorXd compute_delta(const Eigen::VectorXd& beta0, double lambda, double tau);

/// Per-subject pieces of the robust estimating function at (beta, phi, R):
/// D_i, V_i = R_i A_i^{1/2}, h_i = W_i psi((Y_i - mu_i)/sqrt(phi)), the diagonal
/// of Gamma_i = -kappa1 phi^{-1/2} W_i, Omega_i = V_i^{-1} Gamma_i, and the sums
/// U = sum D_i' V_i^{-1} h_i and J = sum D_i' Omega_i D_i.
struct EEComponents {
  std::vector<Eigen::MatrixXd> D;
  std::vector<Eigen::MatrixXd> V;
  std::vector<Eigen::VectorXd> h;
  std::vector<Eigen::VectorXd> gamma;
  std::vector<Eigen::MatrixXd> omega;
  Eigen::VectorXd U;
  Eigen::MatrixXd J;
};

EEComponents assemble_components(const LongitudinalDataset& data, const Eigen::VectorXd& beta, double phi,
                                 const CorrelationModel& correlation, const ScoreFunction& score,
                                 const std::vector<Eigen::VectorXd>& weights);

/// Scale and working correlation re-estimated at `beta`.
struct NuisanceEstimate {
  double phi = 0.0;
  CorrelationModel correlation;
};

NuisanceEstimate estimate_nuisance(const LongitudinalDataset& data, const Eigen::VectorXd& beta,
                                   const ScoreFunction& score, CorrelationKind kind);

/// Smooth-threshold Fisher scoring. Coordinates with delta_j = 1 are pinned at
/// zero; non-convergence is reported through FitResult::converged.
FitResult solve(const LongitudinalDataset& data, const FitConfig& config);
FitResult solve(const LongitudinalDataset& data, const FitConfig& config, const FitInputs& inputs);

/// Sandwich Sigma^{-1} H Sigma^{-T} on the active coordinates of `fit`,
/// evaluated at its beta, phi and working correlation.
Eigen::MatrixXd sandwich_covariance(const LongitudinalDataset& data, const FitResult& fit,
                                    const ScoreFunction& score, const std::vector<Eigen::VectorXd>& weights,
                                    bool empirical_bread = false);

/// (I - Delta) U(beta) - Delta beta restricted to the active set, at the fit's
/// nuisance estimates. Zero at an exact root.
Eigen::VectorXd threshold_residual(const LongitudinalDataset& data, const FitResult& fit, const ScoreFunction& score,
                                   const std::vector<Eigen::VectorXd>& weights);

}  // namespace rtgee
