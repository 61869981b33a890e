#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rtgee/residuals.hpp"
#include "rtgee/score.hpp"

namespace rtgee {

enum class CorrelationKind { Independence, Exchangeable, AR1, UnstructuredRobust };

CorrelationKind parse_correlation_kind(const std::string& name);
/// Short CLI name: ind, exc, ar1, run.
std::string to_string(CorrelationKind kind);

inline constexpr double kCorrelationClip = 1.0 - 1e-6;
inline constexpr double kParametricAlphaClip = 0.99;
inline constexpr double kMinEigenvalue = 1e-3;

/// Fitted working correlation. `alpha` is used by Exchangeable/AR1, `grid`
/// (T x T, unit diagonal) by UnstructuredRobust.
struct CorrelationModel {
  CorrelationKind kind = CorrelationKind::Independence;
  double alpha = 0.0;
  Eigen::MatrixXd grid;
  int num_times = 0;
  /// Shrinkage toward the identity applied by the positive-definiteness repair.
  double repair_shrinkage = 0.0;
};

/// Subjects' psi(e_i) vectors paired with their grid time indices.
struct TransformedResiduals {
  std::vector<Eigen::VectorXd> values;
  std::vector<std::vector<int>> times;
  int num_times = 0;
};

/// Elementwise psi applied to the standardized residuals.
std::vector<Eigen::VectorXd> robust_residual_transform(const ResidualSet& residuals, const ScoreFunction& score);

/// Pairwise-available moment matrix sum_i psi_ij psi_ik / n_jk. Throws DataError
/// naming any time pair that no subject observes jointly.
Eigen::MatrixXd unstructured_moment_matrix(const TransformedResiduals& r);

/// B^{-1/2} R_u B^{-1/2} with exact unit diagonal and off-diagonals clipped to
/// +-(1 - 1e-6). No positive-definiteness repair.
Eigen::MatrixXd normalize_unstructured(const Eigen::MatrixXd& moments);

/// Smallest shrinkage (1 - g) R + g I, g on a 1e-3 grid, with min eigenvalue >= 1e-3.
/// Returns g; `matrix` is modified in place.
double repair_positive_definite(Eigen::MatrixXd& matrix);

CorrelationModel estimate_unstructured(const TransformedResiduals& r);
CorrelationModel estimate_exchangeable(const TransformedResiduals& r);
CorrelationModel estimate_ar1(const TransformedResiduals& r);

/// Dispatches on `kind`; Independence returns the identity model.
CorrelationModel estimate_correlation(CorrelationKind kind, const TransformedResiduals& r);

/// The subject's m_i x m_i working correlation at its time indices.
Eigen::MatrixXd build_R_i(const CorrelationModel& model, const std::vector<int>& times);

}  // namespace rtgee
