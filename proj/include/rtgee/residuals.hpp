#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rtgee/dataset.hpp"

namespace rtgee {

/// Raised when a robust scale collapses to zero.
class DegenerateScaleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LinkKind { Identity };
enum class VarianceKind { Constant };

/// Mean/variance specification mu = g(x'beta), Var = phi * v(mu).
/// Only the identity link with constant variance is implemented, so
/// mu_ij = x_ij'beta and A_i = phi * I.
struct MarginalModel {
  LinkKind link = LinkKind::Identity;
  VarianceKind variance = VarianceKind::Constant;

  double mean(double linear_predictor) const { return linear_predictor; }
  double variance_function(double /*mu*/) const { return 1.0; }
};

/// Per-subject residual vectors. `standardized` holds (phi A_i)^{-1/2}(Y_i - mu_i),
/// `raw` holds A_i^{-1/2}(Y_i - mu_i) without the phi factor.
struct ResidualSet {
  std::vector<Eigen::VectorXd> standardized;
  std::vector<Eigen::VectorXd> raw;
};

ResidualSet pearson_residuals(const LongitudinalDataset& data, const Eigen::VectorXd& beta, double phi);

/// Median with the even-length convention (mean of the two central values).
double median(std::vector<double> values);

/// (1.483 * MAD)^2 of the pooled unscaled residuals. Throws DegenerateScaleError
/// when the MAD is zero.
double mad_phi(std::span<const double> eta);

/// Pools the `raw` residuals of every subject and applies mad_phi.
double mad_phi(const std::vector<Eigen::VectorXd>& eta);

}  // namespace rtgee
