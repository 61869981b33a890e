#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rtgee/dataset.hpp"

namespace rtgee {

/// Coordinatewise median and squared normalized MAD of the covariate rows.
struct RobustLocationScale {
  Eigen::VectorXd location;
  Eigen::VectorXd scale;  // variance units, every entry > 0
  std::vector<bool> degenerate;  // column had zero MAD; scale set to 1
};

struct LeverageConfig {
  double r = 1.0;
  double quantile = 0.95;

  void validate() const;
};

RobustLocationScale robust_location_scale(const Eigen::MatrixXd& rows);

/// Upper quantile of the chi-square distribution, |CDF(x) - q| < 1e-10.
double chi_square_quantile(int dof, double q);

/// min{1, (b0 / d^2)^(r/2)} with d^2 the diagonal Mahalanobis distance and b0
/// the chi-square quantile with dof = dim(x).
double leverage_weight(const Eigen::VectorXd& x, const RobustLocationScale& ls, const LeverageConfig& cfg);

/// Weight evaluator with the chi-square cutoff computed once.
class LeverageWeighter {
 public:
  LeverageWeighter(RobustLocationScale ls, const LeverageConfig& cfg);

  double cutoff() const { return cutoff_; }
  double squared_distance(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  RobustLocationScale ls_;
  LeverageConfig cfg_;
  double cutoff_;
};

/// Per-subject weight vectors from the pooled covariate rows of `data`.
std::vector<Eigen::VectorXd> leverage_weights(const LongitudinalDataset& data, const LeverageConfig& cfg);

/// All-ones weights (leverage downweighting disabled).
std::vector<Eigen::VectorXd> unit_weights(const LongitudinalDataset& data);

}  // namespace rtgee
