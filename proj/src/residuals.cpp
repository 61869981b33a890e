#include "rtgee/residuals.hpp"

#include <algorithm>
#include <cmath>

namespace rtgee {

ResidualSet pearson_residuals(const LongitudinalDataset& data, const Eigen::VectorXd& beta, double phi) {
  if (!(phi > 0.0)) throw std::invalid_argument("scale parameter phi must be positive");
  const MarginalModel model;
  const double inv_sqrt_phi = 1.0 / std::sqrt(phi);
  ResidualSet out;
  out.raw.reserve(data.n());
  out.standardized.reserve(data.n());
  for (const auto& s : data.subjects) {
    Eigen::VectorXd eta = s.y - s.x * beta;
    for (Eigen::Index j = 0; j < eta.size(); ++j) {
      eta(j) /= std::sqrt(model.variance_function(s.y(j) - eta(j)));
    }
    out.standardized.push_back(eta * inv_sqrt_phi);
    out.raw.push_back(std::move(eta));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty list");
  const auto n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double mad_phi(std::span<const double> eta) {
  if (eta.size() < 2) throw DegenerateScaleError("MAD scale needs at least two residuals");
  std::vector<double> work(eta.begin(), eta.end());
  const double center = median(work);
  for (auto& v : work) v = std::abs(v - center);
  const double mad = median(std::move(work));
  if (!(mad > 0.0)) {
    throw DegenerateScaleError("median absolute deviation of the residuals is zero; scale is degenerate");
  }
  const double s = 1.483 * mad;
  return s * s;
}

double mad_phi(const std::vector<Eigen::VectorXd>& eta) {
  std::vector<double> pooled;
  for (const auto& v : eta) pooled.insert(pooled.end(), v.data(), v.data() + v.size());
  return mad_phi(std::span<const double>(pooled));
}

}  // namespace rtgee
