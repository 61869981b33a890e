#include "rtgee/leverage.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "rtgee/residuals.hpp"

namespace rtgee {

namespace {
constexpr double kMadNormalization = 1.4826;
}

void LeverageConfig::validate() const {
  if (!(r >= 1.0)) throw std::invalid_argument("leverage exponent r must be >= 1");
  if (!(quantile > 0.0 && quantile < 1.0)) throw std::invalid_argument("leverage quantile must lie in (0, 1)");
}

RobustLocationScale robust_location_scale(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0 || rows.cols() == 0) throw DataError("robust location/scale needs a nonempty covariate matrix");
  const auto p = rows.cols();
  RobustLocationScale out{Eigen::VectorXd(p), Eigen::VectorXd(p), std::vector<bool>(static_cast<std::size_t>(p))};
  std::vector<double> column(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index k = 0; k < p; ++k) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) column[static_cast<std::size_t>(i)] = rows(i, k);
    const double med = median(column);
    for (auto& v : column) v = std::abs(v - med);
    const double mad = median(column);
    out.location(k) = med;
    if (mad > 0.0) {
      out.scale(k) = (kMadNormalization * mad) * (kMadNormalization * mad);
    } else {
      out.scale(k) = 1.0;
      out.degenerate[static_cast<std::size_t>(k)] = true;
    }
  }
  return out;
}

double chi_square_quantile(int dof, double q) {
  if (dof < 1) throw std::invalid_argument("chi-square degrees of freedom must be >= 1");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("chi-square quantile level must lie in (0, 1)");
  const double shape = 0.5 * dof;
  auto cdf = [&](double x) { return boost::math::gamma_p(shape, 0.5 * x); };
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(dof));
  while (cdf(hi) < q) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = cdf(mid);
    if (std::abs(f - q) < 1e-13) return mid;
    (f < q ? lo : hi) = mid;
    if (hi - lo <= 1e-15 * hi) break;
  }
  return 0.5 * (lo + hi);
}

LeverageWeighter::LeverageWeighter(RobustLocationScale ls, const LeverageConfig& cfg)
    : ls_(std::move(ls)), cfg_(cfg), cutoff_(0.0) {
  cfg_.validate();
  cutoff_ = chi_square_quantile(static_cast<int>(ls_.location.size()), cfg_.quantile);
}

double LeverageWeighter::squared_distance(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return ((x - ls_.location).array().square() / ls_.scale.array()).sum();
}

double LeverageWeighter::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const double d2 = squared_distance(x);
  if (d2 <= cutoff_) return 1.0;
  return std::pow(cutoff_ / d2, 0.5 * cfg_.r);
}

double leverage_weight(const Eigen::VectorXd& x, const RobustLocationScale& ls, const LeverageConfig& cfg) {
  return LeverageWeighter(ls, cfg)(x);
}

std::vector<Eigen::VectorXd> leverage_weights(const LongitudinalDataset& data, const LeverageConfig& cfg) {
  const LeverageWeighter weigh(robust_location_scale(data.stacked_x()), cfg);
  std::vector<Eigen::VectorXd> out;
  out.reserve(data.n());
  for (const auto& s : data.subjects) {
    Eigen::VectorXd w(s.x.rows());
    for (Eigen::Index j = 0; j < s.x.rows(); ++j) w(j) = weigh(s.x.row(j).transpose());
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<Eigen::VectorXd> unit_weights(const LongitudinalDataset& data) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(data.n());
  for (const auto& s : data.subjects) out.push_back(Eigen::VectorXd::Ones(s.x.rows()));
  return out;
}

}  // namespace rtgee
