#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "rtgee/residuals.hpp"

using namespace rtgee;

namespace {

LongitudinalDataset small_dataset() {
  std::vector<Subject> s;
  Eigen::MatrixXd x1(2, 2), x2(3, 2);
  x1 << 1.0, 0.5, -1.0, 2.0;
  x2 << 0.0, 1.0, 2.0, -1.0, 1.5, 0.0;
  s.push_back({"a", x1, Eigen::Vector2d(3.0, -1.0), {0, 1}});
  s.push_back({"b", x2, Eigen::Vector3d(0.5, 2.0, 4.0), {0, 1, 2}});
  return make_dataset(s, 2, 3);
}

double brute_phi(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto med = [](std::vector<double> w) {
    std::sort(w.begin(), w.end());
    const auto n = w.size();
    return n % 2 ? w[n / 2] : 0.5 * (w[n / 2 - 1] + w[n / 2]);
  };
  const double m = med(v);
  std::vector<double> dev;
  for (double e : v) dev.push_back(std::abs(e - m));
  const double s = 1.483 * med(dev);
  return s * s;
}

}  // namespace

TEST_CASE("pearson residuals") {
  const auto data = small_dataset();
  const Eigen::Vector2d beta(1.0, -0.5);
  const auto r = pearson_residuals(data, beta, 4.0);
  REQUIRE(r.raw.size() == 2);
  CHECK(r.raw[1].size() == 3);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Eigen::VectorXd eta = data.subjects[i].y - data.subjects[i].x * beta;
    for (Eigen::Index j = 0; j < eta.size(); ++j) {
      CHECK(r.raw[i](j) == doctest::Approx(eta(j)).epsilon(1e-15));
      CHECK(r.standardized[i](j) == doctest::Approx(eta(j) / 2.0).epsilon(1e-15));
    }
  }
  const auto zero = pearson_residuals(data, Eigen::Vector2d::Zero(), 1.0);
  CHECK(zero.raw[0](0) == 3.0);
  CHECK_THROWS_AS(pearson_residuals(data, beta, 0.0), std::invalid_argument);
}

TEST_CASE("exact fit gives zero residuals") {
  auto data = small_dataset();
  const Eigen::Vector2d beta(0.3, 0.7);
  for (auto& s : data.subjects) s.y = s.x * beta;
  const auto r = pearson_residuals(data, beta, 1.0);
  for (const auto& v : r.standardized) CHECK(v.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS(median({}));
}

TEST_CASE("MAD scale") {
  const std::vector<double> eta{1, 2, 3, 4, 5};
  CHECK(mad_phi(eta) == doctest::Approx(2.199289).epsilon(1e-12));

  std::vector<double> scaled, shifted;
  for (double e : eta) {
    scaled.push_back(-3.0 * e);
    shifted.push_back(e + 17.0);
  }
  CHECK(mad_phi(scaled) == doctest::Approx(9.0 * mad_phi(eta)).epsilon(1e-12));
  CHECK(mad_phi(shifted) == doctest::Approx(mad_phi(eta)).epsilon(1e-12));
  CHECK_THROWS_AS(mad_phi(std::vector<double>{0, 0, 0}), DegenerateScaleError);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  std::vector<double> v(1001);
  for (auto& e : v) e = z(rng);
  CHECK(mad_phi(v) == doctest::Approx(brute_phi(v)).epsilon(1e-14));
}

TEST_CASE("MAD scale resists 49% outliers") {
  std::vector<double> clean;
  for (int k = 0; k < 51; ++k) clean.push_back(std::sin(k) * 2.0);
  std::vector<double> near = clean, far = clean;
  for (int k = 0; k < 49; ++k) {
    near.push_back(1e3 + k);
    far.push_back(1e12 + k);
  }
  const double range = *std::max_element(clean.begin(), clean.end()) - *std::min_element(clean.begin(), clean.end());
  const double b = mad_phi(far);
  CHECK(std::isfinite(b));
  CHECK(b == mad_phi(near));
  CHECK(b <= std::pow(1.4826 * range, 2));
}

TEST_CASE("pooled MAD over subjects") {
  std::vector<Eigen::VectorXd> eta{Eigen::Vector2d(1, 2), Eigen::Vector3d(3, 4, 5)};
  CHECK(mad_phi(eta) == doctest::Approx(2.199289).epsilon(1e-12));
}
