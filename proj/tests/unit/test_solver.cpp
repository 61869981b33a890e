#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "rtgee/simulation.hpp"
#include "rtgee/solver.hpp"

using namespace rtgee;

namespace {

LongitudinalDataset normal_data(int n, int m, int p, const Eigen::VectorXd& beta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<Subject> subjects;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd x(m, p);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < p; ++c) x(r, c) = z(rng);
    }
    Eigen::VectorXd e(m);
    const double shared = z(rng);
    for (int r = 0; r < m; ++r) e(r) = 0.6 * shared + 0.8 * z(rng);
    std::vector<int> t(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) t[static_cast<std::size_t>(r)] = r;
    subjects.push_back({"s" + std::to_string(i), x, x * beta + e, t});
  }
  return make_dataset(subjects, p, m);
}

FitConfig classical(CorrelationKind kind) {
  FitConfig cfg;
  cfg.lambda = 0.0;
  cfg.score = ScoreFunction::identity();
  cfg.correlation = kind;
  cfg.leverage.reset();
  cfg.epsilon = 1e-20;
  cfg.max_iter = 200;
  return cfg;
}

// Textbook exchangeable GEE with the same nuisance estimators: MAD scale,
// alpha = mean within-subject cross product over mean square, then GLS.
Eigen::VectorXd textbook_exchangeable_gee(const LongitudinalDataset& data, Eigen::VectorXd beta) {
  for (int it = 0; it < 500; ++it) {
    std::vector<double> pooled;
    for (const auto& s : data.subjects) {
      const Eigen::VectorXd r = s.y - s.x * beta;
      pooled.insert(pooled.end(), r.data(), r.data() + r.size());
    }
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    auto med = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      const auto k = v.size();
      return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
    };
    const double center = med(pooled);
    std::vector<double> dev;
    for (double e : pooled) dev.push_back(std::abs(e - center));
    const double phi = std::pow(1.483 * med(dev), 2);
    double cross = 0.0, square = 0.0;
    int pairs = 0, count = 0;
    int m = 0;
    for (const auto& s : data.subjects) {
      const Eigen::VectorXd e = (s.y - s.x * beta) / std::sqrt(phi);
      m = std::max(m, static_cast<int>(e.size()));
      for (Eigen::Index j = 0; j < e.size(); ++j) {
        square += e(j) * e(j);
        ++count;
        for (Eigen::Index k = j + 1; k < e.size(); ++k) {
          cross += e(j) * e(k);
          ++pairs;
        }
      }
    }
    const double lower = std::max(-0.99, -(1.0 - 1e-3) / (m - 1.0));
    const double alpha = std::clamp((cross / pairs) / (square / count), lower, 0.99);
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(data.p(), data.p());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(data.p());
    for (const auto& s : data.subjects) {
      const auto mi = s.y.size();
      Eigen::MatrixXd R = Eigen::MatrixXd::Constant(mi, mi, alpha);
      R.diagonal().setOnes();
      const Eigen::MatrixXd Rinv = R.inverse();
      lhs += s.x.transpose() * Rinv * s.x;
      rhs += s.x.transpose() * Rinv * s.y;
    }
    const Eigen::VectorXd next = lhs.ldlt().solve(rhs);
    if ((next - beta).squaredNorm() < 1e-26) return next;
    beta = next;
  }
  return beta;
}

}  // namespace

TEST_CASE("compute_delta") {
  const Eigen::Vector3d b0(2.0, 0.0, -0.5);
  CHECK(compute_delta(b0, 0.0, 1.0) == Eigen::Vector3d(0.0, 0.0, 0.0));
  const auto d = compute_delta(b0, 1.0, 1.0);
  CHECK(d(0) == 0.25);
  CHECK(d(1) == 1.0);
  CHECK(d(2) == 1.0);
  CHECK_THROWS(compute_delta(b0, -1.0, 1.0));
  int prev = 0;
  for (double lambda = 0.0; lambda < 10.0; lambda += 0.01) {
    const auto dl = compute_delta(b0, lambda, 1.0);
    const int shrunk = static_cast<int>((dl.array() == 1.0).count());
    CHECK(shrunk >= prev);
    prev = shrunk;
  }
}

TEST_CASE("initial estimator") {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(20);
  beta.head(3) << 0.7, 0.7, -0.4;
  std::vector<double> errors;
  for (int rep = 0; rep < 100; ++rep) {
    Rng rng(replicate_seed(99, static_cast<std::uint64_t>(rep)));
    const auto sim = simulate_dataset(low_dimensional_design(ErrorDistribution::Normal, ContaminationCase::Case1), rng);
    errors.push_back((initial_estimate(sim.data) - beta).norm());
  }
  std::sort(errors.begin(), errors.end());
  CHECK(errors[94] < 0.3);

  auto zero = normal_data(10, 3, 2, Eigen::Vector2d(1.0, 1.0), 3);
  for (auto& s : zero.subjects) s.y.setZero();
  CHECK(initial_estimate(zero).cwiseAbs().maxCoeff() == 0.0);

  Rng rng(5);
  const auto wide = simulate_dataset(high_dimensional_design(ErrorDistribution::StudentT3, ContaminationCase::Case1), rng);
  CHECK(initial_estimate(wide.data).allFinite());
}

TEST_CASE("estimating-function components") {
  const auto data = normal_data(6, 3, 2, Eigen::Vector2d(1.0, -1.0), 7);
  const Eigen::Vector2d beta(0.5, -0.2);
  CorrelationModel ind;
  ind.num_times = 3;
  const auto c = assemble_components(data, beta, 1.0, ind, ScoreFunction::identity(), unit_weights(data));
  Eigen::VectorXd classical_score = Eigen::VectorXd::Zero(2);
  for (const auto& s : data.subjects) classical_score += s.x.transpose() * (s.y - s.x * beta);
  CHECK((c.U - classical_score).cwiseAbs().maxCoeff() < 1e-12);

  const auto tk = ScoreFunction::tukey(1.0);
  const auto ct = assemble_components(data, beta, 1.0, ind, tk, unit_weights(data));
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Eigen::VectorXd r = data.subjects[i].y - data.subjects[i].x * beta;
    for (Eigen::Index j = 0; j < r.size(); ++j) {
      if (std::abs(r(j)) >= 1.0) CHECK(ct.h[i](j) == 0.0);
    }
  }
}

TEST_CASE("Gamma equals the Gaussian expectation of dh/dmu") {
  const double phi = 2.5, w = 0.7;
  for (const auto& score : {ScoreFunction::tukey(4.685), ScoreFunction::huber(1.345), ScoreFunction::identity()}) {
    std::vector<Subject> one{{"a", Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1), {0}}};
    const auto data = make_dataset(one, 1, 1);
    CorrelationModel ind;
    ind.num_times = 1;
    const auto c = assemble_components(data, Eigen::VectorXd::Zero(1), phi, ind, score,
                                       std::vector<Eigen::VectorXd>{Eigen::VectorXd::Constant(1, w)});
    // h(mu) = w psi((y - mu) / sqrt(phi)) with y = sqrt(phi) z; average the
    // central difference in mu against the normal density (Simpson, 20001 nodes).
    const double step = 1e-5, lim = 10.0;
    const int nodes = 20000;
    const double dz = 2.0 * lim / nodes;
    double expect = 0.0;
    for (int k = 0; k <= nodes; ++k) {
      const double z = -lim + k * dz;
      const double y = std::sqrt(phi) * z;
      const double fd = (w * score.psi((y - step) / std::sqrt(phi)) - w * score.psi((y + step) / std::sqrt(phi))) /
                        (2.0 * step);
      const double weight = (k == 0 || k == nodes) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      expect += weight * fd * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    }
    expect *= dz / 3.0;
    CHECK(c.gamma[0](0) == doctest::Approx(expect).epsilon(1e-5));
    CHECK(c.gamma[0](0) == doctest::Approx(-gaussian_moments(score).kappa1 * w / std::sqrt(phi)).epsilon(1e-12));
  }
}

TEST_CASE("lambda = 0, identity score, independence reproduces OLS") {
  Eigen::VectorXd beta(4);
  beta << 1.0, -0.5, 0.0, 2.0;
  const auto data = normal_data(30, 4, 4, beta, 11);
  const auto fit = solve(data, classical(CorrelationKind::Independence));
  REQUIRE(fit.converged);
  const Eigen::MatrixXd X = data.stacked_x();
  const Eigen::VectorXd ols = (X.transpose() * X).ldlt().solve(X.transpose() * data.stacked_y());
  CHECK((fit.beta_hat - ols).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("identity score with exchangeable correlation reproduces textbook GEE") {
  const auto data = normal_data(3, 4, 2, Eigen::Vector2d(0.8, -0.3), 13);
  const auto fit = solve(data, classical(CorrelationKind::Exchangeable));
  REQUIRE(fit.converged);
  const Eigen::VectorXd oracle = textbook_exchangeable_gee(data, initial_estimate(data));
  CHECK((fit.beta_hat - oracle).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("total shrinkage") {
  const auto data = normal_data(20, 3, 3, Eigen::Vector3d(1, 0, -1), 17);
  FitConfig cfg;
  cfg.lambda = 1e6;
  const auto fit = solve(data, cfg);
  CHECK(fit.converged);
  CHECK(fit.active_set.empty());
  CHECK(fit.beta_hat.cwiseAbs().maxCoeff() == 0.0);
  CHECK((fit.delta_hat.array() == 1.0).all());
}

TEST_CASE("robust fit: fixed point, exact zeros, symmetric sandwich") {
  Rng rng(replicate_seed(7, 0));
  const auto sim = simulate_dataset(low_dimensional_design(ErrorDistribution::StudentT3, ContaminationCase::Case2), rng);
  FitConfig cfg;
  cfg.score = ScoreFunction::tukey(4.685);
  cfg.correlation = CorrelationKind::Exchangeable;
  const auto inputs = prepare_inputs(sim.data, cfg.leverage);
  cfg.lambda = 0.02;
  cfg.epsilon = 1e-24;
  cfg.max_iter = 500;
  const auto fit = solve(sim.data, cfg, inputs);
  REQUIRE(fit.converged);
  REQUIRE(!fit.active_set.empty());
  CHECK(threshold_residual(sim.data, fit, cfg.score, inputs.weights).cwiseAbs().maxCoeff() < 1e-4);
  for (int j = 0; j < sim.data.p(); ++j) {
    if (fit.delta_hat(j) == 1.0) {
      CHECK(fit.beta_hat(j) == 0.0);
      CHECK(fit.covariance.row(j).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  CHECK((fit.covariance - fit.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  const auto cov = sandwich_covariance(sim.data, fit, cfg.score, inputs.weights, true);
  CHECK((cov - fit.covariance).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::MatrixXd block(fit.active_set.size(), fit.active_set.size());
  for (std::size_t r = 0; r < fit.active_set.size(); ++r) {
    for (std::size_t c = 0; c < fit.active_set.size(); ++c) block(r, c) = cov(fit.active_set[r], fit.active_set[c]);
  }
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(block).eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("sandwich reduces to the Liang-Zeger estimator on a hand instance") {
  // Subjects x = (1, 2), y = (2, 3) and x = (1, -1), y = (0, 1): beta = 7/7 = 1,
  // residuals (1, 1) and (-1, 2), sum_i (x_i'r_i)^2 = 9 + 9, bread sum x'x = 7.
  Eigen::MatrixXd x1(2, 1), x2(2, 1);
  x1 << 1, 2;
  x2 << 1, -1;
  std::vector<Subject> s{{"a", x1, Eigen::Vector2d(2, 3), {0, 1}}, {"b", x2, Eigen::Vector2d(0, 1), {0, 1}}};
  const auto data = make_dataset(s, 1, 2);
  auto cfg = classical(CorrelationKind::Independence);
  cfg.empirical_bread = false;
  const auto fit = solve(data, cfg);
  REQUIRE(fit.converged);
  CHECK(fit.beta_hat(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fit.covariance(0, 0) == doctest::Approx(18.0 / 49.0).epsilon(1e-10));
  CHECK(sandwich_covariance(data, fit, cfg.score, unit_weights(data))(0, 0) == doctest::Approx(18.0 / 49.0).epsilon(1e-10));
  CHECK(fit.standard_errors(2)(0) == doctest::Approx(std::sqrt(18.0 / 49.0 * 2.0)).epsilon(1e-10));
}

TEST_CASE("configuration validation") {
  FitConfig cfg;
  cfg.tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = FitConfig{};
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
