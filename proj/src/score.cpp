#include "rtgee/score.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace rtgee {

namespace {

constexpr int kSimpsonIntervals = 4000;  // per segment, even

double normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

// Composite Simpson on [a, b]. Endpoints are nudged one ulp inward so that
// one-sided limits are used at breakpoints of piecewise integrands.
template <typename F>
double simpson(F&& f, double a, double b) {
  const double h = (b - a) / kSimpsonIntervals;
  double sum = f(std::nextafter(a, b)) + f(std::nextafter(b, a));
  for (int k = 1; k < kSimpsonIntervals; ++k) {
    sum += (k % 2 == 1 ? 4.0 : 2.0) * f(a + k * h);
  }
  return sum * h / 3.0;
}

// Integrates f against the standard normal density over [-L, L], split at
// the score's breakpoints.
template <typename F>
double gaussian_expectation(F&& f, const ScoreFunction& score) {
  const double c = score.constant();
  const double limit = std::max(8.0, c);
  std::vector<double> nodes{-limit};
  if (score.kind() != ScoreKind::Identity && c < limit) nodes.push_back(-c);
  nodes.push_back(0.0);
  if (score.kind() != ScoreKind::Identity && c < limit) nodes.push_back(c);
  nodes.push_back(limit);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    total += simpson([&](double u) { return f(u) * normal_pdf(u); }, nodes[k], nodes[k + 1]);
  }
  return total;
}

}  // namespace

ScoreFunction ScoreFunction::huber(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("Huber constant must be positive");
  return {ScoreKind::Huber, c};
}

ScoreFunction ScoreFunction::tukey(double b) {
  if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("Tukey constant must be positive");
  return {ScoreKind::Tukey, b};
}

ScoreFunction ScoreFunction::with_constant(double constant) const {
  switch (kind_) {
    case ScoreKind::Identity: return identity();
    case ScoreKind::Huber: return huber(constant);
    case ScoreKind::Tukey: return tukey(constant);
  }
  return *this;
}

double ScoreFunction::psi(double u) const {
  switch (kind_) {
    case ScoreKind::Identity:
      return u;
    case ScoreKind::Huber:
      return std::clamp(u, -constant_, constant_);
    case ScoreKind::Tukey: {
      if (std::abs(u) >= constant_) return 0.0;
      const double t = (u / constant_) * (u / constant_);
      return u * (1.0 - t) * (1.0 - t);
    }
  }
  return u;
}

double ScoreFunction::psi_prime(double u) const {
  switch (kind_) {
    case ScoreKind::Identity:
      return 1.0;
    case ScoreKind::Huber:
      return std::abs(u) < constant_ ? 1.0 : 0.0;
    case ScoreKind::Tukey: {
      if (std::abs(u) >= constant_) return 0.0;
      const double t = (u / constant_) * (u / constant_);
      return (1.0 - t) * (1.0 - 5.0 * t);
    }
  }
  return 1.0;
}

std::string ScoreFunction::describe() const {
  std::ostringstream out;
  out << to_string(kind_);
  if (kind_ != ScoreKind::Identity) out << "(" << constant_ << ")";
  return out.str();
}

GaussianMoments gaussian_moments(const ScoreFunction& score) {
  if (score.kind() == ScoreKind::Identity) return {1.0, 1.0, 1.0};
  GaussianMoments m;
  m.kappa1 = gaussian_expectation([&](double u) { return score.psi_prime(u); }, score);
  m.kappa2 = gaussian_expectation([&](double u) {
    const double v = score.psi(u);
    return v * v;
  }, score);
  m.efficiency = std::min(1.0, m.kappa1 * m.kappa1 / m.kappa2);
  return m;
}

double tukey_efficiency(double b) { return gaussian_moments(ScoreFunction::tukey(b)).efficiency; }

double tukey_constant_for_efficiency(double target) {
  if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("efficiency target must lie in (0, 1)");
  double lo = 0.5;
  double hi = 50.0;
  if (tukey_efficiency(lo) > target) throw std::invalid_argument("efficiency target below search range");
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (tukey_efficiency(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> candidate_b_grid(double min_efficiency) {
  if (!(min_efficiency > 0.0 && min_efficiency < 1.0)) {
    throw std::invalid_argument("min_efficiency must lie in (0, 1)");
  }
  constexpr std::array<double, 6> targets{0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
  std::vector<double> grid;
  for (double t : targets) {
    if (t >= min_efficiency) grid.push_back(tukey_constant_for_efficiency(t));
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

ScoreKind parse_score_kind(const std::string& name) {
  if (name == "identity") return ScoreKind::Identity;
  if (name == "huber") return ScoreKind::Huber;
  if (name == "tukey") return ScoreKind::Tukey;
  throw std::invalid_argument("unknown score kind '" + name + "'");
}

std::string to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::Identity: return "identity";
    case ScoreKind::Huber: return "huber";
    case ScoreKind::Tukey: return "tukey";
  }
  return "unknown";
}

}  // namespace rtgee
