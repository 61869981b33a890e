#pragma once

#include <string>
#include <vector>

namespace rtgee {

enum class ScoreKind { Identity, Huber, Tukey };

inline constexpr double kDefaultHuberC = 1.345;
/// Fixed biweight constant usable in place of a tuned b on large problems.
inline constexpr double kRecommendedTukeyB = 7.0414;
/// Initial-estimator constant (Gaussian efficiency 0.85).
inline constexpr double kInitialTukeyEfficiency = 0.85;

/// An odd score function psi applied to standardized residuals.
///
/// Identity gives the classical estimating equation, Huber clamps at +-c and
/// Tukey's biweight redescends to zero outside [-b, b].
class ScoreFunction {
 public:
  static ScoreFunction identity() { return {ScoreKind::Identity, 1.0}; }
  static ScoreFunction huber(double c = kDefaultHuberC);
  static ScoreFunction tukey(double b);

  ScoreKind kind() const { return kind_; }
  double constant() const { return constant_; }

  double psi(double u) const;
  /// Derivative of psi. Huber kinks at |u| = c evaluate to 0.
  double psi_prime(double u) const;

  /// Same family with a different constant (no-op for Identity).
  ScoreFunction with_constant(double constant) const;

  std::string describe() const;

  bool operator==(const ScoreFunction&) const = default;

 private:
  ScoreFunction(ScoreKind kind, double constant) : kind_(kind), constant_(constant) {}

  ScoreKind kind_;
  double constant_;
};

/// E[psi'(Z)], E[psi(Z)^2] and their efficiency ratio for Z ~ N(0, 1).
struct GaussianMoments {
  double kappa1 = 1.0;
  double kappa2 = 1.0;
  double efficiency = 1.0;
};

GaussianMoments gaussian_moments(const ScoreFunction& score);

/// Gaussian efficiency of the biweight with constant b.
double tukey_efficiency(double b);

/// Biweight constant whose Gaussian efficiency equals `target` (bisection, 1e-6).
double tukey_constant_for_efficiency(double target);

/// Biweight constants for the efficiency targets {0.70, 0.75, ..., 0.95} that
/// are >= min_efficiency, ascending. Empty when no target qualifies.
std::vector<double> candidate_b_grid(double min_efficiency);

ScoreKind parse_score_kind(const std::string& name);
std::string to_string(ScoreKind kind);

}  // namespace rtgee
