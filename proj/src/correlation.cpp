#include "rtgee/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace rtgee {

CorrelationKind parse_correlation_kind(const std::string& name) {
  if (name == "ind" || name == "independence") return CorrelationKind::Independence;
  if (name == "exc" || name == "exchangeable") return CorrelationKind::Exchangeable;
  if (name == "ar1") return CorrelationKind::AR1;
  if (name == "run" || name == "unstructured") return CorrelationKind::UnstructuredRobust;
  throw std::invalid_argument("unknown correlation kind '" + name + "'");
}

std::string to_string(CorrelationKind kind) {
  switch (kind) {
    case CorrelationKind::Independence: return "ind";
    case CorrelationKind::Exchangeable: return "exc";
    case CorrelationKind::AR1: return "ar1";
    case CorrelationKind::UnstructuredRobust: return "run";
  }
  return "unknown";
}

std::vector<Eigen::VectorXd> robust_residual_transform(const ResidualSet& residuals, const ScoreFunction& score) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(residuals.standardized.size());
  for (const auto& e : residuals.standardized) {
    out.push_back(e.unaryExpr([&](double u) { return score.psi(u); }));
  }
  return out;
}

Eigen::MatrixXd unstructured_moment_matrix(const TransformedResiduals& r) {
  const int T = r.num_times;
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(T, T);
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(T, T);
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const auto& v = r.values[i];
    const auto& t = r.times[i];
    for (Eigen::Index a = 0; a < v.size(); ++a) {
      for (Eigen::Index b = 0; b < v.size(); ++b) {
        sums(t[a], t[b]) += v(a) * v(b);
        counts(t[a], t[b]) += 1;
      }
    }
  }
  for (int j = 0; j < T; ++j) {
    if (counts(j, j) < 2) {
      throw DataError("time index " + std::to_string(j) + " is observed for fewer than two subjects");
    }
    for (int k = 0; k < j; ++k) {
      if (counts(j, k) == 0) {
        throw DataError("time pair (" + std::to_string(k) + ", " + std::to_string(j) +
                        ") is never observed jointly");
      }
    }
  }
  return sums.array() / counts.cast<double>().array();
}

Eigen::MatrixXd normalize_unstructured(const Eigen::MatrixXd& moments) {
  const auto T = moments.rows();
  Eigen::VectorXd inv_sd(T);
  for (Eigen::Index j = 0; j < T; ++j) {
    if (!(moments(j, j) > 0.0)) {
      throw DegenerateScaleError("robust residual variance is zero at time index " + std::to_string(j));
    }
    inv_sd(j) = 1.0 / std::sqrt(moments(j, j));
  }
  Eigen::MatrixXd out = inv_sd.asDiagonal() * moments * inv_sd.asDiagonal();
  for (Eigen::Index j = 0; j < T; ++j) {
    out(j, j) = 1.0;
    for (Eigen::Index k = 0; k < j; ++k) {
      const double v = std::clamp(0.5 * (out(j, k) + out(k, j)), -kCorrelationClip, kCorrelationClip);
      out(j, k) = v;
      out(k, j) = v;
    }
  }
  return out;
}

double repair_positive_definite(Eigen::MatrixXd& matrix) {
  auto min_eigen = [](const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  };
  const double lmin = min_eigen(matrix);
  if (lmin >= kMinEigenvalue) return 0.0;
  // Eigenvalues of (1-g)R + gI are (1-g)l + g, so the bound is met from
  // g = (1e-3 - lmin) / (1 - lmin) on; round up to the grid.
  int step = static_cast<int>(std::ceil((kMinEigenvalue - lmin) / (1.0 - lmin) * 1000.0 - 1e-9));
  step = std::clamp(step, 1, 1000);
  const Eigen::MatrixXd original = matrix;
  const auto n = matrix.rows();
  for (; step <= 1000; ++step) {
    const double g = step * 1e-3;
    matrix = (1.0 - g) * original + g * Eigen::MatrixXd::Identity(n, n);
    matrix.diagonal().setOnes();
    if (min_eigen(matrix) >= kMinEigenvalue) return g;
  }
  return 1.0;
}

CorrelationModel estimate_unstructured(const TransformedResiduals& r) {
  CorrelationModel model;
  model.kind = CorrelationKind::UnstructuredRobust;
  model.num_times = r.num_times;
  model.grid = normalize_unstructured(unstructured_moment_matrix(r));
  model.repair_shrinkage = repair_positive_definite(model.grid);
  return model;
}

namespace {

double mean_square(const TransformedResiduals& r) {
  double ss = 0.0;
  std::size_t count = 0;
  for (const auto& v : r.values) {
    ss += v.squaredNorm();
    count += static_cast<std::size_t>(v.size());
  }
  if (count == 0 || !(ss > 0.0)) throw DegenerateScaleError("robust residuals are identically zero");
  return ss / static_cast<double>(count);
}

std::size_t max_cluster_size(const TransformedResiduals& r) {
  std::size_t m = 1;
  for (const auto& v : r.values) m = std::max(m, static_cast<std::size_t>(v.size()));
  return m;
}

}  // namespace

CorrelationModel estimate_exchangeable(const TransformedResiduals& r) {
  double cross = 0.0;
  std::size_t pairs = 0;
  for (const auto& v : r.values) {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      for (Eigen::Index k = j + 1; k < v.size(); ++k) {
        cross += v(j) * v(k);
        ++pairs;
      }
    }
  }
  if (pairs == 0) throw DataError("exchangeable correlation needs a subject with at least two observations");
  CorrelationModel model;
  model.kind = CorrelationKind::Exchangeable;
  model.num_times = r.num_times;
  const double alpha = (cross / static_cast<double>(pairs)) / mean_square(r);
  // The lower bound keeps 1 + (m - 1) alpha >= 1e-3 for every cluster size.
  const double m = static_cast<double>(max_cluster_size(r));
  const double lower = m > 1.0 ? std::max(-kParametricAlphaClip, -(1.0 - kMinEigenvalue) / (m - 1.0)) : -kParametricAlphaClip;
  model.alpha = std::clamp(alpha, lower, kParametricAlphaClip);
  return model;
}

CorrelationModel estimate_ar1(const TransformedResiduals& r) {
  double cross = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const auto& v = r.values[i];
    const auto& t = r.times[i];
    for (Eigen::Index j = 0; j + 1 < v.size(); ++j) {
      if (t[j + 1] - t[j] == 1) {
        cross += v(j) * v(j + 1);
        ++pairs;
      }
    }
  }
  if (pairs == 0) throw DataError("AR(1) correlation needs at least one pair of adjacent time points");
  CorrelationModel model;
  model.kind = CorrelationKind::AR1;
  model.num_times = r.num_times;
  model.alpha = std::clamp((cross / static_cast<double>(pairs)) / mean_square(r), -kParametricAlphaClip,
                           kParametricAlphaClip);
  return model;
}

CorrelationModel estimate_correlation(CorrelationKind kind, const TransformedResiduals& r) {
  switch (kind) {
    case CorrelationKind::Independence: {
      CorrelationModel model;
      model.num_times = r.num_times;
      return model;
    }
    case CorrelationKind::Exchangeable: return estimate_exchangeable(r);
    case CorrelationKind::AR1: return estimate_ar1(r);
    case CorrelationKind::UnstructuredRobust: return estimate_unstructured(r);
  }
  throw std::invalid_argument("unknown correlation kind");
}

Eigen::MatrixXd build_R_i(const CorrelationModel& model, const std::vector<int>& times) {
  const auto m = static_cast<Eigen::Index>(times.size());
  for (int t : times) {
    if (t < 0 || (model.num_times > 0 && t >= model.num_times)) {
      throw DataError("time index " + std::to_string(t) + " lies outside the correlation grid");
    }
  }
  switch (model.kind) {
    case CorrelationKind::Independence:
      return Eigen::MatrixXd::Identity(m, m);
    case CorrelationKind::Exchangeable: {
      Eigen::MatrixXd R = Eigen::MatrixXd::Constant(m, m, model.alpha);
      R.diagonal().setOnes();
      return R;
    }
    case CorrelationKind::AR1: {
      Eigen::MatrixXd R(m, m);
      for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index k = 0; k < m; ++k) R(j, k) = std::pow(model.alpha, std::abs(times[j] - times[k]));
      }
      return R;
    }
    case CorrelationKind::UnstructuredRobust: {
      if (model.grid.rows() != model.num_times) throw DataError("unstructured correlation grid is not fitted");
      Eigen::MatrixXd R(m, m);
      for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index k = 0; k < m; ++k) R(j, k) = model.grid(times[j], times[k]);
      }
      return R;
    }
  }
  throw std::invalid_argument("unknown correlation kind");
}

}  // namespace rtgee
