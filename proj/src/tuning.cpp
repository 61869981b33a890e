#include "rtgee/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "rtgee/residuals.hpp"

namespace rtgee {

namespace {

constexpr int kGridSize = 30;
constexpr double kGridSpan = 1e-4;

double active_log_det(const FitResult& fit) {
  const auto a = static_cast<Eigen::Index>(fit.active_set.size());
  if (a == 0) return 0.0;
  Eigen::MatrixXd block(a, a);
  for (Eigen::Index r = 0; r < a; ++r) {
    for (Eigen::Index c = 0; c < a; ++c) block(r, c) = fit.covariance(fit.active_set[r], fit.active_set[c]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(block);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

BSelection select_b(const LongitudinalDataset& data, const FitConfig& base, double lambda,
                    const std::vector<double>& candidates, const FitInputs& inputs, std::optional<double> keep) {
  std::vector<double> constants = candidates;
  if (base.score.kind() == ScoreKind::Identity || constants.empty()) {
    if (constants.empty() && base.score.kind() != ScoreKind::Identity) {
      throw std::invalid_argument("select_b needs at least one candidate constant");
    }
    constants = {base.score.constant()};
  }
  std::sort(constants.begin(), constants.end());

  std::optional<BSelection> best;
  std::optional<FitResult> kept;
  for (double b : constants) {
    FitConfig cfg = base;
    cfg.lambda = lambda;
    cfg.score = base.score.with_constant(b);
    FitResult fit;
    try {
      fit = solve(data, cfg, inputs);
    } catch (const std::exception&) {
      continue;
    }
    if (!fit.converged) continue;
    if (keep && *keep == b) kept = fit;
    const double log_det = active_log_det(fit);
    if (!best || log_det < best->log_det - 1e-10 * std::max(1.0, std::abs(best->log_det))) best = BSelection{b, std::move(fit), log_det, std::nullopt};
  }
  if (!best) throw std::runtime_error("no candidate constant produced a converged fit at lambda = " + std::to_string(lambda));
  best->kept = std::move(kept);
  return std::move(*best);
}

int degrees_of_freedom(const Eigen::VectorXd& delta) {
  return static_cast<int>((delta.array() != 1.0).count());
}

double rpwd(const LongitudinalDataset& data, const FitResult& fit, const ScoreFunction& score,
            const std::vector<Eigen::VectorXd>& weights, double phi) {
  if (!(phi > 0.0)) throw std::invalid_argument("RPWD needs a positive scale");
  const double inv_sqrt_phi = 1.0 / std::sqrt(phi);
  double deviance = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto& subj = data.subjects[i];
    const Eigen::VectorXd r = subj.y - subj.x * fit.beta_hat;
    Eigen::VectorXd h(r.size());
    for (Eigen::Index j = 0; j < r.size(); ++j) h(j) = weights[i](j) * score.psi(r(j) * inv_sqrt_phi);
    Eigen::LLT<Eigen::MatrixXd> llt(build_R_i(fit.correlation, subj.times));
    if (llt.info() != Eigen::Success) throw SingularSystemError("working correlation is singular in RPWD");
    deviance += h.dot(llt.solve(h));
  }
  return deviance + degrees_of_freedom(fit.delta_hat) * std::log(static_cast<double>(data.n()));
}

double rpwd_scale(const LongitudinalDataset& data, const FitInputs& inputs) {
  if (inputs.reference_phi > 0.0) return inputs.reference_phi;
  return mad_phi(pearson_residuals(data, inputs.beta_init, 1.0).raw);
}

double rpwd_constant(const FitConfig& base, const std::vector<double>& b_candidates) {
  if (base.score.kind() == ScoreKind::Identity || b_candidates.empty()) return base.score.constant();
  return *std::max_element(b_candidates.begin(), b_candidates.end());
}

TuningResult select_lambda(const LongitudinalDataset& data, const FitConfig& base, const std::vector<double>& lambda_grid,
                           const std::vector<double>& b_candidates, const FitInputs& inputs,
                           const TuningOptions& options) {
  if (lambda_grid.empty()) throw std::invalid_argument("lambda grid is empty");
  std::vector<double> grid = lambda_grid;
  std::sort(grid.begin(), grid.end());

  TuningResult out;
  out.rpwd_constant = rpwd_constant(base, b_candidates);
  const ScoreFunction rpwd_score = base.score.with_constant(out.rpwd_constant);
  const double phi = rpwd_scale(data, inputs);

  std::optional<std::size_t> best;
  std::optional<BSelection> empty_model;
  for (double lambda : grid) {
    TuningPathEntry entry;
    entry.lambda = lambda;
    const Eigen::VectorXd delta = compute_delta(inputs.beta_init, lambda, base.tau);
    std::optional<BSelection> sel;
    try {
      if (degrees_of_freedom(delta) == 0) {
        if (!empty_model) empty_model = select_b(data, base, lambda, {out.rpwd_constant}, inputs, out.rpwd_constant);
        sel = *empty_model;
        sel->fit.delta_hat = delta;
        if (sel->kept) sel->kept->delta_hat = delta;
      } else {
        sel = select_b(data, base, lambda, b_candidates, inputs, out.rpwd_constant);
      }
      entry.b_opt = sel->b_opt;
      entry.df = degrees_of_freedom(sel->fit.delta_hat);
      entry.rpwd = rpwd(data, sel->kept ? *sel->kept : sel->fit, rpwd_score, inputs.weights, phi);
      entry.converged = true;
    } catch (const std::exception&) {
      entry.converged = false;
      entry.rpwd = std::numeric_limits<double>::quiet_NaN();
    }
    out.rpwd_path.push_back(entry);
    if (entry.converged) {
      if (!best || entry.rpwd < out.rpwd_path[*best].rpwd) {
        best = out.rpwd_path.size() - 1;
        out.best = sel->fit;
      }
      if (options.keep_fits) out.fits.emplace(lambda, sel->fit);
    }
  }
  if (!best) throw std::runtime_error("no lambda on the grid produced a converged fit");
  out.lambda_opt = out.rpwd_path[*best].lambda;
  out.b_opt = out.rpwd_path[*best].b_opt;
  return out;
}

TuningResult select_lambda(const LongitudinalDataset& data, const FitConfig& base, const std::vector<double>& lambda_grid,
                           const std::vector<double>& b_candidates) {
  return select_lambda(data, base, lambda_grid, b_candidates, prepare_inputs(data, base.leverage));
}

std::vector<double> default_lambda_grid(const Eigen::VectorXd& beta0, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  const double lambda_max = std::pow(beta0.cwiseAbs().maxCoeff(), 1.0 + tau);
  std::vector<double> grid{0.0};
  if (!(lambda_max > 0.0)) return grid;
  const double lo = std::log(kGridSpan * lambda_max);
  const double hi = std::log(lambda_max);
  for (int k = 0; k < kGridSize; ++k) {
    grid.push_back(k == kGridSize - 1 ? lambda_max : std::exp(lo + (hi - lo) * k / (kGridSize - 1)));
  }
  return grid;
}

std::vector<double> refine_lambda_grid(const std::vector<double>& grid, const Eigen::VectorXd& beta0, double tau,
                                       int max_active) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (max_active < 0) throw std::invalid_argument("max_active must be nonnegative");
  std::vector<double> breaks;
  for (Eigen::Index j = 0; j < beta0.size(); ++j) {
    if (beta0(j) != 0.0) breaks.push_back(std::pow(std::abs(beta0(j)), 1.0 + tau));
  }
  std::sort(breaks.begin(), breaks.end(), std::greater<>());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::vector<double> out = grid;
  const auto k_max = std::min<std::size_t>(static_cast<std::size_t>(max_active), breaks.size());
  for (std::size_t k = 1; k < k_max + (k_max < breaks.size() ? 1 : 0); ++k) {
    out.push_back(std::sqrt(breaks[k - 1] * breaks[k]));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> default_lambda_grid(const LongitudinalDataset& data, double tau) {
  return default_lambda_grid(initial_estimate(data), tau);
}

}  // namespace rtgee
