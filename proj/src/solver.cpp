#include "rtgee/solver.hpp"

#include <cmath>
#include <map>

#include "rtgee/residuals.hpp"

namespace rtgee {

void FitConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be a finite nonnegative number");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be positive");
  if (leverage) leverage->validate();
}

namespace {

constexpr double kInitialRidge = 1e-4;
constexpr int kInitialMaxIter = 50;
constexpr double kRetryRidge = 1e-8;
constexpr std::size_t kGramBudget = 20'000'000;

/// N / (N - p) when N > p, else 1: residual-scale deflation of a p-parameter fit.
double dof_inflation(Eigen::Index N, Eigen::Index p) {
  return N > p ? static_cast<double>(N) / static_cast<double>(N - p) : 1.0;
}

double initial_tukey_constant() {
  static const double b = tukey_constant_for_efficiency(kInitialTukeyEfficiency);
  return b;
}

std::vector<int> active_indices(const Eigen::VectorXd& delta) {
  std::vector<int> out;
  for (Eigen::Index j = 0; j < delta.size(); ++j) {
    if (delta(j) < 1.0) out.push_back(static_cast<int>(j));
  }
  return out;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
  return out;
}

Eigen::VectorXd select_entries(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(idx[k]);
  return out;
}

TransformedResiduals transformed_residuals(const LongitudinalDataset& data, const std::vector<Eigen::VectorXd>& raw,
                                           double phi, const ScoreFunction& score) {
  TransformedResiduals t;
  t.num_times = data.num_times();
  t.values.reserve(raw.size());
  t.times.reserve(raw.size());
  const double inv_sqrt_phi = 1.0 / std::sqrt(phi);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    t.values.push_back(raw[i].unaryExpr([&](double r) { return score.psi(r * inv_sqrt_phi); }));
    t.times.push_back(data.subjects[i].times);
  }
  return t;
}

NuisanceEstimate nuisance_from_raw(const LongitudinalDataset& data, const std::vector<Eigen::VectorXd>& raw,
                                   const ScoreFunction& score, CorrelationKind kind) {
  NuisanceEstimate out;
  out.phi = mad_phi(raw);
  out.correlation = estimate_correlation(kind, transformed_residuals(data, raw, out.phi, score));
  return out;
}

/// Inverse working correlation matrices keyed by the subject's time pattern.
class InverseCache {
 public:
  explicit InverseCache(const CorrelationModel& model) : model_(model) {}

  const Eigen::MatrixXd& get(const std::vector<int>& times) {
    auto it = cache_.find(times);
    if (it != cache_.end()) return it->second;
    const Eigen::MatrixXd R = build_R_i(model_, times);
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    if (llt.info() != Eigen::Success) throw SingularSystemError("working correlation matrix is not positive definite");
    return cache_.emplace(times, llt.solve(Eigen::MatrixXd::Identity(R.rows(), R.cols()))).first->second;
  }

 private:
  const CorrelationModel& model_;
  std::map<std::vector<int>, Eigen::MatrixXd> cache_;
};

/// Stacked design restricted to the active columns, plus subject offsets.
struct ActiveProblem {
  const LongitudinalDataset& data;
  const std::vector<Eigen::VectorXd>& weights;
  ScoreFunction score;
  CorrelationKind kind;
  Eigen::MatrixXd x_active;  // N x |A|
  Eigen::VectorXd y;
  std::vector<Eigen::Index> offsets;

  ActiveProblem(const LongitudinalDataset& d, const std::vector<Eigen::VectorXd>& w, const ScoreFunction& s,
                CorrelationKind k, const std::vector<int>& active)
      : data(d), weights(w), score(s), kind(k), x_active(select_columns(d.stacked_x(), active)), y(d.stacked_y()) {
    Eigen::Index row = 0;
    for (const auto& subj : d.subjects) {
      offsets.push_back(row);
      row += subj.x.rows();
    }
  }

  std::vector<Eigen::VectorXd> raw_residuals(const Eigen::VectorXd& beta_active) const {
    const Eigen::VectorXd r = y - x_active * beta_active;
    std::vector<Eigen::VectorXd> out;
    out.reserve(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
      out.push_back(r.segment(offsets[i], data.subjects[i].x.rows()));
    }
    return out;
  }
};

/// Everything one Fisher step or one sandwich evaluation needs at a given beta.
struct Evaluation {
  NuisanceEstimate nuisance;
  Eigen::VectorXd whitened_h;  // stacked R_i^{-1} h_i
  Eigen::MatrixXd whitened_x;  // stacked R_i^{-1} W_i X_{i,A}
  double mean_psi_prime = 0.0;
};

Evaluation evaluate_with(const ActiveProblem& prob, const Eigen::VectorXd& beta_active, NuisanceEstimate nuisance,
                         bool with_design) {
  const auto raw = prob.raw_residuals(beta_active);
  Evaluation ev;
  ev.nuisance = std::move(nuisance);
  const double inv_sqrt_phi = 1.0 / std::sqrt(ev.nuisance.phi);
  InverseCache inverses(ev.nuisance.correlation);
  const auto N = prob.x_active.rows();
  ev.whitened_h.resize(N);
  if (with_design) ev.whitened_x.resize(N, prob.x_active.cols());
  for (std::size_t i = 0; i < prob.data.n(); ++i) {
    const auto& subj = prob.data.subjects[i];
    const auto m = subj.x.rows();
    const auto& w = prob.weights[i];
    const Eigen::MatrixXd& Rinv = inverses.get(subj.times);
    Eigen::VectorXd h(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double e = raw[i](j) * inv_sqrt_phi;
      h(j) = w(j) * prob.score.psi(e);
      ev.mean_psi_prime += prob.score.psi_prime(e);
    }
    ev.whitened_h.segment(prob.offsets[i], m).noalias() = Rinv * h;
    if (with_design) {
      ev.whitened_x.middleRows(prob.offsets[i], m).noalias() =
          Rinv * (w.asDiagonal() * prob.x_active.middleRows(prob.offsets[i], m));
    }
  }
  if (N > 0) ev.mean_psi_prime /= static_cast<double>(N);
  return ev;
}

Evaluation evaluate(const ActiveProblem& prob, const Eigen::VectorXd& beta_active, bool with_design) {
  return evaluate_with(prob, beta_active,
                       nuisance_from_raw(prob.data, prob.raw_residuals(beta_active), prob.score, prob.kind),
                       with_design);
}

Eigen::VectorXd solve_linear(const Eigen::MatrixXd& K, const Eigen::VectorXd& rhs) {
  auto attempt = [&](const Eigen::MatrixXd& A, Eigen::VectorXd& out) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    if (!(lu.rcond() > 1e-14)) return false;
    out = lu.solve(rhs);
    return out.allFinite();
  };
  Eigen::VectorXd out;
  if (attempt(K, out)) return out;
  const Eigen::MatrixXd ridged = K + kRetryRidge * Eigen::MatrixXd::Identity(K.rows(), K.cols());
  if (attempt(ridged, out)) return out;
  throw SingularSystemError("Fisher scoring system is singular even after a 1e-8 ridge");
}

/// Sigma^{-1} H Sigma^{-T} on the active block, symmetrized.
/// `xrx` is sum_i X_i' R_i^{-1} W_i X_i on the active columns.
Eigen::MatrixXd active_sandwich(const ActiveProblem& prob, const Evaluation& ev, const Eigen::MatrixXd& xrx,
                                double kappa1) {
  const auto a = prob.x_active.cols();
  if (a == 0) return Eigen::MatrixXd(0, 0);
  const double phi = ev.nuisance.phi;
  const Eigen::MatrixXd sigma = -(kappa1 / phi) * xrx;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(a, a);
  for (std::size_t i = 0; i < prob.data.n(); ++i) {
    const auto m = prob.data.subjects[i].x.rows();
    const Eigen::VectorXd g =
        prob.x_active.middleRows(prob.offsets[i], m).transpose() * ev.whitened_h.segment(prob.offsets[i], m);
    H.selfadjointView<Eigen::Lower>().rankUpdate(g);
  }
  H = H.selfadjointView<Eigen::Lower>();
  H /= phi;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sigma);
  if (!(lu.rcond() > 1e-14)) throw SingularSystemError("sandwich bread matrix is singular");
  const Eigen::MatrixXd left = lu.solve(H);                      // Sigma^{-1} H
  const Eigen::MatrixXd cov = lu.solve(left.transpose()).transpose();  // (Sigma^{-1} (Sigma^{-1} H)')'
  return 0.5 * (cov + cov.transpose());
}

std::vector<PatternGram> restrict_gram(const std::vector<PatternGram>& full, const std::vector<int>& active) {
  const auto a = static_cast<Eigen::Index>(active.size());
  std::vector<PatternGram> out;
  out.reserve(full.size());
  for (const auto& pg : full) {
    PatternGram r;
    r.times = pg.times;
    r.blocks.reserve(pg.blocks.size());
    for (const auto& b : pg.blocks) {
      Eigen::MatrixXd sub(a, a);
      for (Eigen::Index c = 0; c < a; ++c) {
        for (Eigen::Index q = 0; q < a; ++q) sub(q, c) = b(active[q], active[c]);
      }
      r.blocks.push_back(std::move(sub));
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// sum_i X_i' R_i^{-1} W_i X_i from cached pattern blocks.
Eigen::MatrixXd gram_product(const std::vector<PatternGram>& gram, const CorrelationModel& model) {
  const auto a = gram.front().blocks.front().rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(a, a);
  InverseCache inverses(model);
  for (const auto& pg : gram) {
    const Eigen::MatrixXd& Rinv = inverses.get(pg.times);
    const auto m = Rinv.rows();
    for (Eigen::Index k = 0; k < m; ++k) {
      for (Eigen::Index l = 0; l < m; ++l) K.noalias() += Rinv(k, l) * pg.blocks[static_cast<std::size_t>(k * m + l)];
    }
  }
  return K;
}

Eigen::MatrixXd embed(const Eigen::MatrixXd& block, const std::vector<int>& active, Eigen::Index p) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t b = 0; b < active.size(); ++b) {
      out(active[a], active[b]) = block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  return out;
}

}  // namespace

std::shared_ptr<const std::vector<PatternGram>> pattern_gram(const LongitudinalDataset& data,
                                                             const std::vector<Eigen::VectorXd>& weights,
                                                             std::size_t max_entries) {
  std::map<std::vector<int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.n(); ++i) groups[data.subjects[i].times].push_back(i);
  const std::size_t p = data.p();
  std::size_t total = 0;
  for (const auto& [times, members] : groups) total += times.size() * times.size() * p * p;
  if (total > max_entries) return nullptr;

  auto out = std::make_shared<std::vector<PatternGram>>();
  for (const auto& [times, members] : groups) {
    const auto m = static_cast<Eigen::Index>(times.size());
    const auto g = static_cast<Eigen::Index>(members.size());
    std::vector<Eigen::MatrixXd> rows(static_cast<std::size_t>(m), Eigen::MatrixXd(g, static_cast<Eigen::Index>(p)));
    std::vector<Eigen::VectorXd> w(static_cast<std::size_t>(m), Eigen::VectorXd(g));
    for (Eigen::Index s = 0; s < g; ++s) {
      const std::size_t i = members[static_cast<std::size_t>(s)];
      for (Eigen::Index k = 0; k < m; ++k) {
        rows[static_cast<std::size_t>(k)].row(s) = data.subjects[i].x.row(k);
        w[static_cast<std::size_t>(k)](s) = weights[i](k);
      }
    }
    PatternGram pg;
    pg.times = times;
    for (Eigen::Index k = 0; k < m; ++k) {
      for (Eigen::Index l = 0; l < m; ++l) {
        const auto& xk = rows[static_cast<std::size_t>(k)];
        const auto& xl = rows[static_cast<std::size_t>(l)];
        pg.blocks.push_back(xk.transpose() * (w[static_cast<std::size_t>(l)].asDiagonal() * xl));
      }
    }
    out->push_back(std::move(pg));
  }
  return out;
}

Eigen::VectorXd FitResult::standard_errors(std::size_t n) const {
  const double a = static_cast<double>(active_set.size());
  const double nn = static_cast<double>(n);
  const double scale = nn > a ? nn / (nn - a) : 1.0;
  return (scale * covariance.diagonal().cwiseMax(0.0)).cwiseSqrt();
}

FitInputs prepare_inputs(const LongitudinalDataset& data, const std::optional<LeverageConfig>& leverage) {
  return make_inputs(data, initial_estimate(data), leverage ? leverage_weights(data, *leverage) : unit_weights(data));
}

FitInputs make_inputs(const LongitudinalDataset& data, Eigen::VectorXd beta_init, std::vector<Eigen::VectorXd> weights) {
  FitInputs in;
  in.beta_init = std::move(beta_init);
  in.weights = std::move(weights);
  in.gram = pattern_gram(data, in.weights, kGramBudget);
  try {
    in.reference_phi = mad_phi(pearson_residuals(data, in.beta_init, 1.0).raw) *
                       dof_inflation(static_cast<Eigen::Index>(data.num_observations()), static_cast<Eigen::Index>(data.p()));
  } catch (const DegenerateScaleError&) {
    in.reference_phi = 0.0;
  }
  return in;
}

Eigen::VectorXd initial_estimate(const LongitudinalDataset& data) {
  const Eigen::MatrixXd X = data.stacked_x();
  const Eigen::VectorXd y = data.stacked_y();
  const auto p = X.cols();
  const Eigen::MatrixXd ridge = kInitialRidge * Eigen::MatrixXd::Identity(p, p);
  auto weighted_ls = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
    Eigen::MatrixXd gram = ridge;
    gram.selfadjointView<Eigen::Lower>().rankUpdate((X.array().colwise() * w.array().sqrt()).matrix().transpose());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram.selfadjointView<Eigen::Lower>());
    if (ldlt.info() != Eigen::Success) throw SingularSystemError("initial estimator system is singular");
    Eigen::VectorXd out = ldlt.solve(X.transpose() * (w.array() * y.array()).matrix());
    if (!out.allFinite()) throw SingularSystemError("initial estimator produced non-finite values");
    return out;
  };

  Eigen::VectorXd beta = weighted_ls(Eigen::VectorXd::Ones(X.rows()));
  const Eigen::VectorXd r0 = y - X * beta;
  std::vector<double> abs_dev(r0.data(), r0.data() + r0.size());
  const double center = median(abs_dev);
  for (auto& v : abs_dev) v = std::abs(v - center);
  const double scale = 1.4826 * median(std::move(abs_dev)) * std::sqrt(dof_inflation(X.rows(), p));
  if (!(scale > 0.0)) return beta;
  const ScoreFunction tukey = ScoreFunction::tukey(initial_tukey_constant());
  for (int it = 0; it < kInitialMaxIter; ++it) {
    const Eigen::VectorXd r = y - X * beta;
    Eigen::VectorXd w(r.size());
    for (Eigen::Index k = 0; k < r.size(); ++k) {
      const double u = r(k) / scale;
      w(k) = u == 0.0 ? 1.0 : tukey.psi(u) / u;
    }
    Eigen::VectorXd next = weighted_ls(w);
    const double change = (next - beta).squaredNorm();
    beta = std::move(next);
    if (change < 1e-12) break;
  }
  return beta;
}

Eigen::VectorXd compute_delta(const Eigen::VectorXd& beta0, double lambda, double tau) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  Eigen::VectorXd delta(beta0.size());
  for (Eigen::Index j = 0; j < beta0.size(); ++j) {
    if (lambda == 0.0) {
      delta(j) = 0.0;
    } else if (beta0(j) == 0.0) {
      delta(j) = 1.0;
    } else {
      delta(j) = std::min(1.0, lambda / std::pow(std::abs(beta0(j)), 1.0 + tau));
    }
  }
  return delta;
}

EEComponents assemble_components(const LongitudinalDataset& data, const Eigen::VectorXd& beta, double phi,
                                 const CorrelationModel& correlation, const ScoreFunction& score,
                                 const std::vector<Eigen::VectorXd>& weights) {
  if (!(phi > 0.0)) throw std::invalid_argument("scale parameter phi must be positive");
  const double kappa1 = gaussian_moments(score).kappa1;
  const double sqrt_phi = std::sqrt(phi);
  const auto p = data.p();
  EEComponents c;
  c.U = Eigen::VectorXd::Zero(p);
  c.J = Eigen::MatrixXd::Zero(p, p);
  const ResidualSet res = pearson_residuals(data, beta, phi);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto& subj = data.subjects[i];
    const auto m = subj.x.rows();
    Eigen::MatrixXd V = build_R_i(correlation, subj.times) * sqrt_phi;  // R_i A_i^{1/2}, A_i = phi I
    Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
    if (!lu.isInvertible()) throw SingularSystemError("V_i is singular for subject '" + subj.id + "'");
    Eigen::VectorXd h(m);
    for (Eigen::Index j = 0; j < m; ++j) h(j) = weights[i](j) * score.psi(res.standardized[i](j));
    Eigen::VectorXd gamma = -(kappa1 / sqrt_phi) * weights[i];
    Eigen::MatrixXd omega = lu.solve(Eigen::MatrixXd(gamma.asDiagonal()));
    c.U += subj.x.transpose() * lu.solve(h);
    c.J += subj.x.transpose() * omega * subj.x;
    c.D.push_back(subj.x);
    c.V.push_back(std::move(V));
    c.h.push_back(std::move(h));
    c.gamma.push_back(std::move(gamma));
    c.omega.push_back(std::move(omega));
  }
  return c;
}

NuisanceEstimate estimate_nuisance(const LongitudinalDataset& data, const Eigen::VectorXd& beta,
                                   const ScoreFunction& score, CorrelationKind kind) {
  return nuisance_from_raw(data, pearson_residuals(data, beta, 1.0).raw, score, kind);
}

FitResult solve(const LongitudinalDataset& data, const FitConfig& config) {
  config.validate();
  return solve(data, config, prepare_inputs(data, config.leverage));
}

FitResult solve(const LongitudinalDataset& data, const FitConfig& config, const FitInputs& inputs) {
  config.validate();
  const auto p = static_cast<Eigen::Index>(data.p());
  if (inputs.beta_init.size() != p || inputs.weights.size() != data.n()) {
    throw std::invalid_argument("fit inputs do not match the dataset");
  }
  const double kappa1 = gaussian_moments(config.score).kappa1;

  FitResult fit;
  fit.delta_hat = compute_delta(inputs.beta_init, config.lambda, config.tau);
  fit.active_set = active_indices(fit.delta_hat);
  const ActiveProblem prob(data, inputs.weights, config.score, config.correlation, fit.active_set);
  const Eigen::VectorXd delta_a = select_entries(fit.delta_hat, fit.active_set);
  const Eigen::VectorXd G = delta_a.array() / (1.0 - delta_a.array());

  Eigen::VectorXd beta = select_entries(inputs.beta_init, fit.active_set);
  if (fit.active_set.empty()) {
    fit.converged = true;
  }
  std::vector<PatternGram> active_gram;
  if (inputs.gram && !fit.active_set.empty()) active_gram = restrict_gram(*inputs.gram, fit.active_set);
  for (int it = 0; it < config.max_iter && !fit.active_set.empty(); ++it) {
    const bool use_gram = !active_gram.empty();
    const Evaluation ev = evaluate(prob, beta, !use_gram);
    const double phi = ev.nuisance.phi;
    const Eigen::VectorXd U = prob.x_active.transpose() * ev.whitened_h / std::sqrt(phi);
    Eigen::MatrixXd K = (kappa1 / phi) * (use_gram ? gram_product(active_gram, ev.nuisance.correlation)
                                                   : Eigen::MatrixXd(prob.x_active.transpose() * ev.whitened_x));
    K.diagonal() += G;
    const Eigen::VectorXd step = solve_linear(K, U - G.cwiseProduct(beta));
    beta += step;
    fit.iterations = it + 1;
    if (!beta.allFinite()) break;
    if (step.squaredNorm() < config.epsilon) {
      fit.converged = true;
      break;
    }
  }

  fit.beta_hat = Eigen::VectorXd::Zero(p);
  for (std::size_t k = 0; k < fit.active_set.size(); ++k) fit.beta_hat(fit.active_set[k]) = beta(static_cast<Eigen::Index>(k));
  fit.covariance = Eigen::MatrixXd::Zero(p, p);
  if (!beta.allFinite()) {
    fit.converged = false;
    fit.notes.push_back("iterates diverged to non-finite values");
    return fit;
  }
  const bool use_gram = !active_gram.empty();
  const Evaluation final_ev = evaluate(prob, beta, !use_gram);
  fit.phi_hat = final_ev.nuisance.phi;
  fit.correlation = final_ev.nuisance.correlation;
  if (fit.converged && !fit.active_set.empty()) {
    const double bread = config.empirical_bread ? final_ev.mean_psi_prime : kappa1;
    const Eigen::MatrixXd xrx = use_gram ? gram_product(active_gram, fit.correlation)
                                         : Eigen::MatrixXd(prob.x_active.transpose() * final_ev.whitened_x);
    fit.covariance = embed(active_sandwich(prob, final_ev, xrx, bread), fit.active_set, p);
  }
  const auto T = static_cast<std::size_t>(data.num_times());
  if (config.correlation == CorrelationKind::UnstructuredRobust && T * T > data.n()) {
    fit.notes.push_back("number of time points is large relative to the number of subjects (T^2 > n)");
  }
  if (fit.correlation.repair_shrinkage > 0.0) {
    fit.notes.push_back("working correlation shrunk toward identity by " + std::to_string(fit.correlation.repair_shrinkage));
  }
  return fit;
}

Eigen::MatrixXd sandwich_covariance(const LongitudinalDataset& data, const FitResult& fit,
                                    const ScoreFunction& score, const std::vector<Eigen::VectorXd>& weights,
                                    bool empirical_bread) {
  const ActiveProblem prob(data, weights, score, fit.correlation.kind, fit.active_set);
  const Eigen::VectorXd beta = select_entries(fit.beta_hat, fit.active_set);
  const Evaluation ev = evaluate_with(prob, beta, NuisanceEstimate{fit.phi_hat, fit.correlation}, true);
  const double bread = empirical_bread ? ev.mean_psi_prime : gaussian_moments(score).kappa1;
  const Eigen::MatrixXd xrx = prob.x_active.transpose() * ev.whitened_x;
  return embed(active_sandwich(prob, ev, xrx, bread), fit.active_set, data.p());
}

Eigen::VectorXd threshold_residual(const LongitudinalDataset& data, const FitResult& fit, const ScoreFunction& score,
                                   const std::vector<Eigen::VectorXd>& weights) {
  const EEComponents c = assemble_components(data, fit.beta_hat, fit.phi_hat, fit.correlation, score, weights);
  Eigen::VectorXd out(static_cast<Eigen::Index>(fit.active_set.size()));
  for (std::size_t k = 0; k < fit.active_set.size(); ++k) {
    const int j = fit.active_set[k];
    out(static_cast<Eigen::Index>(k)) = (1.0 - fit.delta_hat(j)) * c.U(j) - fit.delta_hat(j) * fit.beta_hat(j);
  }
  return out;
}

}  // namespace rtgee
