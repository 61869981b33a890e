#include "rtgee/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "rtgee/residuals.hpp"

namespace rtgee {

namespace {

constexpr double kWaldZ = 1.96;
constexpr int kUnbalancedGrid = 5;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Eigen::MatrixXd true_correlation(CorrelationKind kind, double alpha, const std::vector<int>& times) {
  CorrelationModel model;
  model.kind = kind;
  model.alpha = alpha;
  return build_R_i(model, times);
}

std::vector<std::size_t> sample_cells(std::size_t total, double rate, Rng& rng) {
  const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(total)));
  std::vector<std::size_t> cells(total);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, total - 1);
    std::swap(cells[k], cells[pick(rng)]);
  }
  cells.resize(count);
  std::sort(cells.begin(), cells.end());
  return cells;
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate) {
  return splitmix64(splitmix64(seed) ^ (replicate + 1) * 0xD1B54A32D192ED03ULL);
}

Contamination contamination_for(ContaminationCase c) {
  switch (c) {
    case ContaminationCase::Case1: return {};
    case ContaminationCase::Case2: return {0.20, OutlierShift::Normal10, 0.0};
    case ContaminationCase::Case3: return {0.20, OutlierShift::Normal10, 0.10};
    case ContaminationCase::Case2Prime: return {0.10, OutlierShift::Normal10, 0.0};
    case ContaminationCase::Case3Prime: return {0.10, OutlierShift::Normal10, 0.10};
    case ContaminationCase::Case2DoublePrime: return {0.10, OutlierShift::Constant5, 0.0};
    case ContaminationCase::Case3DoublePrime: return {0.10, OutlierShift::Constant5, 0.05};
  }
  return {};
}

ContaminationCase parse_contamination_case(const std::string& name) {
  if (name == "case1") return ContaminationCase::Case1;
  if (name == "case2") return ContaminationCase::Case2;
  if (name == "case3") return ContaminationCase::Case3;
  if (name == "case2p") return ContaminationCase::Case2Prime;
  if (name == "case3p") return ContaminationCase::Case3Prime;
  if (name == "case2pp") return ContaminationCase::Case2DoublePrime;
  if (name == "case3pp") return ContaminationCase::Case3DoublePrime;
  throw std::invalid_argument("unknown contamination case '" + name + "'");
}

std::string to_string(ContaminationCase c) {
  switch (c) {
    case ContaminationCase::Case1: return "case1";
    case ContaminationCase::Case2: return "case2";
    case ContaminationCase::Case3: return "case3";
    case ContaminationCase::Case2Prime: return "case2p";
    case ContaminationCase::Case3Prime: return "case3p";
    case ContaminationCase::Case2DoublePrime: return "case2pp";
    case ContaminationCase::Case3DoublePrime: return "case3pp";
  }
  return "unknown";
}

void SimScenario::validate() const {
  if (n < 2) throw std::invalid_argument("scenario needs at least two subjects");
  if (p < 1) throw std::invalid_argument("scenario needs at least one covariate");
  if (!unbalanced && m < 1) throw std::invalid_argument("scenario needs m >= 1");
  if (beta_true.size() != p) throw std::invalid_argument("beta_true length must equal p");
  if (true_correlation != CorrelationKind::Exchangeable && true_correlation != CorrelationKind::AR1) {
    throw std::invalid_argument("true correlation must be exchangeable or AR(1)");
  }
  if (!(std::abs(alpha) < 1.0)) throw std::invalid_argument("alpha must lie in (-1, 1)");
  if (!(std::abs(covariate_rho) < 1.0)) throw std::invalid_argument("covariate correlation must lie in (-1, 1)");
  for (double r : {contamination.x_rate, contamination.y_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("contamination rates must lie in [0, 1]");
  }
}

Eigen::VectorXd sparse_beta(int p) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const double pattern[] = {0.7, 0.7, -0.4};
  for (int k = 0; k < std::min(p, 3); ++k) beta(k) = pattern[k];
  return beta;
}

Eigen::VectorXd cyclic_beta(int p, int s) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const double pattern[] = {0.7, 0.7, -0.4};
  for (int k = 0; k < std::min(p, s); ++k) beta(k) = pattern[k % 3];
  return beta;
}

DivergingDims diverging_dims(int n) {
  DivergingDims d;
  d.p = static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n), 0.4) + 1e-9)) - 5;
  d.s = d.p / 5;
  return d;
}

SimScenario low_dimensional_design(ErrorDistribution errors, ContaminationCase c) {
  SimScenario s;
  s.name = "low_dim_" + to_string(c);
  s.n = 100;
  s.p = 20;
  s.m = 10;
  s.beta_true = sparse_beta(s.p);
  s.errors = errors;
  s.contamination = contamination_for(c);
  return s;
}

SimScenario diverging_design(ErrorDistribution errors, ContaminationCase c, int n) {
  const auto dims = diverging_dims(n);
  SimScenario s;
  s.name = "diverging_" + to_string(c);
  s.n = n;
  s.p = dims.p;
  s.m = kUnbalancedGrid;
  s.unbalanced = true;
  s.beta_true = cyclic_beta(dims.p, dims.s);
  s.errors = errors;
  s.contamination = contamination_for(c);
  return s;
}

SimScenario high_dimensional_design(ErrorDistribution errors, ContaminationCase c) {
  SimScenario s;
  s.name = "high_dim_" + to_string(c);
  s.n = 100;
  s.p = 300;
  s.m = 10;
  s.beta_true = sparse_beta(s.p);
  s.errors = errors;
  s.contamination = contamination_for(c);
  return s;
}

std::vector<Eigen::MatrixXd> gen_covariates(const std::vector<int>& sizes, int p, double rho, Rng& rng) {
  Eigen::MatrixXd cov(p, p);
  for (int k = 0; k < p; ++k) {
    for (int l = 0; l < p; ++l) cov(k, l) = std::pow(rho, std::abs(k - l));
  }
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  std::normal_distribution<double> normal;
  std::vector<Eigen::MatrixXd> out;
  out.reserve(sizes.size());
  for (int m : sizes) {
    Eigen::MatrixXd z(p, m);
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < p; ++k) z(k, j) = normal(rng);
    }
    out.push_back((L * z).transpose());
  }
  return out;
}

std::vector<Eigen::VectorXd> gen_errors(const std::vector<std::vector<int>>& times, ErrorDistribution dist,
                                        CorrelationKind corr, double alpha, Rng& rng) {
  std::normal_distribution<double> normal;
  std::chi_squared_distribution<double> chi2(3.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(times.size());
  for (const auto& t : times) {
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(true_correlation(corr, alpha, t)).matrixL();
    Eigen::VectorXd z(static_cast<Eigen::Index>(t.size()));
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = normal(rng);
    Eigen::VectorXd eps = L * z;
    if (dist == ErrorDistribution::StudentT3) eps /= std::sqrt(chi2(rng) / 3.0);
    out.push_back(std::move(eps));
  }
  return out;
}

ContaminationLog contaminate(std::vector<Eigen::VectorXd>& responses, std::vector<Eigen::MatrixXd>& covariates,
                             const Contamination& c, Rng& rng) {
  std::vector<std::pair<std::size_t, Eigen::Index>> cell_index;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    for (Eigen::Index j = 0; j < responses[i].size(); ++j) cell_index.emplace_back(i, j);
  }
  ContaminationLog log;
  std::student_t_distribution<double> t3(3.0);
  if (c.x_rate > 0.0) {
    log.x_cells = sample_cells(cell_index.size(), c.x_rate, rng);
    for (auto cell : log.x_cells) {
      const auto [i, j] = cell_index[cell];
      covariates[i](j, 0) += t3(rng);
    }
  }
  if (c.y_rate > 0.0) {
    log.y_cells = sample_cells(cell_index.size(), c.y_rate, rng);
    std::normal_distribution<double> shift(10.0, 1.0);
    for (auto cell : log.y_cells) {
      const auto [i, j] = cell_index[cell];
      responses[i](j) += c.y_shift == OutlierShift::Normal10 ? shift(rng) : 5.0;
    }
  }
  return log;
}

SimulatedData simulate_dataset(const SimScenario& scenario, Rng& rng) {
  scenario.validate();
  const int T = scenario.unbalanced ? kUnbalancedGrid : scenario.m;
  std::vector<int> sizes(static_cast<std::size_t>(scenario.n), scenario.m);
  if (scenario.unbalanced) {
    std::uniform_int_distribution<int> size_dist(2, kUnbalancedGrid);
    for (auto& m : sizes) m = size_dist(rng);
  }
  std::vector<std::vector<int>> times;
  times.reserve(sizes.size());
  for (int m : sizes) {
    std::vector<int> t(static_cast<std::size_t>(m));
    std::iota(t.begin(), t.end(), 0);
    times.push_back(std::move(t));
  }
  auto x = gen_covariates(sizes, scenario.p, scenario.covariate_rho, rng);
  const auto eps = gen_errors(times, scenario.errors, scenario.true_correlation, scenario.alpha, rng);
  std::vector<Eigen::VectorXd> y;
  y.reserve(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) y.push_back(x[i] * scenario.beta_true + eps[i]);

  SimulatedData out;
  out.clean_x = x;
  contaminate(y, x, scenario.contamination, rng);
  std::vector<Subject> subjects;
  subjects.reserve(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    subjects.push_back(Subject{"s" + std::to_string(i + 1), std::move(x[i]), std::move(y[i]), std::move(times[i])});
  }
  out.data = make_dataset(std::move(subjects), scenario.p, T);
  return out;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::SGEE: return "sgee";
    case Method::RSGEE: return "rsgee";
    case Method::RTGEE: return "rtgee";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "sgee") return Method::SGEE;
  if (name == "rsgee") return Method::RSGEE;
  if (name == "rtgee") return Method::RTGEE;
  throw std::invalid_argument("unknown method '" + name + "'");
}

FitConfig method_config(const MethodSpec& spec, const RunOptions& options) {
  FitConfig cfg;
  cfg.tau = options.tau;
  cfg.epsilon = options.epsilon;
  cfg.max_iter = options.max_iter;
  cfg.correlation = spec.correlation;
  switch (spec.method) {
    case Method::SGEE:
      cfg.score = ScoreFunction::identity();
      cfg.leverage.reset();
      break;
    case Method::RSGEE:
      cfg.score = ScoreFunction::huber();
      cfg.leverage = options.leverage;
      break;
    case Method::RTGEE:
      cfg.score = ScoreFunction::tukey(options.fixed_b > 0.0 ? options.fixed_b : kRecommendedTukeyB);
      cfg.leverage = options.leverage;
      break;
  }
  return cfg;
}

ReplicateRecord score_replicate(const SimScenario& scenario, const SimulatedData& sim, const FitResult& fit) {
  ReplicateRecord rec;
  rec.converged = fit.converged;
  rec.iterations = fit.iterations;
  rec.beta_hat = fit.beta_hat;
  rec.standard_errors = fit.standard_errors(sim.data.n());
  rec.active_set = fit.active_set;
  const auto p = scenario.beta_true.size();
  std::vector<bool> active(static_cast<std::size_t>(p), false);
  for (int j : fit.active_set) active[static_cast<std::size_t>(j)] = true;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (active[static_cast<std::size_t>(j)]) continue;
    if (scenario.beta_true(j) == 0.0) {
      ++rec.correct_zeros;
    } else {
      ++rec.incorrect_zeros;
    }
  }
  const int zeros = static_cast<int>(p) - scenario.num_nonzero();
  rec.exact_support = rec.correct_zeros == zeros && rec.incorrect_zeros == 0;
  const Eigen::VectorXd diff = fit.beta_hat - scenario.beta_true;
  rec.squared_error = diff.squaredNorm();
  double sse = 0.0;
  std::size_t count = 0;
  for (const auto& x : sim.clean_x) {
    sse += (x * diff).squaredNorm();
    count += static_cast<std::size_t>(x.rows());
  }
  rec.mspe = sse / static_cast<double>(count);
  return rec;
}

SimMetrics aggregate(const SimScenario& scenario, const MethodSpec& spec, const std::vector<ReplicateRecord>& records) {
  SimMetrics m;
  m.spec = spec;
  const auto p = scenario.beta_true.size();
  std::vector<const ReplicateRecord*> used;
  int total = 0;
  for (const auto& r : records) {
    if (r.spec.method != spec.method || r.spec.correlation != spec.correlation) continue;
    ++total;
    if (r.converged) {
      used.push_back(&r);
    } else {
      ++m.nonconverged;
    }
  }
  if (used.empty()) throw std::runtime_error("no converged replicate for method " + to_string(spec.method));
  m.used = static_cast<int>(used.size());
  m.valid = m.nonconverged * 10 <= total;
  const double k = static_cast<double>(used.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  m.coverage = Eigen::VectorXd::Zero(p);
  std::vector<double> mspes;
  for (const auto* r : used) {
    m.C += r->correct_zeros;
    m.IC += r->incorrect_zeros;
    m.CF += r->exact_support ? 1.0 : 0.0;
    mean += r->beta_hat;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::abs(r->beta_hat(j) - scenario.beta_true(j)) <= kWaldZ * r->standard_errors(j)) m.coverage(j) += 1.0;
    }
    m.amspe += r->mspe;
    m.amse += r->squared_error;
    mspes.push_back(r->mspe);
  }
  m.C /= k;
  m.IC /= k;
  m.CF /= k;
  mean /= k;
  m.coverage /= k;
  m.amspe /= k;
  m.amse /= k;
  m.mmspe = median(mspes);
  m.bias = mean - scenario.beta_true;
  m.sd = Eigen::VectorXd::Zero(p);
  if (used.size() > 1) {
    for (const auto* r : used) m.sd += (r->beta_hat - mean).cwiseAbs2();
    m.sd = (m.sd / (k - 1.0)).cwiseSqrt();
  }
  m.relative_efficiency = std::numeric_limits<double>::quiet_NaN();
  return m;
}

CellResult run_cell(const SimScenario& scenario, const std::vector<MethodSpec>& methods, const RunOptions& options) {
  scenario.validate();
  if (methods.empty()) throw std::invalid_argument("run_cell needs at least one method");
  if (options.replicates < 1) throw std::invalid_argument("run_cell needs at least one replicate");
  const bool need_b_grid =
      options.fixed_b <= 0.0 &&
      std::any_of(methods.begin(), methods.end(), [](const MethodSpec& s) { return s.method == Method::RTGEE; });
  const std::vector<double> b_grid = need_b_grid ? candidate_b_grid(options.b_min_efficiency) : std::vector<double>{};
  if (need_b_grid && b_grid.empty()) throw std::invalid_argument("no biweight constant meets the minimum efficiency");

  std::vector<std::vector<ReplicateRecord>> per_replicate(static_cast<std::size_t>(options.replicates));
  auto run_one = [&](int r) {
    const std::uint64_t seed = replicate_seed(scenario.seed, static_cast<std::uint64_t>(r));
    Rng rng(seed);
    const SimulatedData sim = simulate_dataset(scenario, rng);
    std::vector<ReplicateRecord> recs;
    FitInputs base_inputs;
    bool inputs_ok = true;
    try {
      base_inputs.beta_init = initial_estimate(sim.data);
    } catch (const std::exception&) {
      inputs_ok = false;
    }
    std::vector<Eigen::VectorXd> unit, lev;
    if (inputs_ok) {
      unit = unit_weights(sim.data);
      lev = leverage_weights(sim.data, options.leverage);
    }
    for (const auto& spec : methods) {
      ReplicateRecord rec;
      try {
        if (!inputs_ok) throw std::runtime_error("initial estimator failed");
        const FitConfig cfg = method_config(spec, options);
        const FitInputs inputs = make_inputs(sim.data, base_inputs.beta_init, cfg.leverage ? lev : unit);
        auto grid = options.lambda_grid;
        if (grid.empty()) {
          grid = default_lambda_grid(inputs.beta_init, options.tau);
          if (options.refine_grid) grid = refine_lambda_grid(grid, inputs.beta_init, options.tau, options.refine_max_active);
        }
        std::vector<double> candidates;
        if (spec.method == Method::RTGEE) {
          candidates = options.fixed_b > 0.0 ? std::vector<double>{options.fixed_b} : b_grid;
        } else {
          candidates = {cfg.score.constant()};
        }
        const TuningResult tuned = select_lambda(sim.data, cfg, grid, candidates, inputs);
        rec = score_replicate(scenario, sim, tuned.best);
        rec.lambda = tuned.lambda_opt;
        rec.b = tuned.b_opt;
        rec.path = tuned.rpwd_path;
      } catch (const std::exception&) {
        rec.converged = false;
      }
      rec.replicate = r;
      rec.seed = seed;
      rec.spec = spec;
      recs.push_back(std::move(rec));
    }
    per_replicate[static_cast<std::size_t>(r)] = std::move(recs);
  };

  const unsigned threads = std::max(1U, std::min<unsigned>(options.threads, static_cast<unsigned>(options.replicates)));
  if (threads == 1) {
    for (int r = 0; r < options.replicates; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int r = next++; r < options.replicates; r = next++) run_one(r);
      });
    }
    for (auto& th : pool) th.join();
  }

  CellResult cell;
  cell.scenario = scenario;
  cell.options = options;
  for (auto& recs : per_replicate) {
    for (auto& rec : recs) cell.records.push_back(std::move(rec));
  }
  for (const auto& spec : methods) cell.metrics.push_back(aggregate(scenario, spec, cell.records));
  for (auto& m : cell.metrics) {
    for (const auto& ref : cell.metrics) {
      if (ref.spec.method == Method::SGEE && ref.spec.correlation == m.spec.correlation && m.amse > 0.0) {
        m.relative_efficiency = ref.amse / m.amse;
      }
    }
  }
  return cell;
}

}  // namespace rtgee
