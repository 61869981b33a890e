#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rtgee/io.hpp"

using namespace rtgee;

namespace {

int failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << detail << std::endl;
  if (!pass) ++failures;
}

void skip(const std::string& id, const std::string& detail) {
  std::cout << "SKIP  criterion " << id << "  " << detail << std::endl;
}

void info(const std::string& text) { std::cout << "      " << text << std::endl; }

int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::atoi(v) : fallback;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

const SimMetrics& find(const CellResult& cell, Method m, CorrelationKind k) {
  for (const auto& x : cell.metrics) {
    if (x.spec.method == m && x.spec.correlation == k) return x;
  }
  throw std::runtime_error("metrics missing");
}

std::string describe(const SimMetrics& m) {
  return to_string(m.spec) + " C=" + fmt(m.C) + " IC=" + fmt(m.IC) + " CF=" + fmt(m.CF) + " MMSPE=" + fmt(m.mmspe) +
         " used=" + std::to_string(m.used) + (m.valid ? "" : " (invalid cell)");
}

CellResult run(const SimScenario& s, const std::vector<MethodSpec>& methods, int reps) {
  RunOptions o;
  o.replicates = reps;
  o.threads = thread_count_from_env();
  const auto start = std::chrono::steady_clock::now();
  auto cell = run_cell(s, methods, o);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  info(s.name + ": " + std::to_string(reps) + " replicates in " + fmt(secs, 3) + " s");
  for (const auto& m : cell.metrics) info(describe(m));
  return cell;
}

bool coverage_ok(const SimMetrics& m, std::string& detail) {
  bool ok = true;
  detail += to_string(m.spec) + " coverage";
  for (int j = 0; j < 3; ++j) {
    detail += " " + fmt(m.coverage(j), 3);
    ok = ok && m.coverage(j) >= 0.90 && m.coverage(j) <= 0.99;
  }
  detail += "; ";
  return ok;
}

constexpr MethodSpec kRtgeeRun{Method::RTGEE, CorrelationKind::UnstructuredRobust};
constexpr MethodSpec kRtgeeExc{Method::RTGEE, CorrelationKind::Exchangeable};
constexpr MethodSpec kRsgeeRun{Method::RSGEE, CorrelationKind::UnstructuredRobust};
constexpr MethodSpec kSgeeRun{Method::SGEE, CorrelationKind::UnstructuredRobust};

void criteria_1_and_5(int reps) {
  const auto c1 = run(low_dimensional_design(ErrorDistribution::StudentT3, ContaminationCase::Case1),
                      {kRtgeeRun, kRtgeeExc}, reps);
  const auto& r = find(c1, Method::RTGEE, CorrelationKind::UnstructuredRobust);
  const auto c2 = run(low_dimensional_design(ErrorDistribution::StudentT3, ContaminationCase::Case2),
                      {kRtgeeRun, kSgeeRun}, reps);
  const auto& r2 = find(c2, Method::RTGEE, CorrelationKind::UnstructuredRobust);
  const auto& s2 = find(c2, Method::SGEE, CorrelationKind::UnstructuredRobust);
  const bool pass = r.valid && r2.valid && s2.valid && r.C >= 16.8 && r.IC <= 0.1 && r.CF >= 0.90 && r2.mmspe <= 0.01 &&
                    s2.mmspe >= 0.03;
  report("1", pass,
         "low-dim t3: Case 1 RTGEE/run C=" + fmt(r.C) + " IC=" + fmt(r.IC) + " CF=" + fmt(r.CF) +
             "; Case 2 MMSPE RTGEE=" + fmt(r2.mmspe) + " SGEE=" + fmt(s2.mmspe));

  std::string detail;
  bool ok = coverage_ok(r, detail);
  ok = coverage_ok(find(c1, Method::RTGEE, CorrelationKind::Exchangeable), detail) && ok;
  report("5", ok, "low-dim t3 Case 1: " + detail);
}

void criterion_2(int reps) {
  const auto c1 = run(low_dimensional_design(ErrorDistribution::Normal, ContaminationCase::Case1),
                      {kSgeeRun, kRsgeeRun, kRtgeeRun}, reps);
  const auto c3 = run(low_dimensional_design(ErrorDistribution::Normal, ContaminationCase::Case3),
                      {kSgeeRun, kRsgeeRun, kRtgeeRun}, reps);
  bool pass = true;
  std::string detail = "low-dim normal: Case 1 CF";
  for (const auto& m : c1.metrics) {
    pass = pass && m.valid && m.CF >= 0.85;
    detail += " " + to_string(m.spec.method) + "=" + fmt(m.CF);
  }
  const double t = find(c3, Method::RTGEE, CorrelationKind::UnstructuredRobust).mmspe;
  const double h = find(c3, Method::RSGEE, CorrelationKind::UnstructuredRobust).mmspe;
  const double s = find(c3, Method::SGEE, CorrelationKind::UnstructuredRobust).mmspe;
  pass = pass && t < h && h < s;
  detail += "; Case 3 MMSPE RTGEE=" + fmt(t) + " < RSGEE=" + fmt(h) + " < SGEE=" + fmt(s);
  report("2", pass, detail);
  for (const auto& m : c1.metrics) {
    info("normal Case 1 " + to_string(m.spec) + " coverage " + fmt(m.coverage(0), 3) + " " + fmt(m.coverage(1), 3) +
         " " + fmt(m.coverage(2), 3));
  }
}

void criterion_3(int reps) {
  const auto dims = diverging_dims(200);
  const auto c = run(diverging_design(ErrorDistribution::StudentT3, ContaminationCase::Case1), {kRtgeeRun}, reps);
  const auto& m = c.metrics.front();
  const bool pass = dims.p == 28 && dims.s == 5 && m.valid && m.CF >= 0.85 && m.C >= 22.5;
  report("3", pass,
         "diverging t3: p_n=" + std::to_string(dims.p) + " s_n=" + std::to_string(dims.s) +
             "; RTGEE/run C=" + fmt(m.C) + " IC=" + fmt(m.IC) + " CF=" + fmt(m.CF));
}

void criterion_4(int reps) {
  const auto c1 = run(high_dimensional_design(ErrorDistribution::StudentT3, ContaminationCase::Case1), {kRtgeeExc}, reps);
  const auto c3 =
      run(high_dimensional_design(ErrorDistribution::StudentT3, ContaminationCase::Case3Prime), {kRtgeeExc}, reps);
  const auto& a = c1.metrics.front();
  const auto& b = c3.metrics.front();
  const bool pass = reps >= 50 && a.valid && b.valid && a.C >= 296.5 && a.CF >= 0.90 && b.CF >= 0.75;
  report("4", pass,
         "high-dim t3 p=300, " + std::to_string(reps) + " replicates: Case 1 RTGEE/exc C=" + fmt(a.C) + " IC=" + fmt(a.IC) +
             " CF=" + fmt(a.CF) + "; Case 3' CF=" + fmt(b.CF) + " IC=" + fmt(b.IC));
}

// Criterion 6 checks, each independent of Monte Carlo aggregation.
void criterion_6() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> uni(-10.0, 10.0);
  std::normal_distribution<double> z;
  const ScoreFunction scores[] = {ScoreFunction::identity(), ScoreFunction::huber(1.345), ScoreFunction::tukey(4.685)};

  bool odd = true, fd = true;
  for (int i = 0; i < 1000; ++i) {
    const double u = uni(rng);
    for (const auto& s : scores) {
      odd = odd && s.psi(-u) == -s.psi(u);
      if (s.kind() == ScoreKind::Huber) odd = odd && std::abs(s.psi(u)) <= s.constant();
      if (s.kind() == ScoreKind::Tukey) odd = odd && std::abs(s.psi(u)) <= s.constant();
      if (s.kind() != ScoreKind::Identity && std::abs(std::abs(u) - s.constant()) < 1e-3) continue;
      const double h = 1e-6;
      const double num = (s.psi(u + h) - s.psi(u - h)) / (2 * h);
      fd = fd && std::abs(num - s.psi_prime(u)) <= 1e-5 * std::max(1.0, std::abs(s.psi_prime(u)));
    }
  }
  check(odd, "psi oddness/boundedness");
  check(fd, "psi' finite differences");

  for (const auto& s : {ScoreFunction::tukey(4.685), ScoreFunction::huber(1.345)}) {
    double k1 = 0, k2 = 0;
    const int draws = 10'000'000;
    for (int i = 0; i < draws; ++i) {
      const double u = z(rng);
      k1 += s.psi_prime(u);
      k2 += s.psi(u) * s.psi(u);
    }
    const auto q = gaussian_moments(s);
    check(std::abs(q.kappa1 - k1 / draws) < 1e-3 && std::abs(q.kappa2 - k2 / draws) < 1e-3,
          "Gaussian moments vs Monte Carlo (" + s.describe() + ")");
  }

  {
    const double phi = 1.7, w = 0.8;
    const auto s = ScoreFunction::tukey(4.685);
    const auto data = make_dataset({{"a", Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1), {0}}}, 1, 1);
    CorrelationModel ind;
    ind.num_times = 1;
    const auto c = assemble_components(data, Eigen::VectorXd::Zero(1), phi, ind, s,
                                       std::vector<Eigen::VectorXd>{Eigen::VectorXd::Constant(1, w)});
    const int nodes = 20000;
    const double lim = 10.0, dz = 2 * lim / nodes, h = 1e-5;
    double e = 0;
    for (int k = 0; k <= nodes; ++k) {
      const double zz = -lim + k * dz, y = std::sqrt(phi) * zz;
      const double d = (w * s.psi((y - h) / std::sqrt(phi)) - w * s.psi((y + h) / std::sqrt(phi))) / (2 * h);
      e += ((k == 0 || k == nodes) ? 1.0 : (k % 2 ? 4.0 : 2.0)) * d * std::exp(-0.5 * zz * zz) / std::sqrt(2 * M_PI);
    }
    e *= dz / 3.0;
    check(std::abs(c.gamma[0](0) - e) < 1e-5 * std::abs(e), "Gamma_i vs finite differences of h_i");
  }

  {
    bool exact = true;
    for (int rep = 0; rep < 20; ++rep) {
      TransformedResiduals r;
      r.num_times = 4;
      Eigen::MatrixXd ru = Eigen::MatrixXd::Zero(4, 4);
      for (int i = 0; i < 5; ++i) {
        Eigen::Vector4d v(z(rng), z(rng), z(rng), z(rng));
        r.values.push_back(v);
        r.times.push_back({0, 1, 2, 3});
        ru += v * v.transpose() / 5.0;
      }
      const Eigen::Vector4d bi = ru.diagonal().cwiseSqrt().cwiseInverse();
      const Eigen::MatrixXd oracle = bi.asDiagonal() * ru * bi.asDiagonal();
      const auto direct = normalize_unstructured(unstructured_moment_matrix(r));
      exact = exact && (direct - oracle).cwiseAbs().maxCoeff() < 1e-12;
      const auto m = estimate_unstructured(r);
      for (int j = 0; j < 4; ++j) {
        exact = exact && m.grid(j, j) == 1.0;
        for (int k = 0; k < 4; ++k) {
          if (j != k) exact = exact && std::abs(m.grid(j, k)) < 1.0;
        }
      }
    }
    check(exact, "R_un unit diagonal, open off-diagonals, brute-force agreement");
  }

  {
    std::vector<Subject> subs;
    for (int i = 0; i < 25; ++i) {
      Eigen::MatrixXd x(4, 3);
      for (int r = 0; r < 4; ++r) x.row(r) << z(rng), z(rng), z(rng);
      Eigen::Vector4d y = x * Eigen::Vector3d(1.0, 0.0, -2.0);
      for (int r = 0; r < 4; ++r) y(r) += z(rng);
      subs.push_back({"s" + std::to_string(i), x, y, {0, 1, 2, 3}});
    }
    const auto data = make_dataset(subs, 3, 4);
    FitConfig cfg;
    cfg.score = ScoreFunction::identity();
    cfg.correlation = CorrelationKind::Independence;
    cfg.leverage.reset();
    cfg.epsilon = 1e-20;
    const auto fit = solve(data, cfg);
    const Eigen::MatrixXd X = data.stacked_x();
    const Eigen::VectorXd ols = (X.transpose() * X).ldlt().solve(X.transpose() * data.stacked_y());
    check(fit.converged && (fit.beta_hat - ols).cwiseAbs().maxCoeff() < 1e-6, "OLS oracle");
  }

  {
    Rng r(replicate_seed(31, 0));
    const auto sim = simulate_dataset(low_dimensional_design(ErrorDistribution::StudentT3, ContaminationCase::Case2), r);
    FitConfig cfg;
    cfg.lambda = 0.01;
    cfg.epsilon = 1e-24;
    cfg.max_iter = 500;
    const auto inputs = prepare_inputs(sim.data, cfg.leverage);
    const auto fit = solve(sim.data, cfg, inputs);
    check(fit.converged && threshold_residual(sim.data, fit, cfg.score, inputs.weights).cwiseAbs().maxCoeff() < 1e-4,
          "fixed-point residual");
    check((fit.covariance - fit.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-12, "sandwich symmetry");
  }

  {
    auto s = low_dimensional_design(ErrorDistribution::StudentT3, ContaminationCase::Case3);
    s.n = 25;
    s.seed = 99;
    RunOptions o;
    o.replicates = 4;
    const std::vector<MethodSpec> methods{kRtgeeExc, {Method::SGEE, CorrelationKind::AR1}};
    std::ostringstream a, b;
    write_metrics_csv(a, run_cell(s, methods, o));
    o.threads = 2;
    write_metrics_csv(b, run_cell(s, methods, o));
    check(a.str() == b.str(), "seed determinism");
  }

  std::string detail = "property suite";
  for (const auto& f : failed) detail += "; failed: " + f;
  report("6", failed.empty(), detail);
}

void criterion_7() {
  const char* path = std::getenv("RTGEE_YEAST_CSV");
  if (path == nullptr || !std::filesystem::exists(path)) {
    skip("7", "yeast dataset not supplied (set RTGEE_YEAST_CSV to a subject,time,y,<TFs> CSV)");
    return;
  }
  const auto data = load_dataset(path, {true, true});
  AnalysisOptions o;
  o.fixed_b = kRecommendedTukeyB;
  const auto res = analyze(data, kRtgeeExc, o);
  const auto cv = mse_cv(data, res.config, thread_count_from_env());
  std::set<std::string> selected;
  for (int j : res.tuning.best.active_set) selected.insert(data.covariate_names[static_cast<std::size_t>(j)]);
  std::string missing;
  for (const char* tf : {"MBP1", "SWI4", "SWI6", "GAT3", "NDD1", "STB1", "YAP5"}) {
    if (!selected.count(tf)) missing += std::string(" ") + tf;
  }
  const bool pass = missing.empty() && cv.mse >= 1.7 && cv.mse <= 2.1;
  report("7", pass,
         "yeast RTGEE/exc: " + std::to_string(selected.size()) + " selected, MSE_CV=" + fmt(cv.mse) +
             (missing.empty() ? "" : ", missing" + missing));
}

void consistency_probes(int reps) {
  auto small = low_dimensional_design(ErrorDistribution::Normal, ContaminationCase::Case1);
  auto large = small;
  large.n = 400;
  large.name = "low_dim_case1_n400";
  const auto a = run(small, {kRtgeeExc}, reps).metrics.front();
  const auto b = run(large, {kRtgeeExc}, reps).metrics.front();
  info(std::string(b.amse < a.amse ? "PROBE ok" : "PROBE not met") + "  AMSE shrinks with n: " + fmt(a.amse) + " -> " +
       fmt(b.amse));
  info(std::string(b.CF >= a.CF - 0.05 ? "PROBE ok" : "PROBE not met") + "  CF nondecreasing in n: " + fmt(a.CF) +
       " -> " + fmt(b.CF));
}

}  // namespace

int main() {
  const int reps = env_int("RTGEE_ACCEPT_REPS", 100);
  const int high_reps = env_int("RTGEE_ACCEPT_HIGHDIM_REPS", 50);
  try {
    criterion_6();
    criteria_1_and_5(reps);
    criterion_2(reps);
    criterion_3(reps);
    criterion_7();
    consistency_probes(reps);
    criterion_4(high_reps);
  } catch (const std::exception& e) {
    std::cout << "FAIL  acceptance run aborted: " << e.what() << std::endl;
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
