#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rtgee/io.hpp"

namespace {

struct CommonFlags {
  std::uint64_t seed = 20240101;
  std::string method = "rtgee";
  std::string corr = "run";
  double b = 0.0;
  double b_grid_min_eff = 0.70;
  std::string lambda_grid;
  double lambda = -1.0;
  double tau = 1.0;
  int max_iter = 100;
  double epsilon = 1e-8;
  std::string out = "rtgee_out";
};

struct DataFlags {
  std::string path;
  bool intercept = false;
  bool time_covariate = false;
};

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size() || !(v >= 0.0)) throw std::invalid_argument("bad lambda grid entry '" + item + "'");
    grid.push_back(v);
  }
  if (grid.empty()) throw std::invalid_argument("lambda grid is empty");
  return grid;
}

void add_common(CLI::App* cmd, CommonFlags& f, bool with_lambda) {
  cmd->add_option("--seed", f.seed, "Seed recorded in reports (simulate: scenario seed override)");
  cmd->add_option("--method", f.method, "sgee, rsgee or rtgee")->check(CLI::IsMember({"sgee", "rsgee", "rtgee"}));
  cmd->add_option("--corr", f.corr, "Working correlation: ind, exc, ar1 or run")
      ->check(CLI::IsMember({"ind", "exc", "ar1", "run"}));
  cmd->add_option("--b", f.b, "Fixed biweight constant (skips b tuning)")->check(CLI::PositiveNumber);
  cmd->add_option("--b-grid-min-eff", f.b_grid_min_eff, "Minimum Gaussian efficiency of candidate b")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--lambda-grid", f.lambda_grid, "Comma-separated lambda values (default: data-driven)");
  if (with_lambda) cmd->add_option("--lambda", f.lambda, "Fixed lambda (skips lambda tuning)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--tau", f.tau, "Threshold exponent")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", f.max_iter, "Maximum Fisher-scoring iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--epsilon", f.epsilon, "Convergence tolerance on the squared step")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "Output directory");
}

void add_data(CLI::App* cmd, DataFlags& d) {
  cmd->add_option("--data", d.path, "Long-format CSV: subject,time,y,covariates...")->required();
  cmd->add_flag("--intercept", d.intercept, "Prepend an intercept column");
  cmd->add_flag("--time-covariate", d.time_covariate, "Add the time label as a covariate");
}

rtgee::AnalysisOptions analysis_options(const CommonFlags& f) {
  rtgee::AnalysisOptions o;
  if (!f.lambda_grid.empty()) o.lambda_grid = parse_grid(f.lambda_grid);
  o.fixed_lambda = f.lambda;
  o.fixed_b = f.b;
  o.b_min_efficiency = f.b_grid_min_eff;
  o.tau = f.tau;
  o.epsilon = f.epsilon;
  o.max_iter = f.max_iter;
  o.seed = f.seed;
  return o;
}

rtgee::LongitudinalDataset load(const DataFlags& d) {
  if (!std::filesystem::exists(d.path)) throw std::runtime_error("data file not found: '" + d.path + "'");
  return rtgee::load_dataset(d.path, {d.intercept, d.time_covariate});
}

void print_selection(const rtgee::LongitudinalDataset& data, const rtgee::AnalysisResult& r) {
  std::cout << "method " << rtgee::to_string(r.spec) << "  lambda " << rtgee::format_number(r.tuning.lambda_opt)
            << "  b " << rtgee::format_number(r.tuning.b_opt) << "  converged " << (r.tuning.best.converged ? "yes" : "no")
            << "\nselected:";
  for (int j : r.tuning.best.active_set) std::cout << ' ' << data.covariate_names[static_cast<std::size_t>(j)];
  std::cout << '\n';
}

int run_fit(const DataFlags& d, const CommonFlags& f, bool with_cv, bool show_path) {
  const auto data = load(d);
  const rtgee::MethodSpec spec{rtgee::parse_method(f.method), rtgee::parse_correlation_kind(f.corr)};
  const auto result = rtgee::analyze(data, spec, analysis_options(f));
  print_selection(data, result);
  if (show_path) {
    std::cout << "lambda,b_opt,rpwd,df,converged\n";
    for (const auto& e : result.tuning.rpwd_path) {
      std::cout << rtgee::format_number(e.lambda) << ',' << rtgee::format_number(e.b_opt) << ','
                << rtgee::format_number(e.rpwd) << ',' << e.df << ',' << (e.converged ? 1 : 0) << '\n';
    }
  }
  rtgee::CvResult cv;
  if (with_cv) {
    cv = rtgee::mse_cv(data, result.config, rtgee::thread_count_from_env());
    std::cout << "MSE_CV " << rtgee::format_number(cv.mse) << " over " << cv.used << " folds";
    if (!cv.failed.empty()) std::cout << " (" << cv.failed.size() << " folds failed)";
    std::cout << '\n';
  }
  rtgee::write_analysis_reports(f.out, data, result, with_cv ? &cv : nullptr);
  std::cout << "wrote " << f.out << '\n';
  return 0;
}

int run_simulate(const std::string& scenario_path, const CommonFlags& f, const CLI::App* cmd, int replicates) {
  if (!std::filesystem::exists(scenario_path)) {
    throw std::runtime_error("scenario file not found: '" + scenario_path + "'");
  }
  auto cfg = rtgee::load_scenario(scenario_path);
  if (cmd->count("--seed") > 0) cfg.scenario.seed = f.seed;
  if (cmd->count("--method") > 0 || cmd->count("--corr") > 0) {
    cfg.methods = {{rtgee::parse_method(f.method), rtgee::parse_correlation_kind(f.corr)}};
  }
  if (replicates > 0) cfg.options.replicates = replicates;
  auto& o = cfg.options;
  if (cmd->count("--b") > 0) o.fixed_b = f.b;
  if (cmd->count("--b-grid-min-eff") > 0) o.b_min_efficiency = f.b_grid_min_eff;
  if (!f.lambda_grid.empty()) o.lambda_grid = parse_grid(f.lambda_grid);
  if (cmd->count("--tau") > 0) o.tau = f.tau;
  if (cmd->count("--max-iter") > 0) o.max_iter = f.max_iter;
  if (cmd->count("--epsilon") > 0) o.epsilon = f.epsilon;
  o.threads = rtgee::thread_count_from_env();

  const auto start = std::chrono::steady_clock::now();
  const auto cell = rtgee::run_cell(cfg.scenario, cfg.methods, cfg.options);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rtgee::write_cell_reports(f.out, cell, seconds);
  for (const auto& m : cell.metrics) {
    std::cout << rtgee::to_string(m.spec) << "  C " << rtgee::format_number(m.C) << "  IC " << rtgee::format_number(m.IC)
              << "  CF " << rtgee::format_number(m.CF) << "  MMSPE " << rtgee::format_number(m.mmspe) << "  used "
              << m.used << '\n';
  }
  std::cout << "wrote " << f.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust smooth-threshold GEE: fitting, tuning, cross-validation and simulation"};
  app.require_subcommand(1);

  CommonFlags fit_flags, cv_flags, tune_flags, sim_flags;
  DataFlags fit_data, cv_data, tune_data;
  auto* fit = app.add_subcommand("fit", "Tune and fit one method on a dataset");
  add_data(fit, fit_data);
  add_common(fit, fit_flags, true);
  auto* cv = app.add_subcommand("cv", "Fit, then leave-one-subject-out MSE with tuning frozen");
  add_data(cv, cv_data);
  add_common(cv, cv_flags, true);
  auto* tune = app.add_subcommand("tune", "Print the RPWD tuning path");
  add_data(tune, tune_data);
  add_common(tune, tune_flags, false);
  auto* sim = app.add_subcommand("simulate", "Run one Monte Carlo cell from a JSON scenario");
  std::string scenario_path;
  int replicates = 0;
  sim->add_option("--scenario", scenario_path, "JSON scenario file")->required();
  sim->add_option("--replicates", replicates, "Override the scenario's replicate count")->check(CLI::PositiveNumber);
  add_common(sim, sim_flags, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (fit->parsed()) return run_fit(fit_data, fit_flags, false, false);
    if (cv->parsed()) return run_fit(cv_data, cv_flags, true, false);
    if (tune->parsed()) return run_fit(tune_data, tune_flags, false, true);
    if (sim->parsed()) return run_simulate(scenario_path, sim_flags, sim, replicates);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
