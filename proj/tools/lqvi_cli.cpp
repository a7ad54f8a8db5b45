// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0
//
// Command-line front end: solve serialized AVI problems, compile scenarios,
// run receding-horizon simulations, and benchmark solvers against each other.
// Exit codes: 0 success, 1 I/O or schema error, 2 iteration limit reached,
// 3 numerical failure, 4 constraint violations detected.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lqvi/lqvi.hpp"

namespace {

namespace fs = std::filesystem;
using lqvi::json;

struct CommonFlags {
  std::string solver = "newton";
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<double> mu;
  std::optional<int> budget;
  std::optional<double> fb_step;
  std::optional<double> dr_gamma;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string format = "csv";
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool with_solver = true) {
  if (with_solver)
    cmd->add_option("--solver", flags.solver, "solver: newton | fast-newton | fb | dr");
  cmd->add_option("--tol", flags.tol, "termination tolerance on the natural residual");
  cmd->add_option("--max-iter", flags.max_iter, "iteration cap");
  cmd->add_option("--mu", flags.mu, "smoothing parameter (newton family)");
  cmd->add_option("--budget", flags.budget, "fixed per-solve iteration budget");
  cmd->add_option("--fb-step", flags.fb_step, "forward-backward step size");
  cmd->add_option("--dr-gamma", flags.dr_gamma, "Douglas-Rachford resolvent parameter");
  cmd->add_option("--seed", flags.seed, "seed for randomized initial points");
  cmd->add_option("--out-dir", flags.out_dir, "output directory");
  cmd->add_option("--format", flags.format, "metrics format: csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
}

lqvi::SolverOptions solver_options(const CommonFlags& flags) {
  lqvi::SolverOptions opts;
  opts.name = flags.solver;
  if (!lqvi::is_known_solver(opts.name))
    throw lqvi::SchemaError("unknown solver '" + opts.name + "'");
  if (flags.tol) {
    opts.newton.tol = *flags.tol;
    opts.first_order.tol = *flags.tol;
  }
  if (flags.max_iter) {
    opts.newton.max_iter = *flags.max_iter;
    opts.first_order.max_iter = *flags.max_iter;
  }
  if (flags.mu) opts.newton.mu = *flags.mu;
  if (flags.budget) {
    opts.newton.iteration_budget = *flags.budget;
    opts.first_order.iteration_budget = *flags.budget;
  }
  if (flags.fb_step) opts.first_order.fb_step = *flags.fb_step;
  if (flags.dr_gamma) opts.first_order.dr_gamma = *flags.dr_gamma;
  if (flags.seed) opts.newton.random_init_seed = *flags.seed;
  return opts;
}

int status_exit_code(lqvi::SolverStatus status) {
  switch (status) {
    case lqvi::SolverStatus::Converged: return 0;
    case lqvi::SolverStatus::MaxIterations:
    case lqvi::SolverStatus::BudgetExhausted: return 2;
    case lqvi::SolverStatus::NumericalFailure: return 3;
  }
  return 3;
}

int cmd_solve(const std::string& problem_path, const CommonFlags& flags) {
  const lqvi::AviProblem problem = lqvi::avi_from_json(lqvi::load_json_file(problem_path));
  const lqvi::SolverOptions opts = solver_options(flags);
  const lqvi::SolverReport rep = lqvi::solve_named(opts, problem);

  fs::create_directories(flags.out_dir);
  const fs::path report_path = fs::path(flags.out_dir) / "report.json";
  lqvi::write_json_file(report_path.string(), lqvi::to_json(rep));

  std::printf("solver=%s status=%s iterations=%d residual=%.3e elapsed_s=%.4f report=%s\n",
              opts.name.c_str(), lqvi::to_string(rep.status), rep.iterations,
              rep.residual_trace.empty() ? 0.0 : rep.residual_trace.back(), rep.elapsed,
              report_path.string().c_str());
  return status_exit_code(rep.status);
}

int cmd_compile(const std::string& scenario_path, int horizon, const CommonFlags& flags) {
  const json doc = lqvi::load_json_file(scenario_path);
  lqvi::AviProblem problem = [&] {
    if (doc.is_object() && doc.value("type", "") == "game") {
      const lqvi::LqGame game = lqvi::game_from_json(doc.at("game"));
      if (!doc.contains("x0")) throw lqvi::SchemaError("game document: missing x0");
      const Eigen::VectorXd x0 = lqvi::detail::vec_from_json(doc.at("x0"), "x0");
      const auto riccati = lqvi::solve_game_riccati(game);
      return lqvi::assemble_avi(game, horizon, riccati, x0);
    }
    const lqvi::Scenario scenario = lqvi::scenario_from_json(doc);
    const auto riccati = lqvi::solve_game_riccati(scenario.game);
    return lqvi::assemble_avi(scenario.game, horizon, riccati, scenario.x0);
  }();

  fs::create_directories(flags.out_dir);
  const fs::path out_path = fs::path(flags.out_dir) / "problem.json";
  lqvi::write_json_file(out_path.string(), lqvi::to_json(problem));
  std::printf("compiled n=%ld m=%ld horizon=%d -> %s\n", long(problem.n()), long(problem.m()),
              horizon, out_path.string().c_str());
  return 0;
}

int cmd_simulate(const std::string& scenario_path, int horizon, int steps,
                 const CommonFlags& flags) {
  const lqvi::Scenario scenario = lqvi::scenario_from_json(lqvi::load_json_file(scenario_path));
  const auto riccati = lqvi::solve_game_riccati(scenario.game);

  lqvi::RhConfig cfg;
  cfg.horizon_T = horizon;
  cfg.sim_steps = steps;  // 0 = scenario default
  cfg.solver = solver_options(flags);
  cfg.iteration_budget = flags.budget;
  const lqvi::RhLog log = lqvi::run(scenario, riccati, cfg);

  fs::create_directories(flags.out_dir);
  const fs::path dir(flags.out_dir);
  if (flags.format == "json") {
    json metrics = json::array();
    for (int t = 0; t < log.completed_steps; ++t)
      metrics.push_back(json{{"t", t},
                             {"iterations", log.iterations[t]},
                             {"elapsed_s", log.elapsed[t]},
                             {"residual", log.residual[t]},
                             {"status", lqvi::to_string(log.status[t])},
                             {"violation_max", log.violation_max[t]}});
    lqvi::write_json_file((dir / "metrics.json").string(), metrics);
  } else {
    lqvi::write_rh_metrics_csv((dir / "metrics.csv").string(), log);
  }
  lqvi::write_rh_trajectory_csv((dir / "trajectory.csv").string(), log);
  const json summary = lqvi::rh_summary_json(log, scenario.game, cfg.solver.name);
  lqvi::write_json_file((dir / "summary.json").string(), summary);

  const auto violations = lqvi::check_violations(log, scenario.game);
  std::printf("solver=%s steps=%d median_iterations=%.0f max_violation=%.3e collision=%s\n",
              cfg.solver.name.c_str(), log.completed_steps,
              summary.at("median_iterations").get<double>(), violations.max_violation,
              log.collision ? "yes" : "no");

  if (!log.abort_reason.empty()) {
    std::fprintf(stderr, "aborted: %s\n", log.abort_reason.c_str());
    return 3;
  }
  const bool budget_mode = flags.budget.has_value();
  if (!budget_mode) {
    for (auto s : log.status)
      if (s != lqvi::SolverStatus::Converged) return 3;
    if (!violations.empty()) return 4;
  }
  return 0;
}

int cmd_bench(const std::string& scenario_path, const std::vector<std::string>& solvers,
              int repetitions, int horizon, int steps, const CommonFlags& flags) {
  if (solvers.empty()) throw lqvi::SchemaError("bench: at least one solver required (--solvers)");
  for (const auto& name : solvers)
    if (!lqvi::is_known_solver(name)) throw lqvi::SchemaError("unknown solver '" + name + "'");

  const lqvi::Scenario scenario = lqvi::scenario_from_json(lqvi::load_json_file(scenario_path));
  const auto riccati = lqvi::solve_game_riccati(scenario.game);
  const auto stacked = lqvi::build_stacked_game(scenario.game, horizon, riccati);

  fs::create_directories(flags.out_dir);
  const fs::path dir(flags.out_dir);
  std::ofstream csv(dir / "bench.csv");
  csv << "rep,step,solver,iterations,elapsed_s,residual\n";

  struct Cell {
    double median_iters;
    double median_elapsed;
  };
  std::vector<std::pair<std::string, Cell>> table;

  for (const auto& name : solvers) {
    std::vector<int> all_iters;
    std::vector<double> all_elapsed;
    for (int rep = 0; rep < repetitions; ++rep) {
      CommonFlags per = flags;
      per.solver = name;
      lqvi::RhConfig cfg;
      cfg.horizon_T = horizon;
      cfg.sim_steps = steps;
      cfg.solver = solver_options(per);
      cfg.iteration_budget = flags.budget;
      const lqvi::RhLog log = lqvi::run(scenario, riccati, cfg, &stacked);
      for (int t = 0; t < log.completed_steps; ++t) {
        csv << rep << ',' << t << ',' << name << ',' << log.iterations[t] << ','
            << log.elapsed[t] << ',' << log.residual[t] << "\n";
        all_iters.push_back(log.iterations[t]);
        all_elapsed.push_back(log.elapsed[t]);
      }
    }
    std::sort(all_iters.begin(), all_iters.end());
    std::sort(all_elapsed.begin(), all_elapsed.end());
    Cell cell{all_iters.empty() ? 0.0 : double(all_iters[all_iters.size() / 2]),
              all_elapsed.empty() ? 0.0 : all_elapsed[all_elapsed.size() / 2]};
    table.emplace_back(name, cell);
    std::printf("%-12s median_iterations=%.0f median_elapsed_s=%.5f\n", name.c_str(),
                cell.median_iters, cell.median_elapsed);
  }

  std::ofstream md(dir / "bench_summary.md");
  md << "| solver | median iterations | median solve time (s) |\n";
  md << "|---|---|---|\n";
  for (const auto& [name, cell] : table)
    md << "| " << name << " | " << cell.median_iters << " | " << cell.median_elapsed << " |\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "lqvi: solvers for constrained linear-quadratic dynamic games posed as affine "
      "variational inequalities.\nSet AVI_GAME_LOG=1 (info) or 2 (debug) for diagnostics."};
  app.require_subcommand(1);

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "solve a serialized AVI problem");
  std::string problem_path;
  solve_cmd->add_option("problem", problem_path, "AVI problem JSON")->required();
  CommonFlags solve_flags;
  add_common_flags(solve_cmd, solve_flags);

  // compile
  auto* compile_cmd =
      app.add_subcommand("compile", "compile a scenario or game document into an AVI problem");
  std::string compile_path;
  int compile_horizon = 10;
  compile_cmd->add_option("scenario", compile_path, "scenario JSON")->required();
  compile_cmd->add_option("--horizon", compile_horizon, "prediction horizon T");
  CommonFlags compile_flags;
  add_common_flags(compile_cmd, compile_flags, false);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "closed-loop receding-horizon simulation");
  std::string sim_path;
  int sim_horizon = 10;
  int sim_steps = 0;
  sim_cmd->add_option("scenario", sim_path, "scenario JSON")->required();
  sim_cmd->add_option("--horizon", sim_horizon, "prediction horizon T");
  sim_cmd->add_option("--steps", sim_steps, "simulation steps (0 = scenario default)");
  CommonFlags sim_flags;
  add_common_flags(sim_cmd, sim_flags);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "compare solvers on one scenario");
  std::string bench_path;
  std::vector<std::string> bench_solvers;
  int repetitions = 1;
  int bench_horizon = 10;
  int bench_steps = 0;
  bench_cmd->add_option("scenario", bench_path, "scenario JSON")->required();
  bench_cmd->add_option("--solvers", bench_solvers, "comma-separated solver list")
      ->delimiter(',');
  bench_cmd->add_option("--repetitions", repetitions, "repetitions per solver");
  bench_cmd->add_option("--horizon", bench_horizon, "prediction horizon T");
  bench_cmd->add_option("--steps", bench_steps, "simulation steps (0 = scenario default)");
  CommonFlags bench_flags;
  add_common_flags(bench_cmd, bench_flags, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve_cmd) return cmd_solve(problem_path, solve_flags);
    if (*compile_cmd) return cmd_compile(compile_path, compile_horizon, compile_flags);
    if (*sim_cmd) return cmd_simulate(sim_path, sim_horizon, sim_steps, sim_flags);
    if (*bench_cmd)
      return cmd_bench(bench_path, bench_solvers, repetitions, bench_horizon, bench_steps,
                       bench_flags);
  } catch (const lqvi::SchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const lqvi::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
