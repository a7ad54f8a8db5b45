// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lqvi/game.hpp"
#include "lqvi/scenarios.hpp"
#include "lqvi/solvers.hpp"

namespace lqvi {

/// Receding-horizon loop configuration. `iteration_budget`, when set, caps
/// the solver at that many iterations per step and keeps the loop running on
/// whatever iterate comes back (the fixed-budget robustness study).
struct RhConfig {
  int horizon_T = 10;
  int sim_steps = 0;  // 0: take the scenario default
  SolverOptions solver;
  bool warm_start = true;
  std::optional<int> iteration_budget;

  enum class WarmStartMode { zero_pad, terminal_feedback };
  WarmStartMode warm_mode = WarmStartMode::zero_pad;
};

/// Closed-loop log. The per-step vectors all have length `completed_steps`;
/// `states` additionally carries the initial state at index 0. Physical
/// trajectories are filled by the Scenario overload of run().
struct RhLog {
  std::vector<int> iterations;
  std::vector<double> elapsed;
  std::vector<double> residual;
  std::vector<SolverStatus> status;
  std::vector<VectorXd> states;       // x[0..completed_steps], error coordinates
  std::vector<VectorXd> inputs;       // applied (physical) inputs per step
  std::vector<VectorXd> game_inputs;  // first-stage game inputs per step
  std::vector<double> violation_max;  // realized per-step max constraint value
  std::vector<bool> violation_flag;
  bool collision = false;
  int completed_steps = 0;
  std::string abort_reason;  // nonempty if a solver failure cut the run short

  std::vector<VectorXd> positions;   // per step+1, scenario runs only
  std::vector<VectorXd> velocities;
};

/// Shift-and-pad warm start: per agent, drop stage 0 and append a zero stage;
/// duals reset to ones (constraint row identities move between steps, so dual
/// reuse is not attempted).
inline WarmStart shift_warm_start(const StackedGame& sg, const VectorXd& prev_u,
                                  const VectorXd& prev_lambda) {
  if (prev_u.size() != sg.total_inputs())
    throw std::invalid_argument("shift_warm_start: stacked input size mismatch");
  (void)prev_lambda;
  VectorXd u0 = VectorXd::Zero(sg.total_inputs());
  for (std::size_t i = 0; i < sg.m.size(); ++i) {
    const Eigen::Index off = sg.agent_offset(i), mi = sg.m[i];
    u0.segment(off, mi * (sg.T - 1)) = prev_u.segment(off + mi, mi * (sg.T - 1));
  }
  return {std::move(u0), VectorXd::Ones(sg.D.rows())};
}

/// Variant that fills the appended stage with the terminal feedback
/// K_i x_pred[T] evaluated on the previous prediction instead of zeros.
inline WarmStart shift_warm_start_tail(const StackedGame& sg, const VectorXd& prev_u,
                                       const VectorXd& prev_lambda,
                                       const RiccatiSolution& riccati,
                                       const VectorXd& prev_x0) {
  WarmStart warm = shift_warm_start(sg, prev_u, prev_lambda);
  const Eigen::Index n = sg.n;
  VectorXd x_pred = sg.Theta.bottomRows(n) * prev_x0;
  for (std::size_t j = 0; j < sg.m.size(); ++j)
    x_pred += sg.Gamma[j].bottomRows(n) * prev_u.segment(sg.agent_offset(j), sg.m[j] * sg.T);
  for (std::size_t i = 0; i < sg.m.size(); ++i) {
    const Eigen::Index off = sg.agent_offset(i), mi = sg.m[i];
    warm.u.segment(off + mi * (sg.T - 1), mi) = riccati.K[i] * x_pred;
  }
  return warm;
}

namespace detail {

// max over stage rows evaluated at (x, u_stage), in game coordinates
inline double stage_violation(const ConstraintSpec& spec, const VectorXd& x,
                              const VectorXd& u_stage, ConstraintClass* worst_class = nullptr) {
  double worst = 0.0;
  if (spec.stage_rows() > 0) {
    VectorXd vals = spec.Cx * x + spec.c;
    Eigen::Index off = 0;
    for (std::size_t j = 0; j < spec.Cu.size(); ++j) {
      vals += spec.Cu[j] * u_stage.segment(off, spec.Cu[j].cols());
      off += spec.Cu[j].cols();
    }
    for (Eigen::Index r = 0; r < vals.size(); ++r) {
      if (vals(r) > worst) {
        worst = vals(r);
        if (worst_class) *worst_class = spec.stage_class[r];
      }
    }
  }
  return worst;
}

}  // namespace detail

/// Per-class violation summary over a realized closed-loop trajectory.
struct ViolationClassReport {
  double max_violation = 0.0;
  int first_step = -1;
  int count = 0;
};

struct ViolationReport {
  std::map<ConstraintClass, ViolationClassReport> by_class;
  double max_violation = 0.0;
  bool collision = false;

  bool empty() const { return by_class.empty() && !collision; }
};

/// Evaluates every stage constraint on the realized (not predicted)
/// trajectory: stage rows at (x[t], u[t]) for each executed step, state rows
/// at x[t] for t >= 1. A distance row violating by more than the scenario's
/// d_min means the physical gap is nonpositive, which is flagged as a
/// collision.
inline ViolationReport check_violations(const RhLog& log, const LqGame& game,
                                        double tol = 1e-6) {
  const ConstraintSpec& spec = game.constraints;
  ViolationReport report;

  auto record = [&](ConstraintClass cls, double value, int step) {
    if (value <= tol) return;
    auto& entry = report.by_class[cls];
    entry.count += 1;
    if (entry.first_step < 0) entry.first_step = step;
    entry.max_violation = std::max(entry.max_violation, value);
    report.max_violation = std::max(report.max_violation, value);
    if (cls == ConstraintClass::distance && spec.collision_gap > 0.0 &&
        value >= spec.collision_gap)
      report.collision = true;
  };

  for (int t = 0; t < log.completed_steps; ++t) {
    if (spec.stage_rows() > 0) {
      VectorXd vals = spec.Cx * log.states[t] + spec.c;
      Eigen::Index off = 0;
      for (std::size_t j = 0; j < spec.Cu.size(); ++j) {
        vals += spec.Cu[j] * log.game_inputs[t].segment(off, spec.Cu[j].cols());
        off += spec.Cu[j].cols();
      }
      for (Eigen::Index r = 0; r < vals.size(); ++r) record(spec.stage_class[r], vals(r), t);
    }
    if (spec.state_rows() > 0) {
      const VectorXd vals = spec.Dx * log.states[t + 1] + spec.dx;
      for (Eigen::Index r = 0; r < vals.size(); ++r) record(spec.state_class[r], vals(r), t);
    }
  }
  return report;
}

/// Receding-horizon closed loop: at every step rebuild (q, d) for the current
/// state, solve the AVI, apply the first input through the pre-stabilizer,
/// and propagate. The condensed matrices (M, Theta, Gamma, D) are built once;
/// only q and d change with the state. Timing covers the solve call only.
inline RhLog run(const LqGame& game, const RiccatiSolution& riccati, const RhConfig& cfg,
                 const VectorXd& x0, const StackedGame* prebuilt = nullptr) {
  if (cfg.sim_steps < 1) throw std::invalid_argument("run: sim_steps must be >= 1");
  if (!is_known_solver(cfg.solver.name))
    throw std::invalid_argument("run: unknown solver '" + cfg.solver.name + "'");
  if (prebuilt && prebuilt->T != cfg.horizon_T)
    throw std::invalid_argument("run: prebuilt stacked game horizon mismatch");

  StackedGame local;
  if (!prebuilt) local = build_stacked_game(game, cfg.horizon_T, riccati);
  const StackedGame& sg = prebuilt ? *prebuilt : local;

  SolverOptions solver = cfg.solver;
  if (cfg.iteration_budget) {
    solver.newton.iteration_budget = cfg.iteration_budget;
    solver.first_order.iteration_budget = cfg.iteration_budget;
  }

  RhLog log;
  log.states.push_back(x0);
  VectorXd x = x0;
  VectorXd prev_u, prev_lambda, prev_x;

  for (int t = 0; t < cfg.sim_steps; ++t) {
    const AviProblem avi = sg.avi_for(x);

    std::optional<WarmStart> warm;
    if (cfg.warm_start && prev_u.size() > 0) {
      warm = (cfg.warm_mode == RhConfig::WarmStartMode::terminal_feedback)
                 ? shift_warm_start_tail(sg, prev_u, prev_lambda, riccati, prev_x)
                 : shift_warm_start(sg, prev_u, prev_lambda);
    }

    const SolverReport rep = solve_named(solver, avi, std::move(warm));
    log.iterations.push_back(rep.iterations);
    log.elapsed.push_back(rep.elapsed);
    log.residual.push_back(rep.residual_trace.empty() ? 0.0 : rep.residual_trace.back());
    log.status.push_back(rep.status);

    if (rep.status == SolverStatus::NumericalFailure) {
      log.abort_reason = "solver failure at step " + std::to_string(t) +
                         (rep.message.empty() ? "" : ": " + rep.message);
      log.completed_steps = t;
      break;
    }

    // first-stage inputs, agent-major
    VectorXd u_first(sg.total_inputs() / sg.T);
    Eigen::Index pos = 0;
    for (std::size_t i = 0; i < sg.m.size(); ++i) {
      u_first.segment(pos, sg.m[i]) = rep.solution.segment(sg.agent_offset(i), sg.m[i]);
      pos += sg.m[i];
    }
    const VectorXd applied = game.applied_input(x, u_first);
    log.game_inputs.push_back(u_first);
    log.inputs.push_back(applied);

    prev_u = rep.solution;
    prev_lambda = rep.multipliers;
    prev_x = x;

    VectorXd x_next = game.A * x;
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < game.B.size(); ++i) {
      x_next += game.B[i] * u_first.segment(off, game.B[i].cols());
      off += game.B[i].cols();
    }
    x = std::move(x_next);
    log.states.push_back(x);
    log.completed_steps = t + 1;
  }

  // realized per-step violation metrics
  const ViolationReport full = check_violations(log, game, kFeasibilityTol);
  log.collision = full.collision;
  for (int t = 0; t < log.completed_steps; ++t) {
    double worst = detail::stage_violation(game.constraints, log.states[t], log.game_inputs[t]);
    if (game.constraints.state_rows() > 0) {
      const VectorXd vals = game.constraints.Dx * log.states[t + 1] + game.constraints.dx;
      worst = std::max(worst, vals.maxCoeff());
    }
    log.violation_max.push_back(std::max(worst, 0.0));
    log.violation_flag.push_back(worst > 1e-6);
  }
  return log;
}

/// Scenario-aware run: also reconstructs the physical trajectory by
/// integrating the double integrators under the applied inputs.
inline RhLog run(const Scenario& scenario, const RiccatiSolution& riccati, RhConfig cfg,
                 const StackedGame* prebuilt = nullptr) {
  if (cfg.sim_steps < 1) cfg.sim_steps = scenario.sim_steps;
  RhLog log = run(scenario.game, riccati, cfg, scenario.x0, prebuilt);

  VectorXd pos = scenario.p0, vel = scenario.v0;
  log.positions.push_back(pos);
  log.velocities.push_back(vel);
  for (int t = 0; t < log.completed_steps; ++t) {
    scenario_physical_step(scenario, pos, vel, log.inputs[t]);
    log.positions.push_back(pos);
    log.velocities.push_back(vel);
  }
  return log;
}

}  // namespace lqvi
