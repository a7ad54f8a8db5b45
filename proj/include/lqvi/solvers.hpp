// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include <optional>
#include <string>

#include "lqvi/first_order.hpp"
#include "lqvi/newton.hpp"

namespace lqvi {

/// Named solver selection shared by the simulator, the benchmark driver and
/// the CLI. "newton" is the full-factorization path, "fast-newton" the
/// Schur-reduced one; both run the same iteration.
struct SolverOptions {
  std::string name = "newton";  // newton | fast-newton | fb | dr
  NewtonConfig newton;
  FirstOrderConfig first_order;
};

inline bool is_newton_family(const std::string& name) {
  return name == "newton" || name == "fast-newton";
}

inline bool is_known_solver(const std::string& name) {
  return is_newton_family(name) || name == "fb" || name == "dr";
}

inline SolverReport solve_named(const SolverOptions& opts, const AviProblem& problem,
                                std::optional<WarmStart> warm = std::nullopt) {
  if (opts.name == "newton" || opts.name == "fast-newton") {
    NewtonConfig cfg = opts.newton;
    cfg.use_reduced_system = (opts.name == "fast-newton");
    return solve(problem, cfg, std::move(warm));
  }
  if (opts.name == "fb") return fb_solve(problem, opts.first_order, std::move(warm));
  if (opts.name == "dr") return dr_solve(problem, opts.first_order, std::move(warm));
  throw std::invalid_argument("unknown solver '" + opts.name +
                              "' (expected newton, fast-newton, fb or dr)");
}

}  // namespace lqvi
