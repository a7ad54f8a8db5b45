// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include <chrono>
#include <optional>

#include "lqvi/newton.hpp"
#include "lqvi/problem.hpp"

namespace lqvi {

/// Parameters of the first-order solvers. `fb_step`, when unset, is derived
/// as mu_m / L^2 (half the classical 2 mu_m / L^2 stability bound) with L the
/// spectral norm of M. Both solvers share the natural-residual termination
/// rule with the Newton solver.
struct FirstOrderConfig {
  double tol = 1e-4;
  int max_iter = 100000;
  std::optional<int> iteration_budget;
  std::optional<double> fb_step;
  double dr_gamma = 1.0;
};

/// Resolvent of the scaled affine operator gamma F: solves
/// (I + gamma M) x = z - gamma q. Factorized once per instance.
class AffineResolvent {
 public:
  AffineResolvent(const AffineOperator& op, double gamma)
      : gamma_(gamma), q_(op.q),
        A_(MatrixXd::Identity(op.dim(), op.dim()) + gamma * op.M), lu_(A_) {
    if (!(gamma > 0.0)) throw std::invalid_argument("AffineResolvent: gamma must be > 0");
    const VectorXd probe = VectorXd::Ones(op.dim());
    const VectorXd x = lu_.solve(probe);
    if (!x.allFinite() || (A_ * x - probe).norm() > 1e-6 * probe.norm())
      throw NumericalError("AffineResolvent: (I + gamma M) is singular");
  }

  VectorXd operator()(const VectorXd& z) const { return lu_.solve(z - gamma_ * q_); }

 private:
  double gamma_;
  VectorXd q_;
  MatrixXd A_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

namespace detail {

inline double derived_fb_step(const AviProblem& p) {
  const double mu_m = strong_monotonicity_modulus(p.op.M);
  if (mu_m <= 0.0)
    throw std::invalid_argument(
        "fb_solve: operator is not strongly monotone; set fb_step explicitly");
  const double L = p.op.M.jacobiSvd().singularValues()(0);
  return mu_m / (L * L);
}

}  // namespace detail

/// Forward-Backward (projected-gradient) iteration
///   u_{k+1} = pi_C(u_k - gamma (M u_k + q)).
/// Primal-only; multipliers are reported as zeros. Budgeted runs return the
/// last iterate even if it is infeasible.
inline SolverReport fb_solve(const AviProblem& p, const FirstOrderConfig& cfg = {},
                             std::optional<WarmStart> warm = std::nullopt) {
  const auto t0 = std::chrono::steady_clock::now();
  const double gamma = cfg.fb_step ? *cfg.fb_step : detail::derived_fb_step(p);

  VectorXd u = warm ? warm->u : VectorXd::Zero(p.n());
  SolverReport rep;
  rep.multipliers = VectorXd::Zero(p.m());
  // Warm-start caches for the two projections (step and residual metric).
  VectorXd step_y, step_nu, res_y, res_nu;
  try {
    for (int k = 0;; ++k) {
      detail::ProjectionResult res = detail::project_newton(
          p.set, u - p.op(u), res_y.size() ? &res_y : nullptr, res_nu.size() ? &res_nu : nullptr);
      res_y = res.point;
      res_nu = res.multipliers;
      const double r = (u - res.point).norm();
      rep.residual_trace.push_back(r);
      rep.merit_trace.push_back(0.5 * r * r);
      if (r <= cfg.tol) {
        rep.status = SolverStatus::Converged;
        break;
      }
      if (cfg.iteration_budget && k >= *cfg.iteration_budget) {
        rep.status = SolverStatus::BudgetExhausted;
        break;
      }
      if (k >= cfg.max_iter) {
        rep.status = SolverStatus::MaxIterations;
        break;
      }
      detail::ProjectionResult step = detail::project_newton(
          p.set, u - gamma * p.op(u), step_y.size() ? &step_y : nullptr,
          step_nu.size() ? &step_nu : nullptr);
      step_y = step.point;
      step_nu = step.multipliers;
      u = step.point;
    }
  } catch (const NumericalError& e) {
    rep.status = SolverStatus::NumericalFailure;
    rep.message = e.what();
  }
  rep.solution = u;
  rep.iterations = static_cast<int>(rep.residual_trace.size());
  rep.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// Douglas-Rachford splitting between the affine operator F and the normal
/// cone of C:
///   u_k = J(z_k),  z_{k+1} = z_k + pi_C(2 u_k - z_k) - u_k,
/// with J the resolvent of gamma F. Terminates on the natural residual of
/// u_k. Multipliers are recovered from the final projection subproblem
/// (scaled by 1/gamma), which at a fixed point carry the AVI duals.
inline SolverReport dr_solve(const AviProblem& p, const FirstOrderConfig& cfg = {},
                             std::optional<WarmStart> warm = std::nullopt) {
  const auto t0 = std::chrono::steady_clock::now();
  const double gamma = cfg.dr_gamma;
  SolverReport rep;
  rep.multipliers = VectorXd::Zero(p.m());
  VectorXd u = warm ? warm->u : VectorXd::Zero(p.n());
  try {
    const AffineResolvent resolvent(p.op, gamma);
    // z chosen so that J(z) equals the initial primal point.
    VectorXd z = u + gamma * p.op(u);
    VectorXd proj_y, proj_nu, res_y, res_nu;
    for (int k = 0;; ++k) {
      u = resolvent(z);
      detail::ProjectionResult res = detail::project_newton(
          p.set, u - p.op(u), res_y.size() ? &res_y : nullptr, res_nu.size() ? &res_nu : nullptr);
      res_y = res.point;
      res_nu = res.multipliers;
      const double r = (u - res.point).norm();
      rep.residual_trace.push_back(r);
      rep.merit_trace.push_back(0.5 * r * r);
      if (r <= cfg.tol) {
        rep.status = SolverStatus::Converged;
        break;
      }
      if (cfg.iteration_budget && k >= *cfg.iteration_budget) {
        rep.status = SolverStatus::BudgetExhausted;
        break;
      }
      if (k >= cfg.max_iter) {
        rep.status = SolverStatus::MaxIterations;
        break;
      }
      detail::ProjectionResult step = detail::project_newton(
          p.set, 2.0 * u - z, proj_y.size() ? &proj_y : nullptr,
          proj_nu.size() ? &proj_nu : nullptr);
      proj_y = step.point;
      proj_nu = step.multipliers;
      z += step.point - u;
    }
    if (p.m() > 0 && rep.status == SolverStatus::Converged) {
      // At the fixed point, pi_C(2u - z) has normal-cone element (u - z)/gamma
      // = -F(u), so its multipliers divided by gamma are the AVI duals.
      detail::ProjectionResult last = detail::project_newton(p.set, 2.0 * u - z,
                                                             proj_y.size() ? &proj_y : nullptr,
                                                             proj_nu.size() ? &proj_nu : nullptr);
      rep.multipliers = last.multipliers / gamma;
    }
  } catch (const NumericalError& e) {
    rep.status = SolverStatus::NumericalFailure;
    rep.message = e.what();
  }
  rep.solution = u;
  rep.iterations = static_cast<int>(rep.residual_trace.size());
  rep.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace lqvi
