// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>

#include "lqvi/fischer_burmeister.hpp"
#include "lqvi/problem.hpp"

namespace lqvi {

/// Parameters of the smoothed-Newton AVI solver.
///
/// `tol` applies to the natural residual ||u - pi_C(u - F(u))|| in solve(),
/// and to ||Phi_mu|| in solve_smoothed(). The Armijo parameters must lie in
/// (0, 1). When `random_init_seed` is set and no warm start is given, the
/// initial point is drawn from the seeded generator instead of the
/// deterministic default (u = 0, lambda = 1).
struct NewtonConfig {
  double tol = 1e-4;
  int max_iter = 100000;
  double mu = 1e-6;
  double armijo_c = 1e-4;
  double backtrack_beta = 0.5;
  std::optional<int> iteration_budget;
  bool use_reduced_system = false;
  std::optional<std::uint64_t> random_init_seed;
};

/// Primal-dual initial point.
struct WarmStart {
  VectorXd u;
  VectorXd lambda;
};

/// Newton step (du, dlambda).
struct NewtonDirection {
  VectorXd du;
  VectorXd dlambda;
};

namespace detail {

// LU with partial pivoting is backward stable, so a finite solution is the
// acceptance test; a vanishing pivot surfaces as inf/nan. Direction quality is
// guarded downstream by the Armijo merit test, which rejects non-descent
// steps.
inline constexpr double kRidge = 1e-10;

// Elimination weights g/h grow like 2 lambda^2 / mu^2 once a complementarity
// pair converges; past ~1e16 the Schur complement M + D^T W D loses M
// entirely to rounding and the factorization returns inf. Capping the weight
// keeps the reduced matrix well formed; rows at the cap are machine-converged,
// so the (inexact-Newton) distortion is below every termination tolerance.
inline constexpr double kMaxEliminationWeight = 1e12;

}  // namespace detail

/// Newton direction from the full (n+m) x (n+m) dense system
///   grad(Phi_mu) [du; dlambda] = -Phi_mu.
/// Dense LU with partial pivoting; M is nonsymmetric in general. On a failed
/// factorization, retries once with a small ridge on the (1,1) block before
/// giving up.
inline NewtonDirection newton_direction_full(const AviProblem& p, const SmoothedKktState& x) {
  const Eigen::Index n = p.n(), m = p.m();
  const VectorXd rhs = -ncp_residual(p, x);
  MatrixXd J = ncp_jacobian(p, x);
  VectorXd step = J.partialPivLu().solve(rhs);
  if (!step.allFinite()) {
    J.topLeftCorner(n, n).diagonal().array() += detail::kRidge;
    step = J.partialPivLu().solve(rhs);
    if (!step.allFinite()) throw NumericalError("newton_direction_full: singular jacobian");
  }
  return {step.head(n), step.tail(m)};
}

/// Newton direction via the n x n Schur-reduced system
///   (M + D^T H^-1 G D) du = -r1 + D^T H^-1 r2,
///   dlambda = H^-1 (G D du - r2),
/// with r1/r2 the stationarity/complementarity residual blocks. H has
/// strictly negative diagonal for mu > 0, so the elimination is always
/// defined; H^-1 G is a nonnegative diagonal, making the reduced matrix
/// nonsingular whenever M is strongly monotone. Costs O(n^3 + m n^2) against
/// the full path's O((n+m)^3).
inline NewtonDirection newton_direction_reduced(const AviProblem& p, const SmoothedKktState& x) {
  if (x.mu <= 0.0) throw std::invalid_argument("newton_direction_reduced: requires mu > 0");
  const Eigen::Index n = p.n(), m = p.m();
  const VectorXd phi = ncp_residual(p, x);
  const VectorXd r1 = phi.head(n), r2 = phi.tail(m);
  const FbDiagonals diag = fb_diagonals(p, x);

  VectorXd w(m), h_eff(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double wi = diag.g(i) / diag.h(i);  // >= 0
    if (wi > detail::kMaxEliminationWeight) {
      w(i) = detail::kMaxEliminationWeight;
      h_eff(i) = diag.g(i) / detail::kMaxEliminationWeight;
    } else {
      w(i) = wi;
      h_eff(i) = diag.h(i);
    }
  }
  MatrixXd reduced = p.op.M;
  reduced.noalias() += p.set.D.transpose() * w.asDiagonal() * p.set.D;
  const VectorXd rhs = -r1 + p.set.D.transpose() * r2.cwiseQuotient(h_eff);

  VectorXd du = reduced.partialPivLu().solve(rhs);
  if (!du.allFinite()) {
    reduced.diagonal().array() += detail::kRidge;
    du = reduced.partialPivLu().solve(rhs);
    if (!du.allFinite())
      throw NumericalError("newton_direction_reduced: singular reduced system");
  }
  const VectorXd dlambda = (diag.g.cwiseProduct(p.set.D * du) - r2).cwiseQuotient(h_eff);
  return {du, dlambda};
}

inline NewtonDirection newton_direction(const AviProblem& p, const SmoothedKktState& x,
                                        bool use_reduced) {
  return use_reduced ? newton_direction_reduced(p, x) : newton_direction_full(p, x);
}

/// Backtracking Armijo line search on the merit Psi = 0.5 ||Phi_mu||^2.
/// Returns the largest alpha in {1, beta, beta^2, ...} with
///   Psi(x + alpha dir) <= Psi(x) + c alpha <grad Psi, dir>,
/// where grad Psi = grad(Phi)^T Phi is applied blockwise without forming the
/// Jacobian. Throws once alpha underflows 1e-12, which signals a non-descent
/// direction.
inline double armijo_linesearch(const AviProblem& p, const SmoothedKktState& x,
                                const NewtonDirection& dir, double c = 1e-4, double beta = 0.5) {
  if (!(c > 0.0 && c < 1.0) || !(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("armijo_linesearch: c and beta must lie in (0,1)");
  const VectorXd phi = ncp_residual(p, x);
  const double psi0 = 0.5 * phi.squaredNorm();

  // <grad Psi, dir> = Phi^T (grad Phi * dir), assembled block by block.
  const FbDiagonals diag = fb_diagonals(p, x);
  const Eigen::Index n = p.n(), m = p.m();
  VectorXd jdir(n + m);
  jdir.head(n) = p.op.M * dir.du + p.set.D.transpose() * dir.dlambda;
  jdir.tail(m) = -diag.g.cwiseProduct(p.set.D * dir.du) + diag.h.cwiseProduct(dir.dlambda);
  const double slope = phi.dot(jdir);

  double alpha = 1.0;
  SmoothedKktState trial{x.u, x.lambda, x.mu};
  while (true) {
    trial.u = x.u + alpha * dir.du;
    trial.lambda = x.lambda + alpha * dir.dlambda;
    const double psi = 0.5 * ncp_residual(p, trial).squaredNorm();
    if (psi <= psi0 + c * alpha * slope) return alpha;
    alpha *= beta;
    if (alpha < 1e-12)
      throw NumericalError("armijo_linesearch: step underflow (non-descent direction)");
  }
}

namespace detail {

// Damped-Newton iteration on Phi_mu(u, lambda) = 0. The metric callback maps
// the current state to the scalar used for the termination test and the
// residual trace; it is invoked once per iteration, including at the accepted
// final point.
template <typename Metric>
SolverReport newton_loop(const AviProblem& p, const NewtonConfig& cfg, SmoothedKktState x,
                         Metric&& metric) {
  if (cfg.mu <= 0.0) throw std::invalid_argument("newton solve: mu must be > 0");
  const auto t0 = std::chrono::steady_clock::now();
  SolverReport rep;
  rep.status = SolverStatus::MaxIterations;
  try {
    for (int k = 0;; ++k) {
      const double r = metric(x);
      rep.residual_trace.push_back(r);
      rep.merit_trace.push_back(0.5 * ncp_residual(p, x).squaredNorm());
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
      if (k >= 20 && p.m() > 0 && x.lambda.lpNorm<Eigen::Infinity>() > 1e8) {
        rep.status = SolverStatus::NumericalFailure;
        rep.suspected_infeasible = true;
        rep.message = "multiplier norm exceeded 1e8; the set may be empty";
        break;
      }
      const NewtonDirection dir = newton_direction(p, x, cfg.use_reduced_system);
      const double alpha = armijo_linesearch(p, x, dir, cfg.armijo_c, cfg.backtrack_beta);
      rep.alpha_trace.push_back(alpha);
      x.u += alpha * dir.du;
      x.lambda += alpha * dir.dlambda;
    }
  } catch (const NumericalError& e) {
    rep.status = SolverStatus::NumericalFailure;
    rep.message = e.what();
  }
  rep.solution = x.u;
  rep.multipliers = x.lambda;
  rep.iterations = static_cast<int>(rep.residual_trace.size());
  rep.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline SmoothedKktState initial_state(const AviProblem& p, const NewtonConfig& cfg,
                                      const std::optional<WarmStart>& warm) {
  SmoothedKktState x;
  x.mu = cfg.mu;
  if (warm) {
    if (warm->u.size() != p.n() || warm->lambda.size() != p.m())
      throw std::invalid_argument("solve: warm start dimension mismatch");
    x.u = warm->u;
    x.lambda = warm->lambda;
  } else if (cfg.random_init_seed) {
    std::mt19937_64 rng(*cfg.random_init_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    x.u = VectorXd::NullaryExpr(p.n(), [&](Eigen::Index) { return gauss(rng); });
    x.lambda = VectorXd::NullaryExpr(p.m(), [&](Eigen::Index) { return std::abs(gauss(rng)) + 0.5; });
  } else {
    // Strictly positive duals keep the first iterates away from the phi kink.
    x.u = VectorXd::Zero(p.n());
    x.lambda = VectorXd::Ones(p.m());
  }
  return x;
}

struct ProjectionResult {
  VectorXd point;
  VectorXd multipliers;
  int iterations = 0;
};

// Metric projection onto {D y + d <= 0} computed as AVI(C, I, -z): the
// operator y - z is strongly monotone with modulus 1, so the smoothed Newton
// iteration converges globally. Terminates on ||Phi_mu|| (scale-aware), which
// avoids the recursion a natural-residual test would need. A tiny mu keeps the
// complementarity bias of the computed point at s_i lambda_i = mu^2/2, i.e.
// far below every tolerance this projection backs.
inline ProjectionResult project_newton(const PolyhedralSet& set, const VectorXd& z,
                                       const VectorXd* warm_y = nullptr,
                                       const VectorXd* warm_nu = nullptr) {
  if (set.dim() != z.size()) throw std::invalid_argument("project_polyhedron: dimension mismatch");
  if (set.rows() == 0) return {z, VectorXd::Zero(0), 0};

  AviProblem prob(AffineOperator(MatrixXd::Identity(z.size(), z.size()), -z), set);
  NewtonConfig cfg;
  cfg.mu = 1e-8;
  cfg.tol = 1e-10 * std::max(1.0, z.lpNorm<Eigen::Infinity>());
  cfg.max_iter = 300;
  cfg.use_reduced_system = true;

  std::optional<WarmStart> warm;
  if (warm_y && warm_nu && warm_y->size() == set.dim() && warm_nu->size() == set.rows())
    warm = WarmStart{*warm_y, *warm_nu};

  SolverReport rep = newton_loop(prob, cfg, initial_state(prob, cfg, warm),
                                 [&](const SmoothedKktState& x) {
                                   return ncp_residual(prob, x).norm();
                                 });
  if (rep.status != SolverStatus::Converged) {
    if (rep.suspected_infeasible)
      throw InfeasibleSetError("project_polyhedron: " + rep.message);
    throw NumericalError("project_polyhedron: inner solve did not converge (" +
                         std::string(to_string(rep.status)) +
                         (rep.message.empty() ? "" : ": " + rep.message) + ")");
  }
  return {std::move(rep.solution), std::move(rep.multipliers), rep.iterations};
}

}  // namespace detail

/// Metric projection argmin_{y : D y + d <= 0} ||z - y||.
inline VectorXd project_polyhedron(const PolyhedralSet& set, const VectorXd& z) {
  return detail::project_newton(set, z).point;
}

/// Natural residual ||u - pi_C(u - M u - q)||; zero exactly at the AVI
/// solution. This is the termination metric shared by every solver in the
/// library.
inline double natural_residual(const AviProblem& p, const VectorXd& u) {
  if (u.size() != p.n()) throw std::invalid_argument("natural_residual: dimension mismatch");
  const VectorXd w = u - p.op(u);
  return (u - project_polyhedron(p.set, w)).norm();
}

/// Solve the AVI by the smoothed Fischer-Burmeister Newton method, terminating
/// on the natural residual of the original problem (so the smoothing bias is
/// absorbed by the tolerance). The smoothing parameter is held fixed; no
/// mu-continuation. `cfg.use_reduced_system` selects the Schur-reduced
/// direction ("fast-newton") over the full factorization.
///
/// On Converged the reported multipliers come from the terminal residual
/// projection, whose inner duals satisfy the stationarity and complementarity
/// conditions at the accepted primal point; the raw dual iterate can lag the
/// primal when termination happens early.
inline SolverReport solve(const AviProblem& p, const NewtonConfig& cfg = {},
                          std::optional<WarmStart> warm = std::nullopt) {
  // The projection behind the natural residual is warm-started from the
  // previous evaluation; near convergence it needs only a couple of inner
  // iterations.
  VectorXd proj_y, proj_nu;
  auto metric = [&](const SmoothedKktState& x) {
    const VectorXd w = x.u - p.op(x.u);
    detail::ProjectionResult pr = detail::project_newton(
        p.set, w, proj_y.size() ? &proj_y : nullptr, proj_nu.size() ? &proj_nu : nullptr);
    proj_y = pr.point;
    proj_nu = pr.multipliers;
    return (x.u - pr.point).norm();
  };
  SolverReport rep = detail::newton_loop(p, cfg, detail::initial_state(p, cfg, warm), metric);
  if (rep.status == SolverStatus::Converged && proj_nu.size() == p.m())
    rep.multipliers = proj_nu;
  return rep;
}

/// Solve the smoothed system Phi_mu(u, lambda) = 0 itself, terminating on
/// ||Phi_mu|| <= cfg.tol. The residual trace carries ||Phi_mu|| values. Used
/// for projection subproblems and for studying the Newton iteration without
/// the natural-residual outer metric.
inline SolverReport solve_smoothed(const AviProblem& p, const NewtonConfig& cfg = {},
                                   std::optional<WarmStart> warm = std::nullopt) {
  return detail::newton_loop(p, cfg, detail::initial_state(p, cfg, warm),
                             [&](const SmoothedKktState& x) {
                               return ncp_residual(p, x).norm();
                             });
}

}  // namespace lqvi
