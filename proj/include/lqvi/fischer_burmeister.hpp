// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include <cmath>

#include "lqvi/problem.hpp"

namespace lqvi {

/// Smoothed Fischer-Burmeister function
///   phi_mu(a, b) = sqrt(a^2 + b^2 + mu^2) - a - b.
/// For mu = 0 this is the exact FB function: zero iff a >= 0, b >= 0, ab = 0.
///
/// Evaluated in the rationalized form (mu^2 - 2ab) / (root + a + b) when
/// a + b > 0, which keeps full relative precision near the root where the
/// naive difference cancels.
inline double phi_mu(double a, double b, double mu) {
  const double root = std::sqrt(a * a + b * b + mu * mu);
  const double sum = a + b;
  if (sum > 0.0) return (mu * mu - 2.0 * a * b) / (root + sum);
  return root - sum;
}

/// Primal-dual iterate of the smoothed KKT system. mu must stay strictly
/// positive inside the solver; mu = 0 is allowed only when evaluating the
/// exact FB residual in tests.
struct SmoothedKktState {
  VectorXd u;       // n
  VectorXd lambda;  // m
  double mu = 1e-6;
};

/// Partial derivatives of phi_mu at one complementarity pair:
/// g = d/da, h = d/db. Both lie in (-2, 0) strictly when mu > 0.
struct FbDerivative {
  double g;
  double h;
};

/// Rationalized so that neither derivative underflows to exactly zero: for a
/// dominant positive argument, x/r - 1 rounds to 0 once the other terms drop
/// below machine precision, which would break the H^-1 elimination in the
/// reduced Newton system.
inline FbDerivative fb_derivative(double a, double b, double mu) {
  const double r = std::sqrt(a * a + b * b + mu * mu);
  FbDerivative out;
  out.g = (a > 0.0) ? -(b * b + mu * mu) / (r * (a + r)) : a / r - 1.0;
  out.h = (b > 0.0) ? -(a * a + mu * mu) / (r * (b + r)) : b / r - 1.0;
  return out;
}

/// Constraint slack s = -(D u + d), nonnegative on the feasible set.
///
/// The complementarity pair fed to phi_mu is (s_i, lambda_i): the KKT
/// conditions encoded are s >= 0, lambda >= 0, s_i lambda_i = 0, which is the
/// complementarity between lambda and the inequality D u + d <= 0.
inline VectorXd constraint_slack(const AviProblem& p, const VectorXd& u) {
  return -(p.set.D * u + p.set.d);
}

/// Residual of the smoothed KKT system,
///   Phi_mu(u, lambda) = [ M u + q + D^T lambda ; phi_mu(s, lambda) ],
/// with s = -(D u + d) and phi_mu applied componentwise. Zero exactly at the
/// (smoothed) KKT point.
inline VectorXd ncp_residual(const AviProblem& p, const SmoothedKktState& x) {
  const Eigen::Index n = p.n(), m = p.m();
  if (x.u.size() != n || x.lambda.size() != m)
    throw std::invalid_argument("ncp_residual: state dimension mismatch");
  VectorXd out(n + m);
  out.head(n) = p.op.M * x.u + p.op.q + p.set.D.transpose() * x.lambda;
  const VectorXd s = constraint_slack(p, x.u);
  for (Eigen::Index i = 0; i < m; ++i) out(n + i) = phi_mu(s(i), x.lambda(i), x.mu);
  return out;
}

/// Diagonal derivative factors of the complementarity block, evaluated at the
/// current slack/multiplier pairs.
struct FbDiagonals {
  VectorXd g;  // d phi / d s, in (-2, 0)
  VectorXd h;  // d phi / d lambda, in (-2, 0)
};

inline FbDiagonals fb_diagonals(const AviProblem& p, const SmoothedKktState& x) {
  const Eigen::Index m = p.m();
  FbDiagonals out{VectorXd(m), VectorXd(m)};
  const VectorXd s = constraint_slack(p, x.u);
  for (Eigen::Index i = 0; i < m; ++i) {
    const FbDerivative der = fb_derivative(s(i), x.lambda(i), x.mu);
    out.g(i) = der.g;
    out.h(i) = der.h;
  }
  return out;
}

/// Jacobian of ncp_residual,
///   [ M        D^T ]
///   [ -G_mu D  H_mu ],
/// where G_mu = diag(g_i), H_mu = diag(h_i) are the phi_mu derivatives with
/// respect to slack and multiplier. The -G_mu D block carries the chain rule
/// through s = -(D u + d). Nonsingular for mu > 0 whenever M is strongly
/// monotone.
inline MatrixXd ncp_jacobian(const AviProblem& p, const SmoothedKktState& x) {
  if (x.mu <= 0.0) throw std::invalid_argument("ncp_jacobian: requires mu > 0");
  const Eigen::Index n = p.n(), m = p.m();
  const FbDiagonals diag = fb_diagonals(p, x);
  MatrixXd J(n + m, n + m);
  J.topLeftCorner(n, n) = p.op.M;
  J.topRightCorner(n, m) = p.set.D.transpose();
  J.bottomLeftCorner(m, n) = (-diag.g).asDiagonal() * p.set.D;
  J.bottomRightCorner(m, m) = MatrixXd(diag.h.asDiagonal());
  return J;
}

}  // namespace lqvi
