// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lqvi/problem.hpp"

namespace lqvi {

/// Primal/dual pair returned by the brute-force oracle.
struct KktPoint {
  VectorXd u;       // n
  VectorXd lambda;  // m, zero on inactive rows
};

/// Brute-force AVI solver used as ground truth: enumerates all 2^m active
/// sets, solves the equality-constrained KKT system
///   M u + q + D_A^T lambda_A = 0,   D_A u + d_A = 0,   lambda_inactive = 0,
/// and accepts the candidate with lambda_A >= -tol and D u + d <= tol. For a
/// strongly monotone operator over a nonempty set the accepted point is the
/// unique AVI solution.
///
/// Deliberately independent of the Newton machinery: plain LU enumeration
/// only. Exponential in m; refuses m > 20.
inline KktPoint active_set_oracle(const AviProblem& p, double tol = 1e-8) {
  const Eigen::Index n = p.n(), m = p.m();
  if (m > 20) throw std::invalid_argument("active_set_oracle: m > 20 (enumeration bound)");

  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask & (1u << i)) active.push_back(i);
    const Eigen::Index a = static_cast<Eigen::Index>(active.size());

    MatrixXd kkt = MatrixXd::Zero(n + a, n + a);
    VectorXd rhs(n + a);
    kkt.topLeftCorner(n, n) = p.op.M;
    rhs.head(n) = -p.op.q;
    for (Eigen::Index j = 0; j < a; ++j) {
      kkt.block(0, n + j, n, 1) = p.set.D.row(active[j]).transpose();
      kkt.block(n + j, 0, 1, n) = p.set.D.row(active[j]);
      rhs(n + j) = -p.set.d(active[j]);
    }

    Eigen::FullPivLU<MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const VectorXd sol = lu.solve(rhs);

    bool ok = true;
    for (Eigen::Index j = 0; j < a && ok; ++j)
      if (sol(n + j) < -tol) ok = false;
    if (!ok) continue;

    const VectorXd u = sol.head(n);
    if (!p.set.contains(u, tol)) continue;

    VectorXd lambda = VectorXd::Zero(m);
    for (Eigen::Index j = 0; j < a; ++j) lambda(active[j]) = sol(n + j);
    return {u, lambda};
  }
  throw NoFeasibleCandidateError(
      "active_set_oracle: no active set yields a KKT point (infeasible or non-monotone input)");
}

}  // namespace lqvi
