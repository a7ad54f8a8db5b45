// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace lqvi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Tolerance used for set-membership checks. Kept below solver termination
/// tolerances so feasibility checks never mask solver error.
inline constexpr double kFeasibilityTol = 1e-8;

/// Polyhedral set {u : D u + d <= 0} with m rows in ambient dimension n.
struct PolyhedralSet {
  MatrixXd D;  // m x n
  VectorXd d;  // m

  PolyhedralSet() = default;
  PolyhedralSet(MatrixXd D_, VectorXd d_) : D(std::move(D_)), d(std::move(d_)) {
    if (D.rows() != d.size())
      throw std::invalid_argument("PolyhedralSet: D has " + std::to_string(D.rows()) +
                                  " rows but d has length " + std::to_string(d.size()));
  }

  Eigen::Index rows() const { return D.rows(); }
  Eigen::Index dim() const { return D.cols(); }

  /// Constraint values D u + d (nonpositive on the set).
  VectorXd residual(const VectorXd& u) const { return D * u + d; }

  bool contains(const VectorXd& u, double tol = kFeasibilityTol) const {
    if (rows() == 0) return true;
    return residual(u).maxCoeff() <= tol;
  }
};

/// Unconstrained set of the given dimension (m = 0).
inline PolyhedralSet free_set(Eigen::Index n) {
  return PolyhedralSet(MatrixXd::Zero(0, n), VectorXd::Zero(0));
}

/// Box {lo <= u <= hi} as 2n polyhedral rows (upper bounds first).
inline PolyhedralSet box_set(const VectorXd& lo, const VectorXd& hi) {
  const Eigen::Index n = lo.size();
  if (hi.size() != n) throw std::invalid_argument("box_set: bound length mismatch");
  MatrixXd D(2 * n, n);
  VectorXd d(2 * n);
  D << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
  d << -hi, lo;
  return PolyhedralSet(std::move(D), std::move(d));
}

/// Affine operator F(u) = M u + q.
struct AffineOperator {
  MatrixXd M;  // n x n
  VectorXd q;  // n

  AffineOperator() = default;
  AffineOperator(MatrixXd M_, VectorXd q_) : M(std::move(M_)), q(std::move(q_)) {
    if (M.rows() != M.cols()) throw std::invalid_argument("AffineOperator: M must be square");
    if (M.rows() != q.size()) throw std::invalid_argument("AffineOperator: M/q size mismatch");
  }

  Eigen::Index dim() const { return M.rows(); }
  VectorXd operator()(const VectorXd& u) const { return M * u + q; }
};

/// lambda_min((M + M^T)/2). A positive value certifies strong monotonicity of
/// u -> M u + q with that modulus.
inline double strong_monotonicity_modulus(const MatrixXd& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("strong_monotonicity_modulus: M not square");
  if (M.rows() == 0) return 0.0;
  const MatrixXd sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

/// AVI(C, M, q): find u* in C with <M u* + q, u - u*> >= 0 for all u in C,
/// where C = {u : D u + d <= 0}.
struct AviProblem {
  AffineOperator op;
  PolyhedralSet set;

  AviProblem() = default;
  AviProblem(AffineOperator op_, PolyhedralSet set_) : op(std::move(op_)), set(std::move(set_)) {
    if (op.dim() != set.dim())
      throw std::invalid_argument("AviProblem: operator dimension " + std::to_string(op.dim()) +
                                  " != set dimension " + std::to_string(set.dim()));
  }

  Eigen::Index n() const { return op.dim(); }
  Eigen::Index m() const { return set.rows(); }
};

enum class SolverStatus {
  Converged,
  MaxIterations,
  BudgetExhausted,
  NumericalFailure,
};

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Converged: return "converged";
    case SolverStatus::MaxIterations: return "max_iterations";
    case SolverStatus::BudgetExhausted: return "budget_exhausted";
    case SolverStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

/// Outcome of one AVI solve. `iterations` always equals the length of
/// `residual_trace`; on Converged the last trace entry is <= the tolerance.
struct SolverReport {
  VectorXd solution;
  VectorXd multipliers;
  std::vector<double> residual_trace;
  std::vector<double> merit_trace;
  std::vector<double> alpha_trace;  // accepted step sizes (Newton only)
  int iterations = 0;
  double elapsed = 0.0;  // seconds, solve call only
  SolverStatus status = SolverStatus::NumericalFailure;
  std::string message;   // diagnostic detail for non-converged outcomes
  bool suspected_infeasible = false;
};

/// Thrown when a linear-algebra or inner-solve step breaks down.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when the infeasibility heuristic fires on a projection subproblem.
struct InfeasibleSetError : NumericalError {
  using NumericalError::NumericalError;
};

/// Thrown by the active-set oracle when no active set yields a KKT point.
struct NoFeasibleCandidateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a Riccati iteration fails to reach a stabilizing fixed point.
struct NoStabilizingSolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lqvi
