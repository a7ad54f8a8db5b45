// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lqvi/problem.hpp"

namespace lqvi {

inline double spectral_radius(const MatrixXd& M) {
  if (M.rows() == 0) return 0.0;
  return Eigen::EigenSolver<MatrixXd>(M, false).eigenvalues().cwiseAbs().maxCoeff();
}

inline MatrixXd kron(const MatrixXd& X, const MatrixXd& Y) {
  MatrixXd out(X.rows() * Y.rows(), X.cols() * Y.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      out.block(i * Y.rows(), j * Y.cols(), Y.rows(), Y.cols()) = X(i, j) * Y;
  return out;
}

/// Solves the nonsymmetric Stein-like equation P = Q + A^T P A_cl by the
/// Kronecker-vectorized linear system (I - A_cl^T kron A^T) vec(P) = vec(Q).
/// The factorization depends only on (A, A_cl), so one instance serves every
/// agent's equation inside a coupled-Riccati sweep.
class SteinSolver {
 public:
  SteinSolver(const MatrixXd& A, const MatrixXd& A_cl)
      : n_(A.rows()),
        lu_(MatrixXd::Identity(n_ * n_, n_ * n_) -
            kron(A_cl.transpose(), A.transpose())) {}

  MatrixXd solve(const MatrixXd& Q) const {
    const VectorXd vec_p = lu_.solve(VectorXd{Q.reshaped()});
    if (!vec_p.allFinite())
      throw NoStabilizingSolutionError("SteinSolver: singular system (eigenvalue product near 1)");
    return vec_p.reshaped(n_, n_);
  }

 private:
  Eigen::Index n_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

/// Stabilizing DARE solution P >= 0 of
///   P = Q + A^T P A - A^T P B (R + B^T P B)^-1 B^T P A
/// with feedback K = -(R + B^T P B)^-1 B^T P A.
struct DareSolution {
  MatrixXd P;
  MatrixXd K;
};

/// Structure-preserving doubling iteration for the DARE. Quadratically
/// convergent for stabilizable/detectable data, including marginally stable A.
/// Verifies the fixed-point residual and the closed-loop spectral radius
/// before returning.
inline DareSolution solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                               const MatrixXd& R, double tol = 1e-12, int max_iter = 200) {
  const Eigen::Index n = A.rows();
  MatrixXd Ak = A;
  MatrixXd G = B * R.ldlt().solve(B.transpose());
  MatrixXd H = Q;

  for (int k = 0; k < max_iter; ++k) {
    const MatrixXd S = MatrixXd::Identity(n, n) + G * H;
    const Eigen::PartialPivLU<MatrixXd> lu(S);
    const MatrixXd SA = lu.solve(Ak);                                  // (I+GH)^-1 A
    const MatrixXd SG = lu.solve(G);                                   // (I+GH)^-1 G
    const MatrixXd HS =
        Eigen::PartialPivLU<MatrixXd>(S.transpose()).solve(H).transpose();  // H (I+GH)^-1
    const MatrixXd H_next = H + Ak.transpose() * HS * Ak;
    const MatrixXd G_next = G + Ak * SG * Ak.transpose();
    const MatrixXd A_next = Ak * SA;
    const double delta = (H_next - H).norm();
    H = 0.5 * (H_next + H_next.transpose());
    G = 0.5 * (G_next + G_next.transpose());
    Ak = A_next;
    if (!H.allFinite() || !G.allFinite())
      throw NoStabilizingSolutionError("solve_dare: doubling iteration diverged");
    if (delta <= tol * std::max(1.0, H.norm())) break;
  }

  DareSolution sol;
  sol.P = H;
  const MatrixXd BtP = B.transpose() * sol.P;
  sol.K = -(R + BtP * B).ldlt().solve(BtP * A);

  const MatrixXd residual =
      sol.P - (Q + A.transpose() * sol.P * (A + B * sol.K));
  const double scale = std::max(1.0, sol.P.norm());
  if (residual.norm() > 1e-8 * scale)
    throw NoStabilizingSolutionError("solve_dare: fixed-point residual " +
                                     std::to_string(residual.norm()) + " too large");
  if (spectral_radius(A + B * sol.K) >= 1.0)
    throw NoStabilizingSolutionError("solve_dare: closed loop not Schur stable");
  return sol;
}

/// Stabilizing solution of the coupled Riccati equations
///   P_i = Q_i + A^T P_i (A + sum_j B_j K_j),
///   K_i = -R_i^-1 B_i^T P_i (A + sum_j B_j K_j).
struct CoupledRiccati {
  std::vector<MatrixXd> P;
  std::vector<MatrixXd> K;
  MatrixXd A_cl;
};

namespace detail {

// Step (a): exact K = col(K_i) for fixed {P_i} from the stacked linear system
//   [delta_ij R_i + B_i^T P_i B_j] col(K_j) = -col(B_i^T P_i A).
inline std::vector<MatrixXd> gains_for_costates(const MatrixXd& A,
                                                const std::vector<MatrixXd>& B,
                                                const std::vector<MatrixXd>& R,
                                                const std::vector<MatrixXd>& P) {
  const std::size_t N = B.size();
  const Eigen::Index n = A.rows();
  Eigen::Index total_m = 0;
  for (const auto& Bi : B) total_m += Bi.cols();

  MatrixXd T(total_m, total_m);
  MatrixXd rhs(total_m, n);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const Eigen::Index mi = B[i].cols();
    const MatrixXd BtP = B[i].transpose() * P[i];
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < N; ++j) {
      const Eigen::Index mj = B[j].cols();
      T.block(row, col, mi, mj) = BtP * B[j];
      if (i == j) T.block(row, col, mi, mj) += R[i];
      col += mj;
    }
    rhs.block(row, 0, mi, n) = -BtP * A;
    row += mi;
  }

  const MatrixXd K_stacked = T.partialPivLu().solve(rhs);
  if (!K_stacked.allFinite())
    throw NoStabilizingSolutionError("coupled riccati: singular gain system");
  std::vector<MatrixXd> K(N);
  row = 0;
  for (std::size_t i = 0; i < N; ++i) {
    K[i] = K_stacked.block(row, 0, B[i].cols(), n);
    row += B[i].cols();
  }
  return K;
}

inline MatrixXd closed_loop(const MatrixXd& A, const std::vector<MatrixXd>& B,
                            const std::vector<MatrixXd>& K) {
  MatrixXd A_cl = A;
  for (std::size_t j = 0; j < B.size(); ++j) A_cl += B[j] * K[j];
  return A_cl;
}

}  // namespace detail

namespace detail {

// Alternation core: (a) exact gains, (b) exact Stein solves, repeated until
// the joint residual meets tol. Returns nothing if the iteration stalls or
// settles on a fixed point whose closed loop is unstable (the coupled
// equations admit non-stabilizing roots).
inline std::optional<CoupledRiccati> riccati_alternation(const MatrixXd& A,
                                                         const std::vector<MatrixXd>& B,
                                                         const std::vector<MatrixXd>& Q,
                                                         const std::vector<MatrixXd>& R,
                                                         std::vector<MatrixXd> K, double tol,
                                                         int max_iter) {
  const std::size_t N = B.size();
  std::vector<MatrixXd> P(N);
  double best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int outer = 0; outer < max_iter; ++outer) {
    const MatrixXd A_cl = closed_loop(A, B, K);
    const SteinSolver stein(A, A_cl);
    for (std::size_t i = 0; i < N; ++i) P[i] = stein.solve(Q[i]);
    K = gains_for_costates(A, B, R, P);
    const MatrixXd A_cl_new = closed_loop(A, B, K);

    // residuals of both equations at the current (P, K) pair
    double res = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const MatrixXd eq_p = P[i] - Q[i] - A.transpose() * P[i] * A_cl_new;
      const MatrixXd eq_k = R[i] * K[i] + B[i].transpose() * P[i] * A_cl_new;
      res = std::max(res, eq_p.norm() / std::max(1.0, P[i].norm()));
      res = std::max(res, eq_k.norm() / std::max(1.0, P[i].norm()));
    }
    if (res <= tol) {
      if (spectral_radius(A_cl_new) >= 1.0) return std::nullopt;
      return CoupledRiccati{std::move(P), std::move(K), A_cl_new};
    }
    // the alternation map can be locally repelling; bail out once the
    // residual stops improving instead of burning the iteration budget
    if (res < 0.9 * best) {
      best = res;
      stalled = 0;
    } else if (++stalled > 15) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// Value-iteration warmup: P_i <- Q_i + A^T P_i A_cl with exact gains refreshed
// every sweep. Tracks the stabilizing branch from P = Q, so it also covers
// marginally stable open loops (e.g. the scalar A = 1 benchmark) where the
// K = 0 Stein system is singular.
inline std::vector<MatrixXd> riccati_warmup(const MatrixXd& A, const std::vector<MatrixXd>& B,
                                            const std::vector<MatrixXd>& Q,
                                            const std::vector<MatrixXd>& R) {
  const std::size_t N = B.size();
  std::vector<MatrixXd> P = Q, K;
  for (int sweep = 0; sweep < 20000; ++sweep) {
    K = gains_for_costates(A, B, R, P);
    const MatrixXd A_cl = closed_loop(A, B, K);
    double delta = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      MatrixXd Pn = Q[i] + A.transpose() * P[i] * A_cl;
      delta = std::max(delta, (Pn - P[i]).norm() / std::max(1.0, Pn.norm()));
      P[i] = std::move(Pn);
    }
    if (delta <= 1e-9) return K;
  }
  throw NoStabilizingSolutionError("solve_coupled_riccati: warmup did not stabilize");
}

}  // namespace detail

/// Alternates two exact linear solves until the joint fixed point: (a) the
/// stacked gain system for K given {P_i}, (b) one Stein equation per agent for
/// P_i given K (one shared factorization per sweep). Initialization is K = 0,
/// valid when A is Schur stable; when that path stalls or lands on a
/// non-stabilizing root, a value-iteration warmup supplies a stabilizing
/// initial gain and the alternation is re-run. As a last resort the value
/// iteration itself is driven to the tolerance: it tracks the stabilizing
/// branch even where the alternation map is locally repelling.
inline CoupledRiccati solve_coupled_riccati(const MatrixXd& A, const std::vector<MatrixXd>& B,
                                            const std::vector<MatrixXd>& Q,
                                            const std::vector<MatrixXd>& R, double tol = 1e-10,
                                            int max_iter = 500) {
  const std::size_t N = B.size();
  if (Q.size() != N || R.size() != N)
    throw std::invalid_argument("solve_coupled_riccati: per-agent list size mismatch");
  const Eigen::Index n = A.rows();

  if (spectral_radius(A) < 0.999) {
    std::vector<MatrixXd> K0(N);
    for (std::size_t i = 0; i < N; ++i) K0[i] = MatrixXd::Zero(B[i].cols(), n);
    if (auto sol = detail::riccati_alternation(A, B, Q, R, std::move(K0), tol, max_iter))
      return *std::move(sol);
  }
  if (auto sol = detail::riccati_alternation(A, B, Q, R, detail::riccati_warmup(A, B, Q, R),
                                             tol, max_iter))
    return *std::move(sol);

  std::vector<MatrixXd> P = Q, K;
  for (int sweep = 0; sweep < 200000; ++sweep) {
    K = detail::gains_for_costates(A, B, R, P);
    const MatrixXd A_cl = detail::closed_loop(A, B, K);
    double res = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      MatrixXd Pn = Q[i] + A.transpose() * P[i] * A_cl;
      res = std::max(res, (Pn - P[i]).norm() / std::max(1.0, Pn.norm()));
      P[i] = std::move(Pn);
    }
    if (res <= 0.05 * tol) {
      if (spectral_radius(A_cl) >= 1.0) break;
      return {std::move(P), std::move(K), A_cl};
    }
  }
  throw NoStabilizingSolutionError(
      "solve_coupled_riccati: no stabilizing fixed point found within the iteration limits");
}

/// Augmented system of one agent's unilateral deviation: the deviating copy on
/// top, everyone else playing feedback below.
struct AugmentedSystem {
  MatrixXd A;  // 2n x 2n
  MatrixXd B;  // 2n x m_i
  MatrixXd Q;  // 2n x 2n
};

inline AugmentedSystem build_augmented_system(const MatrixXd& A, const std::vector<MatrixXd>& B,
                                              const std::vector<MatrixXd>& K,
                                              const MatrixXd& A_cl, const MatrixXd& Q_i,
                                              std::size_t i) {
  const Eigen::Index n = A.rows();
  MatrixXd coupling = MatrixXd::Zero(n, n);
  for (std::size_t j = 0; j < B.size(); ++j)
    if (j != i) coupling += B[j] * K[j];

  AugmentedSystem aug;
  aug.A = MatrixXd::Zero(2 * n, 2 * n);
  aug.A.topLeftCorner(n, n) = A;
  aug.A.topRightCorner(n, n) = coupling;
  aug.A.bottomRightCorner(n, n) = A_cl;
  aug.B = MatrixXd::Zero(2 * n, B[i].cols());
  aug.B.topRows(n) = B[i];
  aug.Q = MatrixXd::Zero(2 * n, 2 * n);
  aug.Q.topLeftCorner(n, n) = Q_i;
  return aug;
}

/// The augmented fixed point is a single-agent problem, solved as a standard
/// DARE (the N = 1 algebra of the coupled equations).
inline DareSolution solve_augmented_riccati(const AugmentedSystem& aug, const MatrixXd& R_i,
                                            double tol = 1e-9, int max_iter = 200) {
  DareSolution sol = solve_dare(aug.A, aug.B, aug.Q, R_i, 1e-13, max_iter);
  const MatrixXd residual =
      sol.P - (aug.Q + aug.A.transpose() * sol.P * (aug.A + aug.B * sol.K));
  if (residual.norm() > tol * std::max(1.0, sol.P.norm()))
    throw NoStabilizingSolutionError("solve_augmented_riccati: residual too large");
  return sol;
}

/// Embeds the 2n x 2n augmented terminal matrix into the n-dimensional state
/// space as E^T P_hat E with E = [I; I]: at the deviation start both augmented
/// components equal the terminal state.
inline MatrixXd terminal_cost_matrix(const MatrixXd& P_hat) {
  const Eigen::Index n2 = P_hat.rows();
  if (n2 % 2 != 0 || P_hat.cols() != n2)
    throw std::invalid_argument("terminal_cost_matrix: expected square 2n x 2n input");
  const Eigen::Index n = n2 / 2;
  MatrixXd E(n2, n);
  E << MatrixXd::Identity(n, n), MatrixXd::Identity(n, n);
  MatrixXd T = E.transpose() * P_hat * E;
  return 0.5 * (T + T.transpose());
}

}  // namespace lqvi
