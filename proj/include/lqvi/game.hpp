// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include <string>
#include <vector>

#include "lqvi/log.hpp"
#include "lqvi/problem.hpp"
#include "lqvi/riccati.hpp"

namespace lqvi {

/// Category of a constraint row, used by the violation reporting.
enum class ConstraintClass { distance, velocity, input, other };

inline const char* to_string(ConstraintClass c) {
  switch (c) {
    case ConstraintClass::distance: return "distance";
    case ConstraintClass::velocity: return "velocity";
    case ConstraintClass::input: return "input";
    case ConstraintClass::other: return "other";
  }
  return "unknown";
}

/// Per-stage affine constraints of the game.
///
/// Stage rows couple the state with all agents' inputs at the same instant,
///   Cx x[t] + sum_j Cu[j] u_j[t] + c <= 0,   t = 0..T-1,
/// which covers shared input-coupling rows (Cx = 0) and, after
/// pre-stabilization, bounds on the physically applied input. State-only rows
///   Dx x[t] + dx <= 0,   t = 1..T,
/// hold on every predicted state including the terminal one.
struct ConstraintSpec {
  MatrixXd Cx;                // p x n
  std::vector<MatrixXd> Cu;   // per agent, p x m_j
  VectorXd c;                 // p
  std::vector<ConstraintClass> stage_class;

  MatrixXd Dx;                // px x n
  VectorXd dx;                // px
  std::vector<ConstraintClass> state_class;

  // d_min of the distance rows: a distance row violating by more than this
  // means the physical gap itself is nonpositive (collision).
  double collision_gap = 0.0;

  static ConstraintSpec empty(Eigen::Index n, const std::vector<Eigen::Index>& input_dims) {
    ConstraintSpec spec;
    spec.Cx = MatrixXd::Zero(0, n);
    spec.c = VectorXd::Zero(0);
    for (Eigen::Index mi : input_dims) spec.Cu.emplace_back(MatrixXd::Zero(0, mi));
    spec.Dx = MatrixXd::Zero(0, n);
    spec.dx = VectorXd::Zero(0);
    return spec;
  }

  Eigen::Index stage_rows() const { return Cx.rows(); }
  Eigen::Index state_rows() const { return Dx.rows(); }
  std::size_t num_agents() const { return Cu.size(); }

  /// Appends one stage row: x_coef * x[t] + sum_j u_coef[j] * u_j[t] + off <= 0.
  void add_stage_row(const VectorXd& x_coef, const std::vector<VectorXd>& u_coef, double off,
                     ConstraintClass cls) {
    if (u_coef.size() != Cu.size())
      throw std::invalid_argument("add_stage_row: agent count mismatch");
    append_row(Cx, x_coef);
    for (std::size_t j = 0; j < Cu.size(); ++j) append_row(Cu[j], u_coef[j]);
    append_value(c, off);
    stage_class.push_back(cls);
  }

  /// Appends one state-only row: x_coef * x[t] + off <= 0.
  void add_state_row(const VectorXd& x_coef, double off, ConstraintClass cls) {
    append_row(Dx, x_coef);
    append_value(dx, off);
    state_class.push_back(cls);
  }

  /// Componentwise bounds lo <= u_j[t] <= hi on one agent's (applied) input.
  void add_input_bounds(std::size_t agent, double lo, double hi) {
    const Eigen::Index mj = Cu.at(agent).cols();
    for (Eigen::Index k = 0; k < mj; ++k) {
      std::vector<VectorXd> u_coef;
      for (std::size_t j = 0; j < Cu.size(); ++j) u_coef.push_back(VectorXd::Zero(Cu[j].cols()));
      u_coef[agent](k) = 1.0;
      add_stage_row(VectorXd::Zero(Cx.cols()), u_coef, -hi, ConstraintClass::input);
      u_coef[agent](k) = -1.0;
      add_stage_row(VectorXd::Zero(Cx.cols()), u_coef, lo, ConstraintClass::input);
    }
  }

 private:
  static void append_row(MatrixXd& M, const VectorXd& row) {
    if (row.size() != M.cols()) throw std::invalid_argument("ConstraintSpec: row length mismatch");
    M.conservativeResize(M.rows() + 1, Eigen::NoChange);
    M.row(M.rows() - 1) = row.transpose();
  }
  static void append_value(VectorXd& v, double val) {
    v.conservativeResize(v.size() + 1);
    v(v.size() - 1) = val;
  }
};

/// Multi-agent linear-quadratic game
///   x[t+1] = A x[t] + sum_i B_i u_i[t],
///   J_i = sum_t 0.5 x^T Q_i x + 0.5 u_i^T R_i u_i,
/// with per-stage affine constraints. `prestab_gain`, when nonempty, records
/// the wrapped feedback: the physically applied input is
/// u_i^applied = K_i^stab x + u_i.
struct LqGame {
  MatrixXd A;
  std::vector<MatrixXd> B;
  std::vector<MatrixXd> Q;
  std::vector<MatrixXd> R;
  ConstraintSpec constraints;
  std::vector<MatrixXd> prestab_gain;

  Eigen::Index n() const { return A.rows(); }
  std::size_t num_agents() const { return B.size(); }
  Eigen::Index input_dim(std::size_t i) const { return B[i].cols(); }
  Eigen::Index total_input_dim() const {
    Eigen::Index total = 0;
    for (const auto& Bi : B) total += Bi.cols();
    return total;
  }
  std::vector<Eigen::Index> input_dims() const {
    std::vector<Eigen::Index> dims;
    for (const auto& Bi : B) dims.push_back(Bi.cols());
    return dims;
  }

  /// Physically applied inputs at state x for game inputs u (stacked per
  /// agent, one stage).
  VectorXd applied_input(const VectorXd& x, const VectorXd& u_stage) const {
    if (prestab_gain.empty()) return u_stage;
    VectorXd out = u_stage;
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < B.size(); ++i) {
      out.segment(off, B[i].cols()) += prestab_gain[i] * x;
      off += B[i].cols();
    }
    return out;
  }
};

inline void validate_game(const LqGame& g) {
  const Eigen::Index n = g.n();
  if (g.A.cols() != n) throw std::invalid_argument("LqGame: A must be square");
  const std::size_t N = g.num_agents();
  if (g.Q.size() != N || g.R.size() != N)
    throw std::invalid_argument("LqGame: Q/R list length must match agent count");
  for (std::size_t i = 0; i < N; ++i) {
    if (g.B[i].rows() != n) throw std::invalid_argument("LqGame: B row count mismatch");
    if (g.Q[i].rows() != n || g.Q[i].cols() != n)
      throw std::invalid_argument("LqGame: Q dimension mismatch");
    if (g.R[i].rows() != g.B[i].cols() || g.R[i].cols() != g.B[i].cols())
      throw std::invalid_argument("LqGame: R dimension mismatch");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eq(g.Q[i], Eigen::EigenvaluesOnly);
    if (eq.eigenvalues().minCoeff() < -1e-10)
      throw std::invalid_argument("LqGame: Q must be positive semidefinite");
    Eigen::SelfAdjointEigenSolver<MatrixXd> er(g.R[i], Eigen::EigenvaluesOnly);
    if (er.eigenvalues().minCoeff() <= 0.0)
      throw std::invalid_argument("LqGame: R must be positive definite");
  }
  if (g.constraints.num_agents() != 0 && g.constraints.num_agents() != N)
    throw std::invalid_argument("LqGame: constraint agent count mismatch");
  if (!g.prestab_gain.empty() && g.prestab_gain.size() != N)
    throw std::invalid_argument("LqGame: prestab gain count mismatch");
}

/// Wraps the game in fixed local feedbacks: A <- A + sum_i B_i K_i, inputs
/// become deviations from the feedback, and stage constraint rows are
/// rewritten so that bounds keep applying to the physically applied input
/// u_i^applied = K_i x + u_i (Cx <- Cx + sum_j Cu[j] K_j). Gains accumulate
/// if the game was already pre-stabilized.
inline LqGame prestabilize(const LqGame& g, const std::vector<MatrixXd>& K_stab) {
  if (K_stab.size() != g.num_agents())
    throw std::invalid_argument("prestabilize: gain count mismatch");
  LqGame out = g;
  for (std::size_t i = 0; i < K_stab.size(); ++i) {
    if (K_stab[i].rows() != g.B[i].cols() || K_stab[i].cols() != g.n())
      throw std::invalid_argument("prestabilize: gain dimension mismatch");
    out.A += g.B[i] * K_stab[i];
  }
  if (out.constraints.stage_rows() > 0) {
    for (std::size_t j = 0; j < K_stab.size(); ++j)
      out.constraints.Cx += out.constraints.Cu[j] * K_stab[j];
  }
  if (out.prestab_gain.empty()) {
    out.prestab_gain = K_stab;
  } else {
    for (std::size_t i = 0; i < K_stab.size(); ++i) out.prestab_gain[i] += K_stab[i];
  }
  return out;
}

/// Coupled-Riccati data of the game plus the augmented terminal machinery.
struct RiccatiSolution {
  std::vector<MatrixXd> P;              // n x n, per agent
  std::vector<MatrixXd> K;              // m_i x n feedback gains
  MatrixXd A_cl;                        // A + sum_j B_j K_j
  std::vector<MatrixXd> P_hat;          // 2n x 2n augmented terminal matrices
  std::vector<MatrixXd> terminal_cost;  // n x n embeddings E^T P_hat E
};

inline RiccatiSolution solve_game_riccati(const LqGame& g, double tol = 1e-10,
                                          int max_iter = 500) {
  validate_game(g);
  const CoupledRiccati coupled = solve_coupled_riccati(g.A, g.B, g.Q, g.R, tol, max_iter);
  RiccatiSolution sol;
  sol.P = coupled.P;
  sol.K = coupled.K;
  sol.A_cl = coupled.A_cl;
  for (std::size_t i = 0; i < g.num_agents(); ++i) {
    const AugmentedSystem aug = build_augmented_system(g.A, g.B, sol.K, sol.A_cl, g.Q[i], i);
    const DareSolution hat = solve_augmented_riccati(aug, g.R[i]);
    sol.P_hat.push_back(hat.P);
    sol.terminal_cost.push_back(terminal_cost_matrix(hat.P));
  }
  return sol;
}

/// Prediction matrices of the stacked dynamics: x = Theta x0 + sum_i Gamma_i u_i
/// with x = [x[1]; ...; x[T]] and u_i = [u_i[0]; ...; u_i[T-1]].
struct PredictionMatrices {
  MatrixXd Theta;               // nT x n
  std::vector<MatrixXd> Gamma;  // nT x m_i T
};

inline PredictionMatrices build_prediction_matrices(const MatrixXd& A,
                                                    const std::vector<MatrixXd>& B, int T) {
  if (T < 1) throw std::invalid_argument("build_prediction_matrices: T must be >= 1");
  const Eigen::Index n = A.rows();
  PredictionMatrices out;
  out.Theta.resize(n * T, n);

  // powers[t] = A^(t+1)
  MatrixXd power = A;
  for (int t = 0; t < T; ++t) {
    out.Theta.middleRows(t * n, n) = power;
    if (t + 1 < T) power = A * power;
  }

  for (const MatrixXd& Bi : B) {
    const Eigen::Index mi = Bi.cols();
    MatrixXd Gi = MatrixXd::Zero(n * T, mi * T);
    // column block s holds the response of x[t+1] to u[s]: A^(t-s) B_i
    MatrixXd impulse = Bi;  // A^k B_i for increasing k
    for (int k = 0; k < T; ++k) {
      for (int s = 0; s + k < T; ++s) Gi.block((s + k) * n, s * mi, n, mi) = impulse;
      if (k + 1 < T) impulse = A * impulse;
    }
    out.Gamma.push_back(std::move(Gi));
  }
  return out;
}

/// Horizon-condensed game: the operator (M, q(x0)) and the stacked constraint
/// set (D, d(x0)), with q and d affine in the initial state. The decision
/// vector is agent-major: u = [u_1; ...; u_N], each u_i stage-major of length
/// m_i T.
struct StackedGame {
  int T = 0;
  Eigen::Index n = 0;
  std::vector<Eigen::Index> m;

  MatrixXd Theta;
  std::vector<MatrixXd> Gamma;
  std::vector<MatrixXd> Q_bar;
  std::vector<MatrixXd> R_bar;

  MatrixXd M;
  MatrixXd q_map;  // q(x0) = q_map x0

  MatrixXd D;
  MatrixXd d_map;  // d(x0) = d_map x0 + d0
  VectorXd d0;
  std::vector<ConstraintClass> row_class;
  std::vector<int> row_stage;
  double collision_gap = 0.0;

  double monotonicity_modulus = 0.0;

  Eigen::Index total_inputs() const {
    Eigen::Index total = 0;
    for (Eigen::Index mi : m) total += mi * T;
    return total;
  }
  Eigen::Index agent_offset(std::size_t i) const {
    Eigen::Index off = 0;
    for (std::size_t j = 0; j < i; ++j) off += m[j] * T;
    return off;
  }

  VectorXd q_of(const VectorXd& x0) const { return q_map * x0; }
  VectorXd d_of(const VectorXd& x0) const { return d_map * x0 + d0; }

  AviProblem avi_for(const VectorXd& x0) const {
    return AviProblem(AffineOperator(M, q_of(x0)), PolyhedralSet(D, d_of(x0)));
  }
};

namespace detail {

// Stage-wise constraint stacking; see StackedGame for the row layout: all
// stage-row groups for t = 0..T-1 first, then state-only groups for t = 1..T.
inline void stack_constraint_rows(const ConstraintSpec& spec, const PredictionMatrices& pred,
                                  int T, StackedGame& out) {
  const Eigen::Index n = out.n;
  const std::size_t N = out.m.size();
  const Eigen::Index p_stage = spec.stage_rows();
  const Eigen::Index p_state = spec.state_rows();
  const Eigen::Index rows = p_stage * T + p_state * T;
  const Eigen::Index cols = out.total_inputs();

  out.D = MatrixXd::Zero(rows, cols);
  out.d_map = MatrixXd::Zero(rows, n);
  out.d0 = VectorXd::Zero(rows);
  out.row_class.clear();
  out.row_stage.clear();
  out.row_class.reserve(rows);
  out.row_stage.reserve(rows);

  Eigen::Index row = 0;
  for (int t = 0; t < T; ++t) {
    if (p_stage == 0) break;
    // direct input coupling at stage t
    for (std::size_t j = 0; j < N; ++j)
      out.D.block(row, out.agent_offset(j) + t * out.m[j], p_stage, out.m[j]) = spec.Cu[j];
    if (t == 0) {
      out.d_map.middleRows(row, p_stage) = spec.Cx;  // x[0] = x0 directly
    } else {
      // x[t] = Theta_block x0 + sum_j Gamma_block u_j
      const auto theta_t = pred.Theta.middleRows((t - 1) * n, n);
      out.d_map.middleRows(row, p_stage) = spec.Cx * theta_t;
      for (std::size_t j = 0; j < N; ++j) {
        const auto gamma_t = pred.Gamma[j].middleRows((t - 1) * n, n);
        out.D.block(row, out.agent_offset(j), p_stage, out.m[j] * T) += spec.Cx * gamma_t;
      }
    }
    out.d0.segment(row, p_stage) = spec.c;
    for (Eigen::Index r = 0; r < p_stage; ++r) {
      out.row_class.push_back(spec.stage_class[r]);
      out.row_stage.push_back(t);
    }
    row += p_stage;
  }

  for (int t = 1; t <= T; ++t) {
    if (p_state == 0) break;
    const auto theta_t = pred.Theta.middleRows((t - 1) * n, n);
    out.d_map.middleRows(row, p_state) = spec.Dx * theta_t;
    for (std::size_t j = 0; j < N; ++j) {
      const auto gamma_t = pred.Gamma[j].middleRows((t - 1) * n, n);
      out.D.block(row, out.agent_offset(j), p_state, out.m[j] * T) = spec.Dx * gamma_t;
    }
    out.d0.segment(row, p_state) = spec.dx;
    for (Eigen::Index r = 0; r < p_state; ++r) {
      out.row_class.push_back(spec.state_class[r]);
      out.row_stage.push_back(t);
    }
    row += p_state;
  }
}

}  // namespace detail

/// Stacked polyhedral set for one initial state; exposed separately because
/// tests and tools want the constraint geometry without the operator.
inline PolyhedralSet stack_constraints(const ConstraintSpec& spec, const PredictionMatrices& pred,
                                       int T, const VectorXd& x0) {
  StackedGame tmp;
  tmp.T = T;
  tmp.n = x0.size();
  for (const auto& cu : spec.Cu) tmp.m.push_back(cu.cols());
  detail::stack_constraint_rows(spec, pred, T, tmp);
  return PolyhedralSet(tmp.D, tmp.d_map * x0 + tmp.d0);
}

/// Condenses the game over horizon T:
///   M = blkdiag(R_bar_i) + [Gamma_i^T Q_bar_i Gamma_j],
///   q(x0) = col(Gamma_i^T Q_bar_i Theta x0),
/// with Q_bar_i = blkdiag(I_{T-1} kron Q_i, terminal_cost_i). Emits a warning
/// when the assembled operator is not strongly monotone (possible for
/// arbitrary data; the solvers assume a positive modulus).
inline StackedGame build_stacked_game(const LqGame& g, int T, const RiccatiSolution& riccati) {
  validate_game(g);
  if (T < 1) throw std::invalid_argument("build_stacked_game: T must be >= 1");
  const Eigen::Index n = g.n();
  const std::size_t N = g.num_agents();
  if (riccati.terminal_cost.size() != N)
    throw std::invalid_argument("build_stacked_game: riccati solution agent count mismatch");

  StackedGame out;
  out.T = T;
  out.n = n;
  out.m = g.input_dims();
  out.collision_gap = g.constraints.collision_gap;

  PredictionMatrices pred = build_prediction_matrices(g.A, g.B, T);

  for (std::size_t i = 0; i < N; ++i) {
    MatrixXd Qb = MatrixXd::Zero(n * T, n * T);
    for (int t = 0; t + 1 < T; ++t) Qb.block(t * n, t * n, n, n) = g.Q[i];
    Qb.bottomRightCorner(n, n) = riccati.terminal_cost[i];
    out.Q_bar.push_back(std::move(Qb));

    const Eigen::Index mi = g.input_dim(i);
    MatrixXd Rb = MatrixXd::Zero(mi * T, mi * T);
    for (int t = 0; t < T; ++t) Rb.block(t * mi, t * mi, mi, mi) = g.R[i];
    out.R_bar.push_back(std::move(Rb));
  }

  const Eigen::Index total = out.total_inputs();
  out.M = MatrixXd::Zero(total, total);
  out.q_map = MatrixXd::Zero(total, n);
  for (std::size_t i = 0; i < N; ++i) {
    const Eigen::Index oi = out.agent_offset(i), mi = g.input_dim(i) * T;
    const MatrixXd GtQ = pred.Gamma[i].transpose() * out.Q_bar[i];
    for (std::size_t j = 0; j < N; ++j) {
      const Eigen::Index oj = out.agent_offset(j), mj = g.input_dim(j) * T;
      out.M.block(oi, oj, mi, mj) = GtQ * pred.Gamma[j];
    }
    out.M.block(oi, oi, mi, mi) += out.R_bar[i];
    out.q_map.middleRows(oi, mi) = GtQ * pred.Theta;
  }

  detail::stack_constraint_rows(g.constraints, pred, T, out);
  out.Theta = std::move(pred.Theta);
  out.Gamma = std::move(pred.Gamma);

  out.monotonicity_modulus = strong_monotonicity_modulus(out.M);
  if (out.monotonicity_modulus <= 0.0)
    log_warn("assembled game operator is not strongly monotone (modulus " +
             std::to_string(out.monotonicity_modulus) + ")");
  return out;
}

/// One-call compilation of the AVI for a given initial state.
inline AviProblem assemble_avi(const LqGame& g, int T, const RiccatiSolution& riccati,
                               const VectorXd& x0) {
  if (x0.size() != g.n()) throw std::invalid_argument("assemble_avi: x0 dimension mismatch");
  return build_stacked_game(g, T, riccati).avi_for(x0);
}

}  // namespace lqvi
