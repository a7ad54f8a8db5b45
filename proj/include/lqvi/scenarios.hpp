// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "lqvi/game.hpp"

namespace lqvi {

/// Vehicle platooning: a leader tracking a reference speed followed by
/// headway-keeping vehicles on sampled double-integrator dynamics. The game
/// state is the error state
///   x_0 = [0, v_ref - v_0],  x_i = [p_{i-1} - p_i - d_i - h_i v_i, v_{i-1} - v_i].
///
/// Numeric defaults (speeds, bounds, headways, gaps, initial conditions) are
/// implementation choices, all overridable through the scenario file.
struct PlatooningParams {
  int N = 5;
  double tau_s = 0.1;
  VectorXd headway;  // h_i, seconds (leader entry unused)
  VectorXd gap;      // d_i, meters (leader entry unused)
  double d_min = 2.0;
  double v_ref = 10.0;
  double v_min = 0.0, v_max = 15.0;
  double u_min = -3.0, u_max = 3.0;
  VectorXd p0, v0;  // physical initial positions/velocities
  int sim_steps = 300;

  static PlatooningParams defaults(int N = 5) {
    PlatooningParams p;
    p.N = N;
    p.headway = VectorXd::Constant(N, 0.5);
    p.gap = VectorXd::Constant(N, 5.0);
    p.v0 = VectorXd::Constant(N, 5.0);
    p.p0 = VectorXd::Zero(N);
    // behind the desired spacing at the initial speed, with extra slack
    for (int i = 1; i < N; ++i)
      p.p0(i) = p.p0(i - 1) - (p.gap(i) + p.headway(i) * p.v0(i) + 3.0);
    return p;
  }
};

/// Unsignalized intersection crossing: vehicles follow the predecessor on
/// their conflict chain under first-come first-served precedence. Leaders
/// carry the scalar state v_ref - v_i; followers carry
///   x_i = [p_chi(i) - p_i - d_i, v_chi(i) - v_i].
struct Arrival {
  double time = 0.0;
  std::string maneuver;  // entry/exit pair: NS, SN, EW, WE, NW, NE, EN, ES, SE, SW, WS, WN
};

struct IntersectionParams {
  int N = 15;
  double tau_s = 0.1;
  std::vector<Arrival> arrivals;
  VectorXd d_safe;  // follower margins d_i, meters
  double d_min = 2.0;
  double v_ref = 10.0;
  double v_min = 0.0, v_max = 15.0;
  double u_min = -3.0, u_max = 3.0;
  VectorXd p0, v0;              // physical initial longitudinal progress/speed
  std::vector<int> precedence;  // chi(i), -1 for leaders; empty = derive from arrivals
  int sim_steps = 300;

  static IntersectionParams defaults(int N = 15) {
    static const char* kManeuvers[] = {"NS", "EW", "SN", "WE", "NW", "ES", "WS", "NE",
                                       "EN", "SW", "NS", "EW", "SE", "WN", "NS"};
    IntersectionParams p;
    p.N = N;
    p.d_safe = VectorXd::Constant(N, 5.0);
    p.v0 = VectorXd::Constant(N, 8.0);
    p.p0 = VectorXd::Zero(N);
    for (int i = 0; i < N; ++i) {
      p.arrivals.push_back({0.7 * i, kManeuvers[i % 15]});
      p.p0(i) = -p.v0(i) * 0.7 * i;  // reaches the crossing near its arrival time
    }
    return p;
  }
};

/// Precedence assignment: chi(i) and the leader flag for every vehicle.
struct Precedence {
  std::vector<int> chi;  // -1 for leaders
  std::vector<bool> leader;
};

namespace detail {

// Maneuver footprints over the four intersection quadrant cells (right-hand
// traffic): straight crossings occupy entry + exit-side cells, right turns the
// entry cell only, left turns three cells.
inline const std::set<int>& maneuver_cells(const std::string& m) {
  enum { nw = 0, ne = 1, sw = 2, se = 3 };
  static const std::map<std::string, std::set<int>> table = {
      {"NS", {nw, sw}},     {"SN", {se, ne}},     {"EW", {ne, nw}},     {"WE", {sw, se}},
      {"NW", {nw}},         {"EN", {ne}},         {"SE", {se}},         {"WS", {sw}},
      {"NE", {nw, sw, se}}, {"ES", {ne, nw, sw}}, {"SW", {se, ne, nw}}, {"WN", {sw, se, ne}},
  };
  const auto it = table.find(m);
  if (it == table.end())
    throw std::invalid_argument("unknown maneuver label '" + m + "'");
  return it->second;
}

inline bool maneuvers_conflict(const std::string& a, const std::string& b) {
  for (int cell : maneuver_cells(a))
    if (maneuver_cells(b).count(cell)) return true;
  return false;
}

}  // namespace detail

/// First-come first-served precedence: vehicles are grouped into connected
/// components of the pairwise path-conflict graph; within each component they
/// are ordered by arrival time (ties broken by index) and chained, the
/// earliest being the component's leader.
inline Precedence assign_precedence(const std::vector<Arrival>& arrivals) {
  const int N = static_cast<int>(arrivals.size());
  for (const Arrival& a : arrivals) detail::maneuver_cells(a.maneuver);  // label validation
  // union-find over the conflict graph
  std::vector<int> parent(N);
  for (int i = 0; i < N; ++i) parent[i] = i;
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      if (detail::maneuvers_conflict(arrivals[i].maneuver, arrivals[j].maneuver))
        parent[find(i)] = find(j);

  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < N; ++i) groups[find(i)].push_back(i);

  Precedence out;
  out.chi.assign(N, -1);
  out.leader.assign(N, false);
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end(), [&](int a, int b) {
      if (arrivals[a].time != arrivals[b].time) return arrivals[a].time < arrivals[b].time;
      return a < b;
    });
    out.leader[members.front()] = true;
    for (std::size_t k = 1; k < members.size(); ++k) out.chi[members[k]] = members[k - 1];
  }
  return out;
}

/// A fully built benchmark: the pre-stabilized game, the error-state initial
/// condition, and the physical layer needed to reconstruct positions and
/// velocities from a closed-loop run.
struct Scenario {
  enum class Kind { platooning, intersection };
  Kind kind = Kind::platooning;
  LqGame game;   // pre-stabilized
  VectorXd x0;   // error coordinates
  int sim_steps = 300;

  double tau_s = 0.1;
  double v_ref = 10.0;
  VectorXd p0, v0;  // physical anchors, one entry per vehicle

  PlatooningParams platooning;      // valid when kind == platooning
  IntersectionParams intersection;  // valid when kind == intersection
  Precedence precedence;            // intersection only

  int vehicles() const { return static_cast<int>(p0.size()); }
};

namespace detail {

// state-block offset per vehicle (platooning: 2i; intersection: mixed 1/2)
inline std::vector<Eigen::Index> block_offsets(const std::vector<Eigen::Index>& dims) {
  std::vector<Eigen::Index> off(dims.size());
  Eigen::Index acc = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    off[i] = acc;
    acc += dims[i];
  }
  return off;
}

}  // namespace detail

/// Maps physical positions/velocities to the platooning error state.
inline VectorXd platooning_error_state(const PlatooningParams& p, const VectorXd& pos,
                                       const VectorXd& vel) {
  VectorXd x(2 * p.N);
  x(0) = 0.0;
  x(1) = p.v_ref - vel(0);
  for (int i = 1; i < p.N; ++i) {
    x(2 * i) = pos(i - 1) - pos(i) - p.gap(i) - p.headway(i) * vel(i);
    x(2 * i + 1) = vel(i - 1) - vel(i);
  }
  return x;
}

inline Scenario build_platooning(const PlatooningParams& params) {
  const int N = params.N;
  if (N < 2) throw std::invalid_argument("build_platooning: N must be >= 2");
  if (params.headway.size() != N || params.gap.size() != N || params.p0.size() != N ||
      params.v0.size() != N)
    throw std::invalid_argument("build_platooning: per-vehicle arrays must have length N");
  if (!(params.tau_s > 0.0) || !(params.d_min > 0.0) ||
      !(params.v_min < params.v_ref && params.v_ref < params.v_max) ||
      !(params.u_min < 0.0 && 0.0 < params.u_max))
    throw std::invalid_argument("build_platooning: invalid parameter ranges");

  const double tau = params.tau_s;
  const Eigen::Index n = 2 * N;

  LqGame g;
  g.A = MatrixXd::Zero(n, n);
  g.A(1, 1) = 1.0;  // leader block [[0,0],[0,1]]
  for (int i = 1; i < N; ++i) {
    g.A(2 * i, 2 * i) = 1.0;
    g.A(2 * i, 2 * i + 1) = tau;
    g.A(2 * i + 1, 2 * i + 1) = 1.0;
  }

  auto block = [&](int i, double a, double b) {
    VectorXd v = VectorXd::Zero(n);
    v(2 * i) = a;
    v(2 * i + 1) = b;
    return v;
  };
  for (int i = 0; i < N; ++i) {
    VectorXd Bi = VectorXd::Zero(n);
    if (i == 0) {
      Bi = -block(0, 0.0, tau);
      if (N > 1) Bi += block(1, tau * tau / 2.0, tau);
    } else {
      Bi = -block(i, params.headway(i) * tau + tau * tau / 2.0, tau);
      if (i + 1 < N) Bi += block(i + 1, tau * tau / 2.0, tau);
    }
    g.B.push_back(Bi);
    g.Q.push_back(MatrixXd::Identity(n, n));
    g.R.push_back(MatrixXd::Identity(1, 1));
  }

  g.constraints = ConstraintSpec::empty(n, g.input_dims());
  g.constraints.collision_gap = params.d_min;

  // velocity reconstruction: v_i = v_ref - sum_{j <= i} x_{j,2}
  auto velocity_coeffs = [&](int i) {
    VectorXd coef = VectorXd::Zero(n);
    for (int j = 0; j <= i; ++j) coef(2 * j + 1) = -1.0;
    return coef;
  };

  for (int i = 1; i < N; ++i) {
    // gap: d_min - (p_{i-1} - p_i) <= 0 with p_{i-1} - p_i = x_{i,1} + d_i + h_i v_i
    // and v_i = v_ref + vc_i . x
    VectorXd gap_row = -params.headway(i) * velocity_coeffs(i);
    gap_row(2 * i) -= 1.0;
    const double off = params.d_min - params.gap(i) - params.headway(i) * params.v_ref;
    g.constraints.add_state_row(gap_row, off, ConstraintClass::distance);
  }
  for (int i = 0; i < N; ++i) {
    const VectorXd vc = velocity_coeffs(i);
    // v_i <= v_max and v_i >= v_min
    g.constraints.add_state_row(vc, params.v_ref - params.v_max, ConstraintClass::velocity);
    g.constraints.add_state_row(-vc, params.v_min - params.v_ref, ConstraintClass::velocity);
    g.constraints.add_input_bounds(i, params.u_min, params.u_max);
  }

  // pre-stabilizer: positive error feedback on the own block (the sign that
  // renders A + sum B_i K_i Schur stable under this B convention)
  std::vector<MatrixXd> K_stab;
  for (int i = 0; i < N; ++i) {
    MatrixXd K = MatrixXd::Zero(1, n);
    K(0, 2 * i) = 1.0;
    K(0, 2 * i + 1) = 1.0;
    K_stab.push_back(K);
  }

  Scenario s;
  s.kind = Scenario::Kind::platooning;
  s.game = prestabilize(g, K_stab);
  s.x0 = platooning_error_state(params, params.p0, params.v0);
  s.sim_steps = params.sim_steps;
  s.tau_s = tau;
  s.v_ref = params.v_ref;
  s.p0 = params.p0;
  s.v0 = params.v0;
  s.platooning = params;
  return s;
}

/// Maps physical progress/velocities to the intersection error state.
inline VectorXd intersection_error_state(const IntersectionParams& p, const Precedence& prec,
                                         const VectorXd& pos, const VectorXd& vel) {
  std::vector<Eigen::Index> dims;
  for (int i = 0; i < p.N; ++i) dims.push_back(prec.leader[i] ? 1 : 2);
  const auto off = detail::block_offsets(dims);
  Eigen::Index n = 0;
  for (auto d : dims) n += d;

  VectorXd x(n);
  for (int i = 0; i < p.N; ++i) {
    if (prec.leader[i]) {
      x(off[i]) = p.v_ref - vel(i);
    } else {
      const int c = prec.chi[i];
      x(off[i]) = pos(c) - pos(i) - p.d_safe(i);
      x(off[i] + 1) = vel(c) - vel(i);
    }
  }
  return x;
}

inline Scenario build_intersection(const IntersectionParams& params) {
  const int N = params.N;
  if (N < 1) throw std::invalid_argument("build_intersection: N must be >= 1");
  if (params.d_safe.size() != N || params.p0.size() != N || params.v0.size() != N)
    throw std::invalid_argument("build_intersection: per-vehicle arrays must have length N");

  Precedence prec;
  if (!params.precedence.empty()) {
    if (static_cast<int>(params.precedence.size()) != N)
      throw std::invalid_argument("build_intersection: precedence length mismatch");
    prec.chi = params.precedence;
    prec.leader.assign(N, false);
    for (int i = 0; i < N; ++i) prec.leader[i] = (prec.chi[i] < 0);
    // acyclicity: walking up from any vehicle must reach a leader
    for (int i = 0; i < N; ++i) {
      int steps = 0, j = i;
      while (prec.chi[j] >= 0) {
        j = prec.chi[j];
        if (++steps > N) throw std::invalid_argument("build_intersection: cyclic precedence");
      }
    }
  } else {
    if (static_cast<int>(params.arrivals.size()) != N)
      throw std::invalid_argument("build_intersection: arrivals length mismatch");
    prec = assign_precedence(params.arrivals);
  }

  const double tau = params.tau_s;
  std::vector<Eigen::Index> dims;
  for (int i = 0; i < N; ++i) dims.push_back(prec.leader[i] ? 1 : 2);
  const auto off = detail::block_offsets(dims);
  Eigen::Index n = 0;
  for (auto d : dims) n += d;

  LqGame g;
  g.A = MatrixXd::Zero(n, n);
  for (int i = 0; i < N; ++i) {
    if (dims[i] == 1) {
      g.A(off[i], off[i]) = 1.0;
    } else {
      g.A(off[i], off[i]) = 1.0;
      g.A(off[i], off[i] + 1) = tau;
      g.A(off[i] + 1, off[i] + 1) = 1.0;
    }
  }

  for (int i = 0; i < N; ++i) {
    VectorXd Bi = VectorXd::Zero(n);
    if (dims[i] == 1) {
      Bi(off[i]) = -tau;
    } else {
      Bi(off[i]) = -tau * tau / 2.0;
      Bi(off[i] + 1) = -tau;
    }
    for (int j = 0; j < N; ++j) {
      if (prec.chi[j] == i) {
        Bi(off[j]) = tau * tau / 2.0;
        Bi(off[j] + 1) = tau;
      }
    }
    g.B.push_back(Bi);
    g.Q.push_back(MatrixXd::Identity(n, n));
    g.R.push_back(MatrixXd::Identity(1, 1));
  }

  g.constraints = ConstraintSpec::empty(n, g.input_dims());
  g.constraints.collision_gap = params.d_min;

  // velocity reconstruction by walking the precedence chain to the leader
  auto velocity_coeffs = [&](int i) {
    VectorXd coef = VectorXd::Zero(n);
    int j = i;
    while (!prec.leader[j]) {
      coef(off[j] + 1) = -1.0;
      j = prec.chi[j];
    }
    coef(off[j]) = -1.0;
    return coef;
  };

  for (int i = 0; i < N; ++i) {
    if (!prec.leader[i]) {
      // gap: d_min - (p_chi - p_i) <= 0 with p_chi - p_i = x_{i,1} + d_i
      VectorXd gap_row = VectorXd::Zero(n);
      gap_row(off[i]) = -1.0;
      g.constraints.add_state_row(gap_row, params.d_min - params.d_safe(i),
                                  ConstraintClass::distance);
    }
    const VectorXd vc = velocity_coeffs(i);
    g.constraints.add_state_row(vc, params.v_ref - params.v_max, ConstraintClass::velocity);
    g.constraints.add_state_row(-vc, params.v_min - params.v_ref, ConstraintClass::velocity);
    g.constraints.add_input_bounds(i, params.u_min, params.u_max);
  }

  // decentralized pre-stabilizer on the own block; positive sign stabilizes
  // under this B convention
  std::vector<MatrixXd> K_stab;
  for (int i = 0; i < N; ++i) {
    MatrixXd K = MatrixXd::Zero(1, n);
    for (Eigen::Index c = 0; c < dims[i]; ++c) K(0, off[i] + c) = 0.1;
    K_stab.push_back(K);
  }

  Scenario s;
  s.kind = Scenario::Kind::intersection;
  s.game = prestabilize(g, K_stab);
  s.x0 = intersection_error_state(params, prec, params.p0, params.v0);
  s.sim_steps = params.sim_steps;
  s.tau_s = tau;
  s.v_ref = params.v_ref;
  s.p0 = params.p0;
  s.v0 = params.v0;
  s.intersection = params;
  s.precedence = prec;
  return s;
}

/// Error state of the scenario at given physical coordinates.
inline VectorXd scenario_error_state(const Scenario& s, const VectorXd& pos, const VectorXd& vel) {
  if (s.kind == Scenario::Kind::platooning)
    return platooning_error_state(s.platooning, pos, vel);
  return intersection_error_state(s.intersection, s.precedence, pos, vel);
}

/// Advances the physical double integrators by one sampling period under the
/// applied accelerations (one per vehicle).
inline void scenario_physical_step(const Scenario& s, VectorXd& pos, VectorXd& vel,
                                   const VectorXd& applied) {
  const double tau = s.tau_s;
  pos += tau * vel + 0.5 * tau * tau * applied;
  vel += tau * applied;
}

}  // namespace lqvi
