// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lqvi/rh_sim.hpp"
#include "lqvi/scenarios.hpp"
#include "lqvi/solvers.hpp"

namespace lqvi {

using nlohmann::json;

/// Thrown on malformed documents; the CLI maps it to the I/O exit code.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline json flat_rowmajor(const MatrixXd& M) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) arr.push_back(M(i, j));
  return arr;
}

inline MatrixXd from_flat_rowmajor(const json& arr, Eigen::Index rows, Eigen::Index cols,
                                   const std::string& what) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols)
    throw SchemaError(what + ": expected " + std::to_string(rows * cols) + " entries");
  MatrixXd M(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = arr.at(k++).get<double>();
  return M;
}

inline json vec_json(const VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline VectorXd vec_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw SchemaError(what + ": expected an array");
  VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr.at(i).get<double>();
  return v;
}

// matrix object {"rows": r, "cols": c, "data": [row-major]}
inline json mat_json(const MatrixXd& M) {
  return json{{"rows", M.rows()}, {"cols", M.cols()}, {"data", flat_rowmajor(M)}};
}

inline MatrixXd mat_from_json(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw SchemaError(what + ": expected {rows, cols, data}");
  return from_flat_rowmajor(j.at("data"), j.at("rows").get<Eigen::Index>(),
                            j.at("cols").get<Eigen::Index>(), what);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

// scalar-or-array convenience: 0.5 means constant per vehicle
inline VectorXd per_vehicle(const json& j, const std::string& key, int N, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return VectorXd::Constant(N, fallback);
  const json& v = j.at(key);
  if (v.is_number()) return VectorXd::Constant(N, v.get<double>());
  const VectorXd out = vec_from_json(v, key);
  if (out.size() != N) throw SchemaError(key + ": expected " + std::to_string(N) + " entries");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// AVI problem documents: {"n", "m", "M", "q", "D", "d"}, matrices row-major.

inline json to_json(const AviProblem& p) {
  return json{{"n", p.n()},
              {"m", p.m()},
              {"M", detail::flat_rowmajor(p.op.M)},
              {"q", detail::vec_json(p.op.q)},
              {"D", detail::flat_rowmajor(p.set.D)},
              {"d", detail::vec_json(p.set.d)}};
}

inline AviProblem avi_from_json(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("m"))
    throw SchemaError("avi document: expected object with n and m");
  const auto n = j.at("n").get<Eigen::Index>();
  const auto m = j.at("m").get<Eigen::Index>();
  if (n < 1 || m < 0) throw SchemaError("avi document: invalid dimensions");
  try {
    return AviProblem(
        AffineOperator(detail::from_flat_rowmajor(j.at("M"), n, n, "M"),
                       detail::vec_from_json(j.at("q"), "q")),
        PolyhedralSet(detail::from_flat_rowmajor(j.at("D"), m, n, "D"),
                      detail::vec_from_json(j.at("d"), "d")));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("avi document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Solver reports.

inline json to_json(const SolverReport& rep) {
  return json{{"solution", detail::vec_json(rep.solution)},
              {"multipliers", detail::vec_json(rep.multipliers)},
              {"residual_trace", rep.residual_trace},
              {"merit_trace", rep.merit_trace},
              {"alpha_trace", rep.alpha_trace},
              {"iterations", rep.iterations},
              {"elapsed_s", rep.elapsed},
              {"status", to_string(rep.status)},
              {"message", rep.message}};
}

// ---------------------------------------------------------------------------
// Solver options: {"solver", "tol", "max_iter", "mu", "armijo_c",
// "backtrack_beta", "budget", "fb_step", "dr_gamma", "seed"}.

inline SolverOptions solver_options_from_json(const json& j) {
  SolverOptions opts;
  opts.name = detail::get_or<std::string>(j, "solver", "newton");
  if (!is_known_solver(opts.name)) throw SchemaError("unknown solver '" + opts.name + "'");
  opts.newton.tol = detail::get_or(j, "tol", opts.newton.tol);
  opts.newton.max_iter = detail::get_or(j, "max_iter", opts.newton.max_iter);
  opts.newton.mu = detail::get_or(j, "mu", opts.newton.mu);
  opts.newton.armijo_c = detail::get_or(j, "armijo_c", opts.newton.armijo_c);
  opts.newton.backtrack_beta = detail::get_or(j, "backtrack_beta", opts.newton.backtrack_beta);
  opts.first_order.tol = opts.newton.tol;
  opts.first_order.max_iter = opts.newton.max_iter;
  if (j.contains("budget") && !j.at("budget").is_null()) {
    opts.newton.iteration_budget = j.at("budget").get<int>();
    opts.first_order.iteration_budget = opts.newton.iteration_budget;
  }
  if (j.contains("fb_step") && !j.at("fb_step").is_null())
    opts.first_order.fb_step = j.at("fb_step").get<double>();
  opts.first_order.dr_gamma = detail::get_or(j, "dr_gamma", opts.first_order.dr_gamma);
  if (j.contains("seed") && !j.at("seed").is_null())
    opts.newton.random_init_seed = j.at("seed").get<std::uint64_t>();
  return opts;
}

inline json to_json(const SolverOptions& opts) {
  json j{{"solver", opts.name},
         {"tol", opts.newton.tol},
         {"max_iter", opts.newton.max_iter},
         {"mu", opts.newton.mu},
         {"armijo_c", opts.newton.armijo_c},
         {"backtrack_beta", opts.newton.backtrack_beta},
         {"dr_gamma", opts.first_order.dr_gamma}};
  j["budget"] = opts.newton.iteration_budget ? json(*opts.newton.iteration_budget) : json();
  j["fb_step"] = opts.first_order.fb_step ? json(*opts.first_order.fb_step) : json();
  j["seed"] = opts.newton.random_init_seed ? json(*opts.newton.random_init_seed) : json();
  return j;
}

// ---------------------------------------------------------------------------
// LqGame and ConstraintSpec (matrices as {"rows","cols","data"} row-major).

inline json to_json(const ConstraintSpec& spec) {
  json cu = json::array(), stage_cls = json::array(), state_cls = json::array();
  for (const auto& m : spec.Cu) cu.push_back(detail::mat_json(m));
  for (auto c : spec.stage_class) stage_cls.push_back(to_string(c));
  for (auto c : spec.state_class) state_cls.push_back(to_string(c));
  return json{{"Cx", detail::mat_json(spec.Cx)},   {"Cu", cu},
              {"c", detail::vec_json(spec.c)},     {"stage_class", stage_cls},
              {"Dx", detail::mat_json(spec.Dx)},   {"dx", detail::vec_json(spec.dx)},
              {"state_class", state_cls},          {"collision_gap", spec.collision_gap}};
}

inline ConstraintClass constraint_class_from_string(const std::string& s) {
  if (s == "distance") return ConstraintClass::distance;
  if (s == "velocity") return ConstraintClass::velocity;
  if (s == "input") return ConstraintClass::input;
  if (s == "other") return ConstraintClass::other;
  throw SchemaError("unknown constraint class '" + s + "'");
}

inline ConstraintSpec constraint_spec_from_json(const json& j) {
  ConstraintSpec spec;
  spec.Cx = detail::mat_from_json(j.at("Cx"), "Cx");
  for (const auto& m : j.at("Cu")) spec.Cu.push_back(detail::mat_from_json(m, "Cu"));
  spec.c = detail::vec_from_json(j.at("c"), "c");
  spec.Dx = detail::mat_from_json(j.at("Dx"), "Dx");
  spec.dx = detail::vec_from_json(j.at("dx"), "dx");
  for (const auto& s : j.at("stage_class"))
    spec.stage_class.push_back(constraint_class_from_string(s.get<std::string>()));
  for (const auto& s : j.at("state_class"))
    spec.state_class.push_back(constraint_class_from_string(s.get<std::string>()));
  spec.collision_gap = detail::get_or(j, "collision_gap", 0.0);
  return spec;
}

inline json to_json(const LqGame& g) {
  json b = json::array(), q = json::array(), r = json::array(), k = json::array();
  for (const auto& m : g.B) b.push_back(detail::mat_json(m));
  for (const auto& m : g.Q) q.push_back(detail::mat_json(m));
  for (const auto& m : g.R) r.push_back(detail::mat_json(m));
  for (const auto& m : g.prestab_gain) k.push_back(detail::mat_json(m));
  return json{{"A", detail::mat_json(g.A)}, {"B", b}, {"Q", q}, {"R", r},
              {"constraints", to_json(g.constraints)}, {"prestab_gain", k}};
}

inline LqGame game_from_json(const json& j) {
  LqGame g;
  g.A = detail::mat_from_json(j.at("A"), "A");
  for (const auto& m : j.at("B")) g.B.push_back(detail::mat_from_json(m, "B"));
  for (const auto& m : j.at("Q")) g.Q.push_back(detail::mat_from_json(m, "Q"));
  for (const auto& m : j.at("R")) g.R.push_back(detail::mat_from_json(m, "R"));
  if (j.contains("constraints"))
    g.constraints = constraint_spec_from_json(j.at("constraints"));
  else
    g.constraints = ConstraintSpec::empty(g.n(), g.input_dims());
  if (j.contains("prestab_gain"))
    for (const auto& m : j.at("prestab_gain"))
      g.prestab_gain.push_back(detail::mat_from_json(m, "prestab_gain"));
  validate_game(g);
  return g;
}

// ---------------------------------------------------------------------------
// Scenario documents: {"type": "platooning"|"intersection", "params": {...}}.

inline PlatooningParams platooning_params_from_json(const json& j) {
  const int N = detail::get_or(j, "N", 5);
  if (N < 2) throw SchemaError("platooning: N must be >= 2");
  PlatooningParams p = PlatooningParams::defaults(N);
  p.tau_s = detail::get_or(j, "tau_s", p.tau_s);
  p.headway = detail::per_vehicle(j, "headway", N, 0.5);
  p.gap = detail::per_vehicle(j, "gap", N, 5.0);
  p.d_min = detail::get_or(j, "d_min", p.d_min);
  p.v_ref = detail::get_or(j, "v_ref", p.v_ref);
  if (j.contains("v_bounds")) {
    p.v_min = j.at("v_bounds").at(0).get<double>();
    p.v_max = j.at("v_bounds").at(1).get<double>();
  }
  if (j.contains("u_bounds")) {
    p.u_min = j.at("u_bounds").at(0).get<double>();
    p.u_max = j.at("u_bounds").at(1).get<double>();
  }
  p.sim_steps = detail::get_or(j, "sim_steps", p.sim_steps);
  if (j.contains("x0")) {
    p.p0 = detail::vec_from_json(j.at("x0").at("p"), "x0.p");
    p.v0 = detail::vec_from_json(j.at("x0").at("v"), "x0.v");
    if (p.p0.size() != N || p.v0.size() != N)
      throw SchemaError("platooning: x0 arrays must have length N");
  } else {
    // re-derive the default initial condition under the configured geometry
    p.v0 = VectorXd::Constant(N, 0.5 * (p.v_min + p.v_ref));
    p.p0 = VectorXd::Zero(N);
    for (int i = 1; i < N; ++i)
      p.p0(i) = p.p0(i - 1) - (p.gap(i) + p.headway(i) * p.v0(i) + 3.0);
  }
  return p;
}

inline IntersectionParams intersection_params_from_json(const json& j) {
  const int N = detail::get_or(j, "N", 15);
  if (N < 1) throw SchemaError("intersection: N must be >= 1");
  IntersectionParams p = IntersectionParams::defaults(N);
  p.tau_s = detail::get_or(j, "tau_s", p.tau_s);
  p.d_safe = detail::per_vehicle(j, "d_safe", N, 5.0);
  p.d_min = detail::get_or(j, "d_min", p.d_min);
  p.v_ref = detail::get_or(j, "v_ref", p.v_ref);
  if (j.contains("v_bounds")) {
    p.v_min = j.at("v_bounds").at(0).get<double>();
    p.v_max = j.at("v_bounds").at(1).get<double>();
  }
  if (j.contains("u_bounds")) {
    p.u_min = j.at("u_bounds").at(0).get<double>();
    p.u_max = j.at("u_bounds").at(1).get<double>();
  }
  p.sim_steps = detail::get_or(j, "sim_steps", p.sim_steps);
  if (j.contains("arrivals")) {
    p.arrivals.clear();
    for (const auto& a : j.at("arrivals"))
      p.arrivals.push_back({a.at("time").get<double>(), a.at("maneuver").get<std::string>()});
    if (static_cast<int>(p.arrivals.size()) != N)
      throw SchemaError("intersection: arrivals must have length N");
  }
  if (j.contains("precedence") && !j.at("precedence").is_null())
    p.precedence = j.at("precedence").get<std::vector<int>>();
  if (j.contains("x0")) {
    p.p0 = detail::vec_from_json(j.at("x0").at("p"), "x0.p");
    p.v0 = detail::vec_from_json(j.at("x0").at("v"), "x0.v");
    if (p.p0.size() != N || p.v0.size() != N)
      throw SchemaError("intersection: x0 arrays must have length N");
  } else {
    p.v0 = VectorXd::Constant(N, 8.0);
    p.p0 = VectorXd::Zero(N);
    for (int i = 0; i < N; ++i) p.p0(i) = -p.v0(i) * p.arrivals[i].time;
  }
  return p;
}

inline Scenario scenario_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type"))
    throw SchemaError("scenario document: missing 'type'");
  const std::string type = j.at("type").get<std::string>();
  const json params = j.contains("params") ? j.at("params") : json::object();
  try {
    if (type == "platooning") return build_platooning(platooning_params_from_json(params));
    if (type == "intersection") return build_intersection(intersection_params_from_json(params));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("scenario document: ") + e.what());
  }
  throw SchemaError("scenario document: unknown type '" + type + "'");
}

inline json to_json(const PlatooningParams& p) {
  return json{{"N", p.N},
              {"tau_s", p.tau_s},
              {"headway", detail::vec_json(p.headway)},
              {"gap", detail::vec_json(p.gap)},
              {"d_min", p.d_min},
              {"v_ref", p.v_ref},
              {"v_bounds", {p.v_min, p.v_max}},
              {"u_bounds", {p.u_min, p.u_max}},
              {"x0", {{"p", detail::vec_json(p.p0)}, {"v", detail::vec_json(p.v0)}}},
              {"sim_steps", p.sim_steps}};
}

inline json to_json(const IntersectionParams& p) {
  json arrivals = json::array();
  for (const auto& a : p.arrivals) arrivals.push_back({{"time", a.time}, {"maneuver", a.maneuver}});
  json out{{"N", p.N},
           {"tau_s", p.tau_s},
           {"arrivals", arrivals},
           {"d_safe", detail::vec_json(p.d_safe)},
           {"d_min", p.d_min},
           {"v_ref", p.v_ref},
           {"v_bounds", {p.v_min, p.v_max}},
           {"u_bounds", {p.u_min, p.u_max}},
           {"x0", {{"p", detail::vec_json(p.p0)}, {"v", detail::vec_json(p.v0)}}},
           {"sim_steps", p.sim_steps}};
  if (!p.precedence.empty()) out["precedence"] = p.precedence;
  return out;
}

// ---------------------------------------------------------------------------
// File helpers.

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("parse error in '" + path + "': " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Closed-loop exports.

/// Per-step metrics: t, iterations, elapsed_s, residual, status, violation_max.
inline void write_rh_metrics_csv(const std::string& path, const RhLog& log) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << "t,iterations,elapsed_s,residual,status,violation_max\n";
  for (int t = 0; t < log.completed_steps; ++t) {
    out << t << ',' << log.iterations[t] << ',' << log.elapsed[t] << ',' << log.residual[t]
        << ',' << to_string(log.status[t]) << ',' << log.violation_max[t] << "\n";
  }
}

/// Physical trajectory: t, p_i..., v_i..., u_i... (scenario runs only).
inline void write_rh_trajectory_csv(const std::string& path, const RhLog& log) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  if (log.positions.empty())
    throw SchemaError("trajectory export requires a scenario-based run");
  const Eigen::Index N = log.positions.front().size();
  out << "t";
  for (Eigen::Index i = 0; i < N; ++i) out << ",p" << i;
  for (Eigen::Index i = 0; i < N; ++i) out << ",v" << i;
  for (Eigen::Index i = 0; i < N; ++i) out << ",u" << i;
  out << "\n";
  for (int t = 0; t < log.completed_steps; ++t) {
    out << t;
    for (Eigen::Index i = 0; i < N; ++i) out << ',' << log.positions[t](i);
    for (Eigen::Index i = 0; i < N; ++i) out << ',' << log.velocities[t](i);
    for (Eigen::Index i = 0; i < N; ++i) out << ',' << log.inputs[t](i);
    out << "\n";
  }
}

/// Minimal CSV reader used by the round-trip tests and the bench summaries.
inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json rh_summary_json(const RhLog& log, const LqGame& game,
                            const std::string& solver_name) {
  auto median_of = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  std::vector<double> iters(log.iterations.begin(), log.iterations.end());
  std::vector<double> elapsed = log.elapsed;

  int converged = 0;
  for (auto s : log.status)
    if (s == SolverStatus::Converged) ++converged;

  const ViolationReport report = check_violations(log, game);
  json classes = json::object();
  for (const auto& [cls, entry] : report.by_class)
    classes[to_string(cls)] = json{{"max_violation", entry.max_violation},
                                   {"first_step", entry.first_step},
                                   {"count", entry.count}};

  double total_elapsed = 0.0;
  for (double e : log.elapsed) total_elapsed += e;

  return json{{"solver", solver_name},
              {"steps", log.completed_steps},
              {"converged_steps", converged},
              {"median_iterations", median_of(iters)},
              {"median_elapsed_s", median_of(elapsed)},
              {"total_solve_s", total_elapsed},
              {"violations",
               {{"max", report.max_violation},
                {"collision", report.collision},
                {"classes", classes}}},
              {"aborted", !log.abort_reason.empty()},
              {"abort_reason", log.abort_reason}};
}

}  // namespace lqvi
