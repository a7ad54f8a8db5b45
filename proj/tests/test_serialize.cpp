// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "lqvi/serialize.hpp"
#include "oracles.hpp"

using lqvi::json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("avi documents round-trip bit-exactly") {
  auto gen = oracles::rng(81);
  for (int trial = 0; trial < 10; ++trial) {
    const lqvi::AviProblem p = oracles::random_avi(gen, 3 + (trial % 3), 2 + (trial % 4));
    const std::string text = lqvi::to_json(p).dump();
    const lqvi::AviProblem q = lqvi::avi_from_json(json::parse(text));

    // bitwise equality of every coefficient
    REQUIRE(q.n() == p.n());
    REQUIRE(q.m() == p.m());
    CHECK(std::memcmp(p.op.M.data(), q.op.M.data(), sizeof(double) * p.op.M.size()) == 0);
    CHECK(std::memcmp(p.op.q.data(), q.op.q.data(), sizeof(double) * p.op.q.size()) == 0);
    CHECK(std::memcmp(p.set.D.data(), q.set.D.data(), sizeof(double) * p.set.D.size()) == 0);
    CHECK(std::memcmp(p.set.d.data(), q.set.d.data(), sizeof(double) * p.set.d.size()) == 0);
  }
}

TEST_CASE("avi documents reject malformed input") {
  CHECK_THROWS_AS(lqvi::avi_from_json(json::parse("{\"n\": 1}")), lqvi::SchemaError);
  CHECK_THROWS_AS(
      lqvi::avi_from_json(json::parse(
          "{\"n\": 2, \"m\": 1, \"M\": [1, 0, 0], \"q\": [0, 0], \"D\": [1, 0], \"d\": [0]}")),
      lqvi::SchemaError);
  CHECK_THROWS_AS(lqvi::avi_from_json(json::parse("[1, 2, 3]")), lqvi::SchemaError);
}

TEST_CASE("game documents reconstruct the exact game") {
  auto gen = oracles::rng(82);
  lqvi::LqGame g;
  g.A = oracles::random_matrix(gen, 3, 3) * 0.2;
  g.B = {oracles::random_matrix(gen, 3, 1), oracles::random_matrix(gen, 3, 2)};
  for (int i = 0; i < 2; ++i) {
    const MatrixXd C = oracles::random_matrix(gen, 3, 3);
    g.Q.push_back(MatrixXd(C.transpose() * C));
    g.R.push_back(MatrixXd::Identity(g.B[i].cols(), g.B[i].cols()));
  }
  g.constraints = lqvi::ConstraintSpec::empty(3, {1, 2});
  g.constraints.add_input_bounds(0, -1.0, 1.0);
  g.constraints.add_state_row(oracles::random_vector(gen, 3), 0.4,
                              lqvi::ConstraintClass::velocity);
  g.constraints.collision_gap = 2.0;

  const lqvi::LqGame h = lqvi::game_from_json(lqvi::to_json(g));
  CHECK((h.A - g.A).norm() == 0.0);
  CHECK((h.B[1] - g.B[1]).norm() == 0.0);
  CHECK((h.Q[0] - g.Q[0]).norm() == 0.0);
  CHECK((h.constraints.Cx - g.constraints.Cx).norm() == 0.0);
  CHECK((h.constraints.Dx - g.constraints.Dx).norm() == 0.0);
  CHECK(h.constraints.stage_class == g.constraints.stage_class);
  CHECK(h.constraints.state_class == g.constraints.state_class);
  CHECK(h.constraints.collision_gap == 2.0);
}

TEST_CASE("scenario documents build and honor overrides") {
  const json doc = json::parse(R"({
    "type": "platooning",
    "params": {"N": 3, "v_ref": 12.0, "headway": 0.4, "gap": [0.0, 6.0, 6.0],
               "u_bounds": [-2.0, 2.0], "sim_steps": 42}
  })");
  const lqvi::Scenario s = lqvi::scenario_from_json(doc);
  CHECK(s.kind == lqvi::Scenario::Kind::platooning);
  CHECK(s.sim_steps == 42);
  CHECK(s.platooning.v_ref == 12.0);
  CHECK(s.platooning.headway(1) == 0.4);
  CHECK(s.platooning.gap(2) == 6.0);
  CHECK(s.game.num_agents() == 3);

  const json doc2 = json::parse(R"({
    "type": "intersection",
    "params": {"N": 4,
               "arrivals": [{"time": 0.0, "maneuver": "NS"},
                            {"time": 0.6, "maneuver": "NS"},
                            {"time": 1.2, "maneuver": "EW"},
                            {"time": 0.3, "maneuver": "SE"}]}
  })");
  const lqvi::Scenario s2 = lqvi::scenario_from_json(doc2);
  CHECK(s2.kind == lqvi::Scenario::Kind::intersection);
  CHECK(s2.game.num_agents() == 4);
  CHECK(s2.precedence.leader[0]);
  CHECK(s2.precedence.leader[3]);  // SE does not cross NS or EW paths

  CHECK_THROWS_AS(lqvi::scenario_from_json(json::parse("{\"type\": \"flying\"}")),
                  lqvi::SchemaError);
}

TEST_CASE("scenario params round-trip through json") {
  const auto p = lqvi::PlatooningParams::defaults(4);
  const auto q = lqvi::platooning_params_from_json(lqvi::to_json(p));
  CHECK(q.N == p.N);
  CHECK((q.headway - p.headway).norm() == 0.0);
  CHECK((q.p0 - p.p0).norm() == 0.0);
  CHECK(q.sim_steps == p.sim_steps);

  const auto pi = lqvi::IntersectionParams::defaults(6);
  const auto qi = lqvi::intersection_params_from_json(lqvi::to_json(pi));
  CHECK(qi.N == pi.N);
  REQUIRE(qi.arrivals.size() == pi.arrivals.size());
  for (std::size_t i = 0; i < qi.arrivals.size(); ++i) {
    CHECK(qi.arrivals[i].time == pi.arrivals[i].time);
    CHECK(qi.arrivals[i].maneuver == pi.arrivals[i].maneuver);
  }
  CHECK((qi.p0 - pi.p0).norm() == 0.0);
}

TEST_CASE("solver options parse with defaults and overrides") {
  const auto defaults = lqvi::solver_options_from_json(json::object());
  CHECK(defaults.name == "newton");
  CHECK(defaults.newton.tol == 1e-4);
  CHECK(defaults.newton.max_iter == 100000);
  CHECK(defaults.newton.mu == 1e-6);
  CHECK_FALSE(defaults.newton.iteration_budget.has_value());

  const auto opts = lqvi::solver_options_from_json(
      json::parse(R"({"solver": "dr", "tol": 1e-6, "budget": 25, "dr_gamma": 0.5})"));
  CHECK(opts.name == "dr");
  CHECK(opts.first_order.tol == 1e-6);
  CHECK(opts.first_order.iteration_budget == 25);
  CHECK(opts.first_order.dr_gamma == 0.5);

  CHECK_THROWS_AS(lqvi::solver_options_from_json(json::parse(R"({"solver": "sgd"})")),
                  lqvi::SchemaError);
}

TEST_CASE("rh csv exports are re-readable") {
  auto params = lqvi::PlatooningParams::defaults(3);
  params.sim_steps = 12;
  const lqvi::Scenario s = lqvi::build_platooning(params);
  const auto riccati = lqvi::solve_game_riccati(s.game);
  lqvi::RhConfig cfg;
  const lqvi::RhLog log = lqvi::run(s, riccati, cfg);

  const auto metrics_path = temp_file("lqvi_metrics_test.csv");
  const auto traj_path = temp_file("lqvi_traj_test.csv");
  lqvi::write_rh_metrics_csv(metrics_path.string(), log);
  lqvi::write_rh_trajectory_csv(traj_path.string(), log);

  const auto metrics = lqvi::read_csv(metrics_path.string());
  REQUIRE(metrics.size() == 13);  // header + 12 steps
  CHECK(metrics[0][0] == "t");
  CHECK(metrics[0].size() == 6);
  for (int t = 0; t < 12; ++t) {
    CHECK(std::stoi(metrics[t + 1][0]) == t);
    CHECK(std::stoi(metrics[t + 1][1]) == log.iterations[t]);
  }

  const auto traj = lqvi::read_csv(traj_path.string());
  REQUIRE(traj.size() == 13);
  CHECK(traj[0].size() == 1 + 3 * 3);  // t + p,v,u per vehicle
  CHECK(std::stod(traj[1][1]) == Catch::Approx(log.positions[0](0)));

  std::filesystem::remove(metrics_path);
  std::filesystem::remove(traj_path);

  const json summary = lqvi::rh_summary_json(log, s.game, "newton");
  CHECK(summary.at("steps") == 12);
  CHECK(summary.at("converged_steps") == 12);
  CHECK(summary.at("violations").at("collision") == false);
}
