// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lqvi/scenarios.hpp"
#include "oracles.hpp"

using lqvi::Arrival;
using lqvi::IntersectionParams;
using lqvi::PlatooningParams;
using lqvi::Scenario;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("platooning dynamics blocks match the formulas") {
  auto params = PlatooningParams::defaults(2);
  params.headway = VectorXd::Constant(2, 0.5);
  const Scenario s = lqvi::build_platooning(params);
  const double tau = 0.1, h = 0.5;

  // the scenario game is pre-stabilized; undo the feedback to inspect the raw A
  MatrixXd A_raw = s.game.A;
  for (int i = 0; i < 2; ++i) A_raw -= s.game.B[i] * s.game.prestab_gain[i];

  MatrixXd A_expected = MatrixXd::Zero(4, 4);
  A_expected(1, 1) = 1.0;                       // leader block [[0,0],[0,1]]
  A_expected.block(2, 2, 2, 2) << 1, tau, 0, 1;
  CHECK((A_raw - A_expected).norm() <= 1e-14);

  // follower input block: -[h tau + tau^2/2; tau] on its own state
  VectorXd B1_expected = VectorXd::Zero(4);
  B1_expected(2) = -(h * tau + tau * tau / 2.0);
  B1_expected(3) = -tau;
  CHECK((s.game.B[1] - B1_expected).norm() <= 1e-14);

  // leader: [0; -tau] on itself, [tau^2/2; tau] on the follower
  VectorXd B0_expected = VectorXd::Zero(4);
  B0_expected(1) = -tau;
  B0_expected(2) = tau * tau / 2.0;
  B0_expected(3) = tau;
  CHECK((s.game.B[0] - B0_expected).norm() <= 1e-14);
}

TEST_CASE("both scenario builders produce Schur-stable pre-stabilized dynamics") {
  const Scenario plat = lqvi::build_platooning(PlatooningParams::defaults(5));
  CHECK(lqvi::spectral_radius(plat.game.A) < 1.0);

  const Scenario inter = lqvi::build_intersection(IntersectionParams::defaults(15));
  CHECK(lqvi::spectral_radius(inter.game.A) < 1.0);
}

TEST_CASE("equilibrium initial conditions give a zero error state") {
  auto params = PlatooningParams::defaults(3);
  params.v0 = VectorXd::Constant(3, params.v_ref);
  params.p0(0) = 0.0;
  for (int i = 1; i < 3; ++i)
    params.p0(i) = params.p0(i - 1) - params.gap(i) - params.headway(i) * params.v_ref;
  const Scenario s = lqvi::build_platooning(params);
  CHECK(s.x0.norm() <= 1e-12);
  // zero state is invariant under zero input
  CHECK((s.game.A * s.x0).norm() <= 1e-12);
}

TEST_CASE("platooning error state is consistent with the physical simulation") {
  auto gen = oracles::rng(61);
  const auto params = PlatooningParams::defaults(4);
  const Scenario s = lqvi::build_platooning(params);

  VectorXd pos = params.p0, vel = params.v0;
  VectorXd x = s.x0;
  for (int t = 0; t < 30; ++t) {
    const VectorXd applied = oracles::random_vector(gen, 4);
    // game input = applied - K_stab x
    VectorXd u_game(4);
    for (int i = 0; i < 4; ++i) u_game(i) = applied(i) - (s.game.prestab_gain[i] * x)(0);
    VectorXd x_next = s.game.A * x;
    for (int i = 0; i < 4; ++i) x_next += s.game.B[i] * u_game.segment(i, 1);
    lqvi::scenario_physical_step(s, pos, vel, applied);
    x = x_next;
    CHECK((lqvi::scenario_error_state(s, pos, vel) - x).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("intersection error state is consistent with the physical simulation") {
  auto gen = oracles::rng(62);
  const auto params = IntersectionParams::defaults(6);
  const Scenario s = lqvi::build_intersection(params);
  const int N = 6;

  VectorXd pos = params.p0, vel = params.v0;
  VectorXd x = s.x0;
  for (int t = 0; t < 30; ++t) {
    const VectorXd applied = oracles::random_vector(gen, N);
    VectorXd u_game(N);
    for (int i = 0; i < N; ++i) u_game(i) = applied(i) - (s.game.prestab_gain[i] * x)(0);
    VectorXd x_next = s.game.A * x;
    for (int i = 0; i < N; ++i) x_next += s.game.B[i] * u_game.segment(i, 1);
    lqvi::scenario_physical_step(s, pos, vel, applied);
    x = x_next;
    CHECK((lqvi::scenario_error_state(s, pos, vel) - x).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("intersection dynamics for a two-vehicle chain assemble by hand") {
  IntersectionParams params = IntersectionParams::defaults(2);
  params.arrivals = {{0.0, "NS"}, {1.0, "NS"}};  // same path: strict chain
  params.p0 << 0.0, -8.0;
  params.v0 << 8.0, 8.0;
  const Scenario s = lqvi::build_intersection(params);
  const double tau = 0.1;

  REQUIRE(s.precedence.leader[0]);
  REQUIRE(!s.precedence.leader[1]);
  REQUIRE(s.precedence.chi[1] == 0);

  // n = 1 + 2; undo the pre-stabilizer
  MatrixXd A_raw = s.game.A;
  for (int i = 0; i < 2; ++i) A_raw -= s.game.B[i] * s.game.prestab_gain[i];
  MatrixXd A_expected = MatrixXd::Zero(3, 3);
  A_expected(0, 0) = 1.0;
  A_expected.block(1, 1, 2, 2) << 1, tau, 0, 1;
  CHECK((A_raw - A_expected).norm() <= 1e-14);

  // leader input: -tau on itself, [tau^2/2; tau] on its follower
  VectorXd B0(3), B1(3);
  B0 << -tau, tau * tau / 2.0, tau;
  B1 << 0.0, -tau * tau / 2.0, -tau;
  CHECK((s.game.B[0] - B0).norm() <= 1e-14);
  CHECK((s.game.B[1] - B1).norm() <= 1e-14);
}

TEST_CASE("unrelated vehicles have zero input blocks") {
  IntersectionParams params = IntersectionParams::defaults(3);
  params.arrivals = {{0.0, "NS"}, {1.0, "NS"}, {0.5, "SE"}};  // SE is independent
  params.p0 << 0.0, -8.0, -4.0;
  params.v0 = VectorXd::Constant(3, 8.0);
  const Scenario s = lqvi::build_intersection(params);

  REQUIRE(s.precedence.leader[2]);
  // vehicle 2's input must not touch blocks of 0 or 1 (offsets 0..2), and
  // vice versa
  CHECK(s.game.B[2].col(0).head(3).norm() == 0.0);
  CHECK(s.game.B[0](3, 0) == 0.0);
  CHECK(s.game.B[1](3, 0) == 0.0);
}

TEST_CASE("predecessor inputs couple into the follower block as prescribed") {
  IntersectionParams params = IntersectionParams::defaults(2);
  params.arrivals = {{0.0, "EW"}, [] { Arrival a; a.time = 0.4; a.maneuver = "EW"; return a; }()};
  params.p0 << 0.0, -6.0;
  params.v0 << 8.0, 8.0;
  const Scenario s = lqvi::build_intersection(params);
  const double tau = 0.1;

  // one raw (un-prestabilized) step: perturbing u_0 changes x_1 by [tau^2/2; tau] du
  MatrixXd A_raw = s.game.A;
  for (int i = 0; i < 2; ++i) A_raw -= s.game.B[i] * s.game.prestab_gain[i];
  const VectorXd x = s.x0;
  const double du = 0.37;
  const VectorXd delta = s.game.B[0] * du;
  CHECK(delta(1) == Catch::Approx(tau * tau / 2.0 * du));
  CHECK(delta(2) == Catch::Approx(tau * du));
}

TEST_CASE("precedence assignment follows arrivals within conflict groups") {
  // single vehicle: a leader with no predecessor
  const auto single = lqvi::assign_precedence({{0.3, "NS"}});
  CHECK(single.leader[0]);
  CHECK(single.chi[0] == -1);

  // two conflicting vehicles ordered by arrival
  const auto pair = lqvi::assign_precedence({{2.0, "EW"}, {1.0, "NS"}});
  CHECK(pair.leader[1]);
  CHECK(pair.chi[0] == 1);

  // two conflicting + one independent: the independent one leads its own group
  const auto trio = lqvi::assign_precedence({{0.0, "NS"}, {1.0, "EW"}, {0.5, "SE"}});
  CHECK(trio.leader[0]);
  CHECK(trio.chi[1] == 0);
  CHECK(trio.leader[2]);

  // arrival ties break by vehicle index
  const auto tie = lqvi::assign_precedence({{1.0, "NS"}, {1.0, "NS"}});
  CHECK(tie.leader[0]);
  CHECK(tie.chi[1] == 0);
}

TEST_CASE("transitive conflict groups chain through the shared member") {
  // NW = {nw} conflicts with NS = {nw, sw}; WS = {sw} conflicts with NS but
  // not with NW; all three end up in one chain ordered by arrival
  const auto prec = lqvi::assign_precedence({{0.0, "NW"}, {0.5, "WS"}, {0.2, "NS"}});
  CHECK(prec.leader[0]);
  CHECK(prec.chi[2] == 0);
  CHECK(prec.chi[1] == 2);
}

TEST_CASE("scenario parameter validation") {
  auto bad = PlatooningParams::defaults(3);
  bad.tau_s = 0.0;
  CHECK_THROWS_AS(lqvi::build_platooning(bad), std::invalid_argument);

  auto bad2 = PlatooningParams::defaults(3);
  bad2.v_ref = 20.0;  // above v_max
  CHECK_THROWS_AS(lqvi::build_platooning(bad2), std::invalid_argument);

  IntersectionParams cyc = IntersectionParams::defaults(2);
  cyc.precedence = {1, 0};
  CHECK_THROWS_AS(lqvi::build_intersection(cyc), std::invalid_argument);

  IntersectionParams unknown = IntersectionParams::defaults(1);
  unknown.arrivals = {{0.0, "XX"}};
  CHECK_THROWS_AS(lqvi::build_intersection(unknown), std::invalid_argument);
}

TEST_CASE("default intersection has a forest precedence reaching leaders") {
  const auto params = IntersectionParams::defaults(15);
  const Scenario s = lqvi::build_intersection(params);
  int leaders = 0;
  for (int i = 0; i < 15; ++i) {
    if (s.precedence.leader[i]) {
      ++leaders;
      continue;
    }
    int j = i, steps = 0;
    while (!s.precedence.leader[j]) {
      j = s.precedence.chi[j];
      REQUIRE(++steps <= 15);
    }
  }
  CHECK(leaders >= 1);
}
