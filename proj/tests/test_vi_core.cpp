// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#include <catch2/catch_amalgamated.hpp>

#include "lqvi/active_set.hpp"
#include "lqvi/newton.hpp"
#include "lqvi/problem.hpp"
#include "oracles.hpp"

using lqvi::AffineOperator;
using lqvi::AviProblem;
using lqvi::PolyhedralSet;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// C = {u >= 1} in one dimension: -u + 1 <= 0.
AviProblem one_dim_lower_bound() {
  MatrixXd M(1, 1), D(1, 1);
  M << 1.0;
  D << -1.0;
  VectorXd q = VectorXd::Zero(1), d(1);
  d << 1.0;
  return AviProblem(AffineOperator(M, q), PolyhedralSet(D, d));
}

VectorXd scalar(double v) {
  VectorXd x(1);
  x << v;
  return x;
}

}  // namespace

TEST_CASE("strong monotonicity modulus") {
  CHECK(lqvi::strong_monotonicity_modulus(MatrixXd::Identity(3, 3)) == Catch::Approx(1.0));
  MatrixXd M(2, 2);
  M << 1.0, 2.0, 0.0, 1.0;
  // sym part [[1,1],[1,1]] has eigenvalues {0, 2}
  CHECK(lqvi::strong_monotonicity_modulus(M) == Catch::Approx(0.0).margin(1e-12));
  CHECK(lqvi::strong_monotonicity_modulus(MatrixXd::Zero(4, 4)) == Catch::Approx(0.0));
}

TEST_CASE("natural residual on the 1-D bound problem") {
  const AviProblem p = one_dim_lower_bound();
  CHECK(lqvi::natural_residual(p, scalar(1.0)) == Catch::Approx(0.0).margin(1e-8));
  // u=2: pi(2-2) = 1, |2-1| = 1
  CHECK(lqvi::natural_residual(p, scalar(2.0)) == Catch::Approx(1.0).margin(1e-8));
  // u=0.5: pi(0.5-0.5) = 1, |0.5-1| = 0.5
  CHECK(lqvi::natural_residual(p, scalar(0.5)) == Catch::Approx(0.5).margin(1e-8));
}

TEST_CASE("projection onto boxes equals componentwise clamp") {
  auto gen = oracles::rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 1 + (trial % 5);
    VectorXd lo = oracles::random_vector(gen, n), hi = lo.array() + 0.2;
    hi += oracles::random_vector(gen, n).cwiseAbs();
    const PolyhedralSet box = lqvi::box_set(lo, hi);
    const VectorXd z = oracles::random_vector(gen, n, 2.0);
    const VectorXd proj = lqvi::project_polyhedron(box, z);
    const VectorXd expected = oracles::clamp_to_box(z, lo, hi);
    CHECK((proj - expected).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("projection fixes strictly feasible points") {
  MatrixXd D(2, 2);
  D << 1.0, 0.0, 0.0, 1.0;
  VectorXd d(2);
  d << -1.0, -1.0;  // u <= 1 componentwise
  const PolyhedralSet set(D, d);
  VectorXd z(2);
  z << 0.3, -0.7;
  CHECK((lqvi::project_polyhedron(set, z) - z).norm() <= 1e-9);
}

TEST_CASE("projection onto a halfspace matches the closed form") {
  VectorXd a(2);
  a << 1.0, 1.0;
  const PolyhedralSet half(a.transpose(), VectorXd::Zero(1));  // u1 + u2 <= 0
  VectorXd z(2);
  z << 1.0, 1.0;
  const VectorXd proj = lqvi::project_polyhedron(half, z);
  CHECK((proj - oracles::project_halfspace(a, 0.0, z)).norm() <= 1e-8);
  CHECK(proj(0) == Catch::Approx(0.0).margin(1e-8));
  CHECK(proj(1) == Catch::Approx(0.0).margin(1e-8));

  auto gen = oracles::rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index n = 2 + (trial % 4);
    const VectorXd normal = oracles::random_vector(gen, n);
    const double offset = oracles::random_vector(gen, 1)(0);
    const PolyhedralSet hs(normal.transpose(), scalar(offset));
    const VectorXd pt = oracles::random_vector(gen, n, 2.0);
    CHECK((lqvi::project_polyhedron(hs, pt) - oracles::project_halfspace(normal, offset, pt))
              .norm() <= 1e-8);
  }
}

TEST_CASE("projection is firmly nonexpansive") {
  auto gen = oracles::rng(202);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 2 + (trial % 4), m = 1 + (trial % 5);
    const PolyhedralSet set = oracles::random_nonempty_polyhedron(gen, n, m);
    const VectorXd z1 = oracles::random_vector(gen, n, 2.0);
    const VectorXd z2 = oracles::random_vector(gen, n, 2.0);
    const VectorXd p1 = lqvi::project_polyhedron(set, z1);
    const VectorXd p2 = lqvi::project_polyhedron(set, z2);
    CHECK((p1 - p2).norm() <= (z1 - z2).norm() + 1e-9);
  }
}

TEST_CASE("projection reports infeasible or failing sets") {
  // {u >= 1} intersect {u <= -1} is empty.
  MatrixXd D(2, 1);
  D << -1.0, 1.0;
  VectorXd d(2);
  d << 1.0, 1.0;
  const PolyhedralSet empty_set(D, d);
  CHECK_THROWS_AS(lqvi::project_polyhedron(empty_set, scalar(0.0)), lqvi::NumericalError);
}

TEST_CASE("active set oracle hand examples") {
  const auto kkt = lqvi::active_set_oracle(one_dim_lower_bound());
  CHECK(kkt.u(0) == Catch::Approx(1.0).margin(1e-10));
  CHECK(kkt.lambda(0) == Catch::Approx(1.0).margin(1e-10));

  // {u >= -10}: unconstrained minimizer u = 0 is interior.
  MatrixXd D(1, 1);
  D << -1.0;
  VectorXd d(1);
  d << -10.0;
  const AviProblem interior(AffineOperator(MatrixXd::Identity(1, 1), VectorXd::Zero(1)),
                            PolyhedralSet(D, d));
  const auto kkt2 = lqvi::active_set_oracle(interior);
  CHECK(kkt2.u(0) == Catch::Approx(0.0).margin(1e-10));
  CHECK(kkt2.lambda(0) == Catch::Approx(0.0).margin(1e-10));

  // M = I2, q = (-2, 0), C = {u1 <= 1}: solution (1, 0) with dual 1.
  MatrixXd D3(1, 2);
  D3 << 1.0, 0.0;
  VectorXd d3(1), q3(2);
  d3 << -1.0;
  q3 << -2.0, 0.0;
  const AviProblem p3(AffineOperator(MatrixXd::Identity(2, 2), q3), PolyhedralSet(D3, d3));
  const auto kkt3 = lqvi::active_set_oracle(p3);
  CHECK(kkt3.u(0) == Catch::Approx(1.0).margin(1e-10));
  CHECK(kkt3.u(1) == Catch::Approx(0.0).margin(1e-10));
  CHECK(kkt3.lambda(0) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("active set oracle satisfies the KKT system on random instances") {
  auto gen = oracles::rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + (trial % 8), m = 1 + (trial % 6);
    const AviProblem p = oracles::random_avi(gen, n, m);
    const auto kkt = lqvi::active_set_oracle(p);

    // (a) stationarity, (b) primal feasibility, (c) dual feasibility,
    // (d) complementarity
    const VectorXd stat = p.op(kkt.u) + p.set.D.transpose() * kkt.lambda;
    CHECK(stat.lpNorm<Eigen::Infinity>() <= 1e-8);
    const VectorXd cons = p.set.residual(kkt.u);
    CHECK(cons.maxCoeff() <= 1e-8);
    CHECK(kkt.lambda.minCoeff() >= -1e-8);
    CHECK(std::abs(kkt.lambda.dot(cons)) <= 1e-8);

    // the oracle point has (numerically) zero natural residual
    CHECK(lqvi::natural_residual(p, kkt.u) <= 1e-8);
  }
}

TEST_CASE("active set oracle rejects oversized and infeasible problems") {
  auto gen = oracles::rng(404);
  const AviProblem big(AffineOperator(MatrixXd::Identity(2, 2), VectorXd::Zero(2)),
                       oracles::random_nonempty_polyhedron(gen, 2, 21));
  CHECK_THROWS_AS(lqvi::active_set_oracle(big), std::invalid_argument);

  MatrixXd D(2, 1);
  D << -1.0, 1.0;
  VectorXd d(2);
  d << 1.0, 1.0;
  const AviProblem infeasible(AffineOperator(MatrixXd::Identity(1, 1), VectorXd::Zero(1)),
                              PolyhedralSet(D, d));
  CHECK_THROWS_AS(lqvi::active_set_oracle(infeasible), lqvi::NoFeasibleCandidateError);
}

TEST_CASE("problem constructors validate dimensions") {
  CHECK_THROWS_AS(PolyhedralSet(MatrixXd::Zero(2, 3), VectorXd::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(AffineOperator(MatrixXd::Zero(2, 3), VectorXd::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(AviProblem(AffineOperator(MatrixXd::Identity(2, 2), VectorXd::Zero(2)),
                             lqvi::free_set(3)),
                  std::invalid_argument);
}
