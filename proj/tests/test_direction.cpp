#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ssqcqp/ssqcqp.hpp"

using namespace ssqcqp;

namespace {

// f = x₂, g = ‖x‖² − 1 at a point x.
DirectionRequest ball_request(const Eigen::Vector2d& x, double w) {
  DirectionRequest r;
  r.grad_f = Eigen::Vector2d(0, 1);
  r.g_values = Vector::Constant(1, x.squaredNorm() - 1.0);
  r.g_gradients = (2.0 * x).transpose();
  r.weights = Vector::Constant(1, w);
  r.active = {0};
  return r;
}

// f = x, g = −x at x = 0.
DirectionRequest stationary_request() {
  DirectionRequest r;
  r.grad_f = Vector::Ones(1);
  r.g_values = Vector::Zero(1);
  r.g_gradients = Matrix::Constant(1, 1, -1.0);
  r.weights = Vector::Constant(1, 0.5);
  r.active = {0};
  return r;
}

double angle(const Vector& a, const Vector& b) {
  return std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0));
}

}  // namespace

TEST(ConeQp, SecondOrderConeProjection) {
  // min ½‖x − (0.5, 3)‖² s.t. |x₂| ≤ x₁.
  ConeQp qp;
  qp.P = Matrix::Identity(2, 2);
  qp.q = Vector(Eigen::Vector2d(-0.5, -3.0));
  qp.cones.soc = {2};
  qp.G = -Matrix::Identity(2, 2);
  qp.h = Vector::Zero(2);
  const auto s = solve_cone_qp(qp);
  ASSERT_EQ(s.status, ConeQpStatus::optimal);
  EXPECT_NEAR(s.x[0], 1.75, 1e-8);
  EXPECT_NEAR(s.x[1], 1.75, 1e-8);
}

TEST(ConeQp, LinearInequalityDual) {
  // min ½x² − 2x s.t. x ≤ 1 → x = 1, z = 1.
  ConeQp qp;
  qp.P = Matrix::Identity(1, 1);
  qp.q = Vector::Constant(1, -2.0);
  qp.cones.linear = 1;
  qp.G = Matrix::Ones(1, 1);
  qp.h = Vector::Ones(1);
  const auto s = solve_cone_qp(qp);
  ASSERT_EQ(s.status, ConeQpStatus::optimal);
  EXPECT_NEAR(s.x[0], 1.0, 1e-8);
  EXPECT_NEAR(s.z[0], 1.0, 1e-8);
}

TEST(ToConicForm, StructuralCounts) {
  const auto cp = to_conic_form(ball_request({1, 0}, 0.5));
  EXPECT_EQ(cp.linear_rows(), 1);
  ASSERT_EQ(cp.qp.cones.soc.size(), 1u);
  EXPECT_EQ(cp.qp.cones.soc[0], 4);
  EXPECT_EQ(cp.qp.G.cols(), 3);
  EXPECT_EQ(cp.qp.P(2, 2), 0.0);
  EXPECT_EQ(cp.qp.q.tail(1)[0], 0.0);
}

TEST(ToConicForm, ConeRowEncodesEpigraph) {
  const auto cp = to_conic_form(ball_request({1, 0}, 0.5));
  const Index k = cp.linear_rows();
  // At (u, s) the cone slack must be ((s+1)/2, u, (s−1)/2).
  const Vector y = Vector(Eigen::Vector3d(0.3, -0.4, 0.7));
  const Vector slack = cp.qp.h.tail(4) - cp.qp.G.bottomRows(4) * y;
  EXPECT_EQ(slack[0], (0.7 + 1.0) / 2.0);
  EXPECT_EQ(slack[1], 0.3);
  EXPECT_EQ(slack[2], -0.4);
  EXPECT_EQ(slack[3], (0.7 - 1.0) / 2.0);
  EXPECT_EQ(k, 1);
}

TEST(ToConicForm, RejectsInvalidRequests) {
  auto r = ball_request({1, 0}, 0.5);
  r.weights[0] = 0.0;
  EXPECT_THROW(to_conic_form(r), std::invalid_argument);
  r = ball_request({1, 0}, 0.5);
  r.alpha = -1.0;
  EXPECT_THROW(to_conic_form(r), std::invalid_argument);
  r = ball_request({1, 0}, 0.5);
  r.g_values[0] = std::nan("");
  EXPECT_THROW(to_conic_form(r), NonFiniteError);
  r = ball_request({1, 0}, 0.5);
  r.active.clear();
  EXPECT_THROW(to_conic_form(r), std::invalid_argument);
}

TEST(SolveDirection, EmptyActiveSetIsNegativeGradient) {
  DirectionRequest r;
  r.grad_f = Vector(Eigen::Vector2d(3, -4));
  r.g_values = Vector::Zero(0);
  r.g_gradients = Matrix::Zero(0, 2);
  r.weights = Vector::Zero(0);
  const auto s = solve_direction(r);
  ASSERT_EQ(s.status, DirectionStatus::optimal);
  EXPECT_EQ(s.u, -r.grad_f);
  EXPECT_EQ(s.s, 25.0);
}

TEST(SolveDirection, BallBoundaryClosedForm) {
  const auto r = ball_request({1, 0}, 0.5);
  const auto s = solve_direction(r);
  ASSERT_EQ(s.status, DirectionStatus::optimal);
  double lam = 0.0;
  const Vector u = oracle::ball_boundary_direction(0.5, &lam);
  EXPECT_NEAR(u[0], -0.2111, 1e-4);
  EXPECT_NEAR(u[1], -0.8944, 1e-4);
  EXPECT_NEAR(lam, 0.1180, 1e-4);
  EXPECT_LE((s.u - u).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_NEAR(s.multipliers[0], lam, 1e-6);
  EXPECT_GE(s.s, s.u.squaredNorm() - 1e-9);
  EXPECT_NEAR(s.objective, 0.5 * (s.u + r.grad_f).squaredNorm(), 1e-12);
  // The grid search agrees to its resolution.
  const Vector g = oracle::grid_direction(r, -1.5, 1.5, 2001);
  EXPECT_LE((g - s.u).lpNorm<Eigen::Infinity>(), 3e-3);
}

TEST(SolveDirection, InteriorPointConstraintInactive) {
  const auto s = solve_direction(ball_request({0, 0}, 0.5));
  ASSERT_EQ(s.status, DirectionStatus::optimal);
  EXPECT_NEAR(s.u[0], 0.0, 1e-8);
  EXPECT_NEAR(s.u[1], -1.0, 1e-8);
  EXPECT_NEAR(s.multipliers[0], 0.0, 1e-8);
}

TEST(SolveDirection, StationaryPointGivesZero) {
  const auto s = solve_direction(stationary_request());
  ASSERT_EQ(s.status, DirectionStatus::optimal);
  EXPECT_NEAR(s.u[0], 0.0, 1e-8);
  EXPECT_NEAR(s.multipliers[0], 1.0, 1e-6);
}

TEST(SolveDirectionQp, BallBoundaryIsTangent) {
  const auto r = ball_request({1, 0}, 0.5);
  const auto s = solve_direction_qp(r);
  ASSERT_EQ(s.status, DirectionStatus::optimal);
  EXPECT_NEAR(s.u[0], 0.0, 1e-8);
  EXPECT_NEAR(s.u[1], -1.0, 1e-8);
  EXPECT_LE(std::abs(r.g_gradients.row(0).dot(s.u)), 1e-8);
  EXPECT_EQ(s.s, s.u.squaredNorm());
}

TEST(SolveDirectionQp, InteriorAndStationary) {
  auto s = solve_direction_qp(ball_request({0, 0}, 0.5));
  ASSERT_EQ(s.status, DirectionStatus::optimal);
  EXPECT_NEAR(s.u[1], -1.0, 1e-8);
  EXPECT_NEAR(s.u[0], 0.0, 1e-8);
  s = solve_direction_qp(stationary_request());
  ASSERT_EQ(s.status, DirectionStatus::optimal);
  EXPECT_NEAR(s.u[0], 0.0, 1e-8);
}

TEST(VerifyDirectionKkt, Examples) {
  const auto r = ball_request({1, 0}, 0.5);
  DirectionSolution sol;
  double lam = 0.0;
  sol.u = oracle::ball_boundary_direction(0.5, &lam);
  sol.multipliers = Vector::Constant(1, lam);
  EXPECT_LE(verify_direction_kkt(r, sol), 1e-6);
  sol.multipliers[0] += 0.1;
  EXPECT_GE(verify_direction_kkt(r, sol), 0.05);

  DirectionRequest free;
  free.grad_f = Vector::Zero(2);
  free.g_values = Vector::Constant(1, -1.0);
  free.g_gradients = Matrix::Zero(1, 2);
  free.weights = Vector::Constant(1, 1.0);
  free.active = {0};
  DirectionSolution zero;
  zero.u = Vector::Zero(2);
  zero.multipliers = Vector::Zero(1);
  EXPECT_EQ(verify_direction_kkt(free, zero), 0.0);
}

TEST(SolveDirection, InwardTiltAgainstQpTangency) {
  const auto r = ball_request({1, 0}, 0.5);
  const auto qp = solve_direction_qp(r);
  const auto qc = solve_direction(r);
  const Vector a = r.g_gradients.row(0).transpose();
  EXPECT_LE(std::abs(a.dot(qp.u)), 1e-8);
  EXPECT_LE(a.dot(qc.u), -0.5 * qc.u.squaredNorm() + 1e-8);
}

TEST(SolveDirection, AngleGrowsWithWeight) {
  // Reference angles from the brute-force grid: strictly increasing in w.
  std::vector<double> grid_angles, solver_angles;
  for (double w : {0.1, 0.5, 2.0}) {
    const auto r = ball_request({1, 0}, w);
    const Vector g = oracle::grid_direction(r, -1.5, 1.5, 2001);
    const auto s = solve_direction(r);
    ASSERT_EQ(s.status, DirectionStatus::optimal);
    grid_angles.push_back(angle(g, -r.grad_f));
    solver_angles.push_back(angle(s.u, -r.grad_f));
    EXPECT_NEAR(solver_angles.back(), grid_angles.back(), 5e-3);
  }
  EXPECT_LT(grid_angles[0], grid_angles[1]);
  EXPECT_LT(grid_angles[1], grid_angles[2]);
  EXPECT_LT(solver_angles[0], solver_angles[1]);
  EXPECT_LT(solver_angles[1], solver_angles[2]);
}

TEST(SolveDirection, RandomInstancesMatchBarrierOracle) {
  std::mt19937_64 rng(20241019);
  std::uniform_int_distribution<int> dn(1, 10), dk(0, 20);
  for (int t = 0; t < 100; ++t) {
    const auto r = oracle::random_request(rng, dn(rng), dk(rng));
    const auto s = solve_direction(r);
    ASSERT_EQ(s.status, DirectionStatus::optimal) << "instance " << t;
    const Vector u = oracle::barrier_qcqp(r);
    EXPECT_LE((u - s.u).lpNorm<Eigen::Infinity>(), 1e-6) << "instance " << t;

    // Descent inequality and constraint satisfaction.
    EXPECT_LE(r.grad_f.dot(s.u), -s.u.squaredNorm() + 1e-8);
    if (r.rows() > 0) {
      const Vector c = r.g_gradients * s.u + r.alpha * r.g_values + r.weights * s.u.squaredNorm();
      EXPECT_LE(c.maxCoeff(), 1e-8);
      EXPECT_GE(s.multipliers.minCoeff(), 0.0);
    }
    EXPECT_LE(verify_direction_kkt(r, s), 1e-6 * std::max(1.0, r.grad_f.lpNorm<Eigen::Infinity>()));
  }
}

TEST(SolveDirectionQp, RandomInstancesSatisfyLinearRows) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dn(1, 10), dk(1, 20);
  for (int t = 0; t < 50; ++t) {
    const auto r = oracle::random_request(rng, dn(rng), dk(rng));
    const auto s = solve_direction_qp(r);
    ASSERT_EQ(s.status, DirectionStatus::optimal);
    const Vector c = r.g_gradients * s.u + r.alpha * r.g_values;
    EXPECT_LE(c.maxCoeff(), 1e-8);
    EXPECT_LE(r.grad_f.dot(s.u), -s.u.squaredNorm() + 1e-8);
  }
}
