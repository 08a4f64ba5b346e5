#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ssqcqp/ssqcqp.hpp"

using namespace ssqcqp;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

// f(x) = x, g(x) = −x on ℝ.
Problem scalar_problem() {
  return make_problem("scalar", 1,
                      {[](const Vector& x) { return x[0]; },
                       [](const Vector&) { return Vector::Ones(1).eval(); }},
                      {{[](const Vector& x) { return -x[0]; },
                        [](const Vector&) { return Vector::Constant(1, -1.0).eval(); }}});
}

Problem sq_norm_problem() {
  return make_problem("sq", 2,
                      {[](const Vector& x) { return x.squaredNorm(); },
                       [](const Vector& x) { return Vector(2.0 * x); }},
                      {});
}

}  // namespace

TEST(EvalObjective, LinearObjective) {
  const auto b = ball_linear();
  const auto e = eval_objective(b.problem, vec({1, 0}));
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.gradient, vec({0, 1}));
}

TEST(EvalObjective, SquaredNorm) {
  const auto e = eval_objective(sq_norm_problem(), vec({1, 2}));
  EXPECT_EQ(e.value, 5.0);
  EXPECT_EQ(e.gradient, vec({2, 4}));
}

TEST(EvalObjective, DimensionMismatchThrows) {
  EXPECT_THROW(eval_objective(ball_linear().problem, vec({1, 2, 3})), std::invalid_argument);
}

TEST(EvalObjective, NonFiniteInputOrOutputThrows) {
  const auto b = ball_linear();
  EXPECT_THROW(eval_objective(b.problem, vec({std::nan(""), 0})), NonFiniteError);
  const Problem p = make_problem(
      "bad", 1,
      {[](const Vector&) { return std::numeric_limits<double>::infinity(); },
       [](const Vector&) { return Vector::Zero(1).eval(); }},
      {});
  EXPECT_THROW(eval_objective(p, vec({0})), NonFiniteError);
}

TEST(EvalConstraints, BallBoundaryAndCenter) {
  const auto b = ball_linear();
  const std::vector<Index> rows{0};
  auto e = eval_constraints(b.problem, vec({1, 0}), rows);
  EXPECT_EQ(e.values[0], 0.0);
  EXPECT_EQ(e.gradients.row(0), Eigen::RowVector2d(2, 0));
  e = eval_constraints(b.problem, vec({0, 0}), rows);
  EXPECT_EQ(e.values[0], -1.0);
  EXPECT_EQ(e.gradients.row(0), Eigen::RowVector2d(0, 0));
}

TEST(EvalConstraints, SubsetOrderIsRespected) {
  const auto b = box_qp();
  const std::vector<Index> rows{3, 0};
  const auto e = eval_constraints(b.problem, vec({0.5, -0.25}), rows);
  ASSERT_EQ(e.values.size(), 2);
  EXPECT_DOUBLE_EQ(e.values[0], 0.25 - 1.0);  // −x₂ − 1
  EXPECT_DOUBLE_EQ(e.values[1], 0.5 - 1.0);   // x₁ − 1
  EXPECT_EQ(e.gradients.row(0), Eigen::RowVector2d(0, -1));
}

TEST(EvalConstraints, InvalidRowThrows) {
  const std::vector<Index> rows{1};
  EXPECT_THROW(eval_constraints(ball_linear().problem, vec({0, 0}), rows), std::invalid_argument);
}

TEST(EvalConstraints, ObstacleClearanceAtFirstStart) {
  // One agent at (−2, −2) against the unit obstacle at (−1, −1): 1 − 2 = −1.
  const auto params = make_navigation_params(1, 1);
  const Problem p = make_navigation_problem(params);
  const Vector U = navigation_hold_inputs(params);
  const Index first_obstacle = params.num_input_bounds() + params.num_state_bounds();
  const std::vector<Index> rows{first_obstacle};
  EXPECT_NEAR(eval_constraints(p, U, rows).values[0], -1.0, 1e-12);
}

TEST(CheckFeasibility, BallExamples) {
  const auto b = ball_linear();
  auto r = check_feasibility(b.problem, vec({0, 0}), 0.0);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.max_violation, -1.0);
  r = check_feasibility(b.problem, vec({2, 0}), 0.0);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.max_violation, 3.0);
  EXPECT_EQ(r.values.size(), 1);
}

TEST(CheckFeasibility, NavigationHoldInputsFeasible) {
  const auto b = navigation();
  const auto r = check_feasibility(b.problem, b.start, 0.0);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.values.size(), 2320);
}

TEST(CheckFeasibility, MonotoneInTolerance) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(-2.0, 2.0), tol(0.0, 2.0);
  for (const auto& b : analytic_suite())
    for (int t = 0; t < 200; ++t) {
      const Vector x = Vector::NullaryExpr(2, [&] { return coord(rng); });
      const double t1 = tol(rng);
      const double t2 = t1 + tol(rng);
      if (check_feasibility(b.problem, x, t1).feasible) {
        EXPECT_TRUE(check_feasibility(b.problem, x, t2).feasible);
      }
    }
}

TEST(KktResidualTest, ExactKktPairIsZero) {
  const auto r = kkt_residual(scalar_problem(), vec({0}), vec({1}));
  EXPECT_EQ(r.stationarity, 0.0);
  EXPECT_EQ(r.primal, 0.0);
  EXPECT_EQ(r.dual, 0.0);
  EXPECT_EQ(r.complementarity, 0.0);
}

TEST(KktResidualTest, NonStationaryPoint) {
  const auto r = kkt_residual(scalar_problem(), vec({1}), vec({0}));
  EXPECT_EQ(r.stationarity, 1.0);
  EXPECT_EQ(r.primal, 0.0);
  EXPECT_EQ(r.dual, 0.0);
  EXPECT_EQ(r.complementarity, 0.0);
}

TEST(KktResidualTest, BallLinearOptimum) {
  const auto r = kkt_residual(ball_linear().problem, vec({0, -1}), vec({0.5}));
  EXPECT_EQ(r.max(), 0.0);
}

TEST(KktResidualTest, NegativeMultiplierAndViolation) {
  const auto r = kkt_residual(scalar_problem(), vec({-2}), vec({-0.5}));
  EXPECT_EQ(r.primal, 2.0);
  EXPECT_EQ(r.dual, 0.5);
  EXPECT_EQ(r.complementarity, 1.0);
  EXPECT_THROW(kkt_residual(scalar_problem(), vec({0}), vec({1, 2})), std::invalid_argument);
}

TEST(FdGradientCheck, LinearAndQuadratic) {
  EXPECT_LE(fd_gradient_check(scalar_problem(), vec({0.3}), 1e-6), 1e-10);
  EXPECT_LE(fd_gradient_check(sq_norm_problem(), vec({1, 1}), 1e-6), 1e-8);
  EXPECT_THROW(fd_gradient_check(scalar_problem(), vec({0}), 0.0), std::invalid_argument);
}

TEST(FdGradientCheck, DetectsWrongGradient) {
  const Problem p = make_problem("wrong", 1,
                                 {[](const Vector& x) { return x[0] * x[0]; },
                                  [](const Vector& x) { return Vector(x); }},
                                 {});
  EXPECT_GT(fd_gradient_check(p, vec({1}), 1e-6), 0.5);
}

TEST(FdGradientCheck, RegisteredProblemsAtRandomPoints) {
  std::mt19937_64 rng(11);
  RegistryOptions small;
  small.agents = 2;
  small.horizon = 8;
  for (const auto& key : registered_problems()) {
    const auto b = find_problem(key, small);
    ASSERT_TRUE(b);
    for (int t = 0; t < 100; ++t) {
      const Vector x = oracle::random_feasible_point(*b, rng, key == "nav" ? 0.3 : 0.5);
      EXPECT_LE(fd_gradient_check(b->problem, x, 1e-6), 1e-5) << key;
    }
  }
}

TEST(ProblemValidate, RejectsBadMetadata) {
  Problem p = ball_linear().problem;
  p.lipschitz_g = {-1.0};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.lipschitz_g = {1.0, 2.0};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = ball_linear().problem;
  p.lipschitz_f = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}
