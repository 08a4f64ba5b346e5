#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ssqcqp/problem.hpp"

namespace ssqcqp {

/// A registered problem together with a feasible starting point and, where
/// known, its optimal value.
struct Benchmark {
  Problem problem;
  Point start;
  std::optional<double> optimal_value;
  std::optional<Point> optimal_point;
};

// ---------------------------------------------------------------------------
// Discrete algebraic Riccati equation

struct DareInputs {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
};

/// Residual AᵀPA − P − AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q.
inline Matrix dare_residual(const DareInputs& d, const Matrix& P) {
  const Matrix BtPA = d.B.transpose() * P * d.A;
  const Matrix S = d.R + d.B.transpose() * P * d.B;
  return d.A.transpose() * P * d.A - P - BtPA.transpose() * S.ldlt().solve(BtPA) + d.Q;
}

/// Fixed-point (value) iteration P ← Q + AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA from
/// P₀ = Q until ‖P_{k+1} − P_k‖∞ ≤ tol.
inline Matrix solve_dare(const DareInputs& d, double tol = 1e-13, int max_iter = 10000) {
  const Index nx = d.A.rows();
  if (d.A.cols() != nx || d.B.rows() != nx || d.Q.rows() != nx || d.Q.cols() != nx ||
      d.R.rows() != d.B.cols() || d.R.cols() != d.B.cols())
    throw std::invalid_argument("solve_dare: inconsistent dimensions");
  Matrix P = d.Q;
  for (int k = 0; k < max_iter; ++k) {
    const Matrix BtPA = d.B.transpose() * P * d.A;
    const Matrix S = d.R + d.B.transpose() * P * d.B;
    Matrix next = d.Q + d.A.transpose() * P * d.A - BtPA.transpose() * S.ldlt().solve(BtPA);
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) break;
    const double diff = (next - P).lpNorm<Eigen::Infinity>();
    P = std::move(next);
    if (diff <= tol) return P;
  }
  throw std::runtime_error("solve_dare: no convergence within iteration limit");
}

// ---------------------------------------------------------------------------
// Multi-agent unicycle navigation

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct Obstacle {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
};

struct NavigationParams {
  int agents = 4;
  int horizon = 40;
  double T = 0.03;
  double dx_shift = 0.03;
  std::vector<Pose> starts;
  std::vector<Pose> goals;
  std::array<double, 2> v_bounds{-5.0, 12.0};
  double w_max = 1.5 * std::numbers::pi;
  double pos_max = 3.7;
  double theta_max = std::numbers::pi;
  std::vector<Obstacle> obstacles;
  double collision_radius = 0.25;
  double control_weight = 0.01;
  std::array<double, 2> input_ref{1.0, 0.0};
  std::vector<Matrix> terminal_P;  // filled by make_navigation_params when empty

  Index num_variables() const { return 2 * static_cast<Index>(agents) * horizon; }
  Index num_input_bounds() const { return 4 * static_cast<Index>(agents) * horizon; }
  Index num_state_bounds() const { return 6 * static_cast<Index>(agents) * horizon; }
  Index num_obstacle_constraints() const {
    return static_cast<Index>(obstacles.size()) * agents * horizon;
  }
  Index num_pairs() const { return static_cast<Index>(agents) * (agents - 1) / 2; }
  Index num_collision_constraints() const { return num_pairs() * horizon; }
  Index num_constraints() const {
    return num_input_bounds() + num_state_bounds() + num_obstacle_constraints() +
           num_collision_constraints();
  }

  void validate() const {
    auto fail = [](const std::string& s) { throw std::invalid_argument("navigation: " + s); };
    if (agents < 1) fail("need at least one agent");
    if (horizon < 1) fail("horizon must be positive");
    if (static_cast<int>(starts.size()) != agents || static_cast<int>(goals.size()) != agents)
      fail("one start and one goal per agent");
    if (static_cast<int>(terminal_P.size()) != agents) fail("one terminal weight per agent");
    for (const auto& P : terminal_P) {
      if (P.rows() != 3 || P.cols() != 3) fail("terminal weight must be 3x3");
      if ((P - P.transpose()).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + P.norm()))
        fail("terminal weight must be symmetric");
      if (Eigen::LLT<Matrix>(P).info() != Eigen::Success)
        fail("terminal weight must be positive definite");
    }
    for (const auto& o : obstacles)
      if (!(o.radius > 0.0)) fail("obstacle radii must be positive");
    if (!(collision_radius > 0.0)) fail("collision radius must be positive");
    if (!(T > 0.0)) fail("sampling time must be positive");
  }
};

/// State and input Jacobians of the unicycle step about (pose, v).
inline DareInputs unicycle_linearization(const Pose& pose, double v, double T) {
  DareInputs d;
  d.A = Matrix::Identity(3, 3);
  d.A(0, 2) = -v * T * std::sin(pose.theta);
  d.A(1, 2) = v * T * std::cos(pose.theta);
  d.B = Matrix::Zero(3, 2);
  d.B(0, 0) = T * std::cos(pose.theta);
  d.B(1, 0) = T * std::sin(pose.theta);
  d.B(2, 1) = T;
  return d;
}

/// The four-vehicle scenario; `agents` selects the first k vehicles and
/// terminal weights come from the DARE linearized at each goal (Q = I, R = 0.01 I).
inline NavigationParams make_navigation_params(int agents = 4, int horizon = 40,
                                               double collision_radius = 0.25) {
  if (agents < 1 || agents > 4) throw std::invalid_argument("navigation: agents must be 1..4");
  NavigationParams p;
  p.agents = agents;
  p.horizon = horizon;
  p.collision_radius = collision_radius;
  const std::array<Pose, 4> starts{{{-2, -2, 0}, {-3, -1, 0}, {-3, -3, 0}, {-1, -3, 0}}};
  const std::array<Pose, 4> goals{{{2, 3, 0}, {3, 2, 0}, {2, 1, 0}, {1, 2, 0}}};
  p.starts.assign(starts.begin(), starts.begin() + agents);
  p.goals.assign(goals.begin(), goals.begin() + agents);
  p.obstacles = {{-1.0, -1.0, 1.0}, {1.0, 0.0, 0.5}, {0.0, 1.0, 0.5}};
  for (int i = 0; i < agents; ++i) {
    DareInputs d = unicycle_linearization(p.goals[static_cast<std::size_t>(i)],
                                          p.input_ref[0], p.T);
    d.Q = Matrix::Identity(3, 3);
    d.R = 0.01 * Matrix::Identity(2, 2);
    p.terminal_P.push_back(solve_dare(d));
  }
  p.validate();
  return p;
}

namespace detail::nav {

/// Offset of U_i(t) (t = 0..N-1) in the decision vector.
inline Index input_offset(const NavigationParams& p, Index t, Index i) {
  return (t * p.agents + i) * 2;
}
/// Offset of X_i(t) (t = 1..N) in the stacked state vector.
inline Index state_offset(const NavigationParams& p, Index t, Index i) {
  return ((t - 1) * p.agents + i) * 3;
}

/// Agents (a, b), a < b, of the pair with lexicographic rank `pair`.
inline std::pair<Index, Index> pair_agents(const NavigationParams& p, Index pair) {
  Index a = 0;
  while (pair >= p.agents - 1 - a) {
    pair -= p.agents - 1 - a;
    ++a;
  }
  return {a, a + 1 + pair};
}

inline std::array<double, 3> pose_array(const Pose& q) { return {q.x, q.y, q.theta}; }

/// States X_i(t) for t = 0..N as rows of a (N+1)×3 matrix per agent.
inline std::vector<Matrix> rollout(const NavigationParams& p, const Vector& U) {
  std::vector<Matrix> traj;
  traj.reserve(static_cast<std::size_t>(p.agents));
  for (Index i = 0; i < p.agents; ++i) {
    Matrix X(p.horizon + 1, 3);
    const Pose& s = p.starts[static_cast<std::size_t>(i)];
    X.row(0) << s.x, s.y, s.theta;
    for (Index t = 0; t < p.horizon; ++t) {
      const Index o = input_offset(p, t, i);
      const double v = U[o];
      const double w = U[o + 1];
      const double th = X(t, 2);
      X(t + 1, 0) = X(t, 0) + v * p.T * std::cos(th) - p.dx_shift;
      X(t + 1, 1) = X(t, 1) + v * p.T * std::sin(th);
      X(t + 1, 2) = th + w * p.T;
    }
    traj.push_back(std::move(X));
  }
  return traj;
}

/// Pulls an adjoint on X_i(t) back through the dynamics into the gradient
/// with respect to U_i(0..t-1).
inline void backpropagate(const NavigationParams& p, const std::vector<Matrix>& traj,
                          const Vector& U, Index i, Index t, Eigen::Vector3d adj,
                          Matrix& jac, Index row) {
  const Matrix& X = traj[static_cast<std::size_t>(i)];
  for (Index s = t - 1; s >= 0; --s) {
    const Index o = input_offset(p, s, i);
    const double v = U[o];
    const double th = X(s, 2);
    const double c = std::cos(th);
    const double sn = std::sin(th);
    jac(row, o) += adj[0] * p.T * c + adj[1] * p.T * sn;
    jac(row, o + 1) += adj[2] * p.T;
    adj[2] += -adj[0] * v * p.T * sn + adj[1] * v * p.T * c;
  }
}

}  // namespace detail::nav

/// Stacked states X(1..N), ordered by time then agent then (x, y, θ).
inline Vector unroll_dynamics(const NavigationParams& p, const Vector& U) {
  if (U.size() != p.num_variables())
    throw std::invalid_argument("unroll_dynamics: expected " +
                                std::to_string(p.num_variables()) + " inputs");
  const auto traj = detail::nav::rollout(p, U);
  Vector X(3 * static_cast<Index>(p.agents) * p.horizon);
  for (Index t = 1; t <= p.horizon; ++t)
    for (Index i = 0; i < p.agents; ++i)
      X.segment(detail::nav::state_offset(p, t, i), 3) =
          traj[static_cast<std::size_t>(i)].row(t).transpose();
  return X;
}

/// Inputs v = 1, w = 0 for every agent and step (vehicles hold their starts).
inline Vector navigation_hold_inputs(const NavigationParams& p) {
  Vector U(p.num_variables());
  for (Index k = 0; k < U.size(); k += 2) {
    U[k] = p.input_ref[0];
    U[k + 1] = p.input_ref[1];
  }
  return U;
}

/// Pairwise distances ‖pos_i(t) − pos_j(t)‖ for t = 1..N, one row per pair
/// (i < j, lexicographic), one column per time step.
inline Matrix pairwise_distances(const NavigationParams& p, const Vector& U) {
  const auto traj = detail::nav::rollout(p, U);
  Matrix D(p.num_pairs(), p.horizon);
  Index r = 0;
  for (Index i = 0; i < p.agents; ++i)
    for (Index j = i + 1; j < p.agents; ++j, ++r)
      for (Index t = 1; t <= p.horizon; ++t)
        D(r, t - 1) = (traj[static_cast<std::size_t>(i)].row(t).head(2) -
                       traj[static_cast<std::size_t>(j)].row(t).head(2))
                          .norm();
  return D;
}

/// Single-shooting formulation over the stacked inputs. Constraint rows, in
/// order: input bounds (v ≤ v_max, −v ≤ −v_min, w ≤ w_max, −w ≤ w_max per
/// agent and step), state bounds at t = 1..N (upper then lower for x, y, θ),
/// obstacle clearances rⱼ² − ‖pos − cⱼ‖², and pairwise separations
/// d_min² − ‖posᵢ − posⱼ‖².
inline Problem make_navigation_problem(const NavigationParams& params) {
  params.validate();
  using namespace detail::nav;
  Problem prob;
  prob.name = "nav";
  prob.n = params.num_variables();
  prob.m = params.num_constraints();

  prob.objective = [p = params](const Vector& U, Vector* grad) {
    const auto traj = rollout(p, U);
    double f = 0.0;
    if (grad) grad->setZero(U.size());
    for (Index i = 0; i < p.agents; ++i) {
      const Matrix& X = traj[static_cast<std::size_t>(i)];
      const auto goal = pose_array(p.goals[static_cast<std::size_t>(i)]);
      const Eigen::Vector3d xd(goal[0], goal[1], goal[2]);
      const Matrix& P = p.terminal_P[static_cast<std::size_t>(i)];
      Eigen::Vector3d adj = Eigen::Vector3d::Zero();
      {
        const Eigen::Vector3d e = X.row(p.horizon).transpose() - xd;
        const Eigen::Vector3d Pe = P * e;
        f += e.dot(Pe);
        adj = 2.0 * Pe;
      }
      for (Index t = p.horizon - 1; t >= 0; --t) {
        const Index o = input_offset(p, t, i);
        const double du = U[o] - p.input_ref[0];
        const double dw = U[o + 1] - p.input_ref[1];
        const Eigen::Vector3d e = X.row(t).transpose() - xd;
        f += e.squaredNorm() + p.control_weight * (du * du + dw * dw);
        if (!grad) continue;
        // adj holds ∂f/∂X(t+1); step it back through X(t+1) = F(X(t), U(t)).
        const double v = U[o];
        const double th = X(t, 2);
        const double c = std::cos(th);
        const double sn = std::sin(th);
        (*grad)[o] += adj[0] * p.T * c + adj[1] * p.T * sn + 2.0 * p.control_weight * du;
        (*grad)[o + 1] += adj[2] * p.T + 2.0 * p.control_weight * dw;
        adj[2] += -adj[0] * v * p.T * sn + adj[1] * v * p.T * c;
        adj += 2.0 * e;
      }
    }
    return f;
  };

  prob.constraints = [p = params](const Vector& U, std::span<const Index> rows, Vector& values,
                                  Matrix* jac) {
    const auto traj = rollout(p, U);
    const Index n_in = p.num_input_bounds();
    const Index n_st = p.num_state_bounds();
    const Index n_ob = p.num_obstacle_constraints();
    const auto n_obs = static_cast<Index>(p.obstacles.size());
    if (jac) jac->setZero();
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const auto r = static_cast<Index>(j);
      Index row = rows[j];
      if (row < n_in) {
        // (t, i, kind): kind 0: v − v_max, 1: v_min − v, 2: w − w_max, 3: −w − w_max
        const Index kind = row % 4;
        const Index ti = row / 4;
        const Index o = input_offset(p, ti / p.agents, ti % p.agents) + (kind >= 2 ? 1 : 0);
        double val = 0.0;
        double d = 0.0;
        switch (kind) {
          case 0: val = U[o] - p.v_bounds[1]; d = 1.0; break;
          case 1: val = p.v_bounds[0] - U[o]; d = -1.0; break;
          case 2: val = U[o] - p.w_max; d = 1.0; break;
          default: val = -U[o] - p.w_max; d = -1.0; break;
        }
        values[r] = val;
        if (jac) (*jac)(r, o) = d;
        continue;
      }
      row -= n_in;
      if (row < n_st) {
        // (t, i, coord, side): side 0 upper, 1 lower
        const Index side = row % 2;
        const Index coord = (row / 2) % 3;
        const Index ti = row / 6;
        const Index t = ti / p.agents + 1;
        const Index i = ti % p.agents;
        const double bound = coord == 2 ? p.theta_max : p.pos_max;
        const double sgn = side == 0 ? 1.0 : -1.0;
        values[r] = sgn * traj[static_cast<std::size_t>(i)](t, coord) - bound;
        if (jac) {
          Eigen::Vector3d adj = Eigen::Vector3d::Zero();
          adj[coord] = sgn;
          backpropagate(p, traj, U, i, t, adj, *jac, r);
        }
        continue;
      }
      row -= n_st;
      if (row < n_ob) {
        const Index k = row % n_obs;
        const Index ti = row / n_obs;
        const Index t = ti / p.agents + 1;
        const Index i = ti % p.agents;
        const Obstacle& ob = p.obstacles[static_cast<std::size_t>(k)];
        const Matrix& X = traj[static_cast<std::size_t>(i)];
        const double ex = X(t, 0) - ob.cx;
        const double ey = X(t, 1) - ob.cy;
        values[r] = ob.radius * ob.radius - (ex * ex + ey * ey);
        if (jac) backpropagate(p, traj, U, i, t, Eigen::Vector3d(-2.0 * ex, -2.0 * ey, 0.0), *jac, r);
        continue;
      }
      row -= n_ob;
      {
        const Index pair = row % p.num_pairs();
        const Index t = row / p.num_pairs() + 1;
        const auto [a, b] = pair_agents(p, pair);
        const Matrix& Xa = traj[static_cast<std::size_t>(a)];
        const Matrix& Xb = traj[static_cast<std::size_t>(b)];
        const double ex = Xa(t, 0) - Xb(t, 0);
        const double ey = Xa(t, 1) - Xb(t, 1);
        values[r] = p.collision_radius * p.collision_radius - (ex * ex + ey * ey);
        if (jac) {
          backpropagate(p, traj, U, a, t, Eigen::Vector3d(-2.0 * ex, -2.0 * ey, 0.0), *jac, r);
          backpropagate(p, traj, U, b, t, Eigen::Vector3d(2.0 * ex, 2.0 * ey, 0.0), *jac, r);
        }
      }
    }
  };
  return prob;
}

// ---------------------------------------------------------------------------
// Small problems with known optima

/// min x₂ s.t. ‖x‖² ≤ 1; optimum (0, −1), f* = −1.
inline Benchmark ball_linear() {
  Benchmark b;
  b.problem = make_problem(
      "ball-linear", 2,
      {[](const Vector& x) { return x[1]; },
       [](const Vector&) { return Vector(Eigen::Vector2d(0.0, 1.0)); }},
      {{[](const Vector& x) { return x.squaredNorm() - 1.0; },
        [](const Vector& x) { return Vector(2.0 * x); }}});
  b.problem.lipschitz_f = 1e-6;  // f is linear; floor keeps the constant positive
  b.problem.lipschitz_g = {2.0};
  b.start = Vector::Zero(2);
  b.optimal_value = -1.0;
  b.optimal_point = Vector(Eigen::Vector2d(0.0, -1.0));
  return b;
}

/// min ‖x − (2, 2)‖² over the box [−1, 1]²; optimum (1, 1), f* = 2.
inline Benchmark box_qp() {
  std::vector<ScalarFunction> cons;
  for (int j = 0; j < 2; ++j)
    for (double sgn : {1.0, -1.0})
      cons.push_back({[j, sgn](const Vector& x) { return sgn * x[j] - 1.0; },
                      [j, sgn](const Vector&) {
                        Vector g = Vector::Zero(2);
                        g[j] = sgn;
                        return g;
                      }});
  Benchmark b;
  b.problem = make_problem("box-qp", 2,
                           {[](const Vector& x) {
                              return (x - Vector::Constant(2, 2.0)).squaredNorm();
                            },
                            [](const Vector& x) {
                              return Vector(2.0 * (x - Vector::Constant(2, 2.0)));
                            }},
                           std::move(cons));
  b.problem.lipschitz_f = 2.0;
  b.problem.lipschitz_g = std::vector<double>(4, 1e-6);  // linear constraints
  b.start = Vector::Zero(2);
  b.optimal_value = 2.0;
  b.optimal_point = Vector(Eigen::Vector2d(1.0, 1.0));
  return b;
}

/// Rosenbrock's function on the disk ‖x‖² ≤ 2. The unconstrained minimizer
/// (1, 1) lies on the boundary, so f* = 0 there.
inline Benchmark rosenbrock_ball() {
  Benchmark b;
  b.problem = make_problem(
      "rosenbrock-ball", 2,
      {[](const Vector& x) {
         const double a = 1.0 - x[0];
         const double c = x[1] - x[0] * x[0];
         return a * a + 100.0 * c * c;
       },
       [](const Vector& x) {
         const double c = x[1] - x[0] * x[0];
         return Vector(Eigen::Vector2d(-2.0 * (1.0 - x[0]) - 400.0 * x[0] * c, 200.0 * c));
       }},
      {{[](const Vector& x) { return x.squaredNorm() - 2.0; },
        [](const Vector& x) { return Vector(2.0 * x); }}});
  b.start = Vector::Zero(2);
  b.optimal_value = 0.0;
  b.optimal_point = Vector(Eigen::Vector2d(1.0, 1.0));
  return b;
}

inline std::vector<Benchmark> analytic_suite() {
  return {ball_linear(), box_qp(), rosenbrock_ball()};
}

/// Navigation benchmark started from the hold inputs (v = 1, w = 0).
inline Benchmark navigation(int agents = 4, int horizon = 40, double collision_radius = 0.25) {
  const NavigationParams params = make_navigation_params(agents, horizon, collision_radius);
  Benchmark b;
  b.problem = make_navigation_problem(params);
  b.start = navigation_hold_inputs(params);
  return b;
}

struct RegistryOptions {
  int agents = 4;
  int horizon = 40;
  double collision_radius = 0.25;
};

inline const std::vector<std::string>& registered_problems() {
  static const std::vector<std::string> keys{"ball-linear", "box-qp", "rosenbrock-ball", "nav"};
  return keys;
}

/// Looks up `ball-linear`, `box-qp`, `rosenbrock-ball` or `nav`.
inline std::optional<Benchmark> find_problem(const std::string& key,
                                             const RegistryOptions& opts = {}) {
  if (key == "ball-linear") return ball_linear();
  if (key == "box-qp") return box_qp();
  if (key == "rosenbrock-ball") return rosenbrock_ball();
  if (key == "nav") return navigation(opts.agents, opts.horizon, opts.collision_radius);
  return std::nullopt;
}

}  // namespace ssqcqp
