#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssqcqp/direction.hpp"
#include "ssqcqp/problem.hpp"
#include "ssqcqp/solver.hpp"

namespace ssqcqp {

/// Nodes of a forward-Euler trajectory of ẋ = u(x).
struct FlowTrace {
  std::vector<double> times;
  std::vector<Point> states;
  std::vector<double> u_norm_sq;
  std::vector<double> f_values;
  std::vector<double> max_g;
  double integral_half_u_sq = 0.0;  // trapezoidal ½∫‖u‖²dτ
};

class FlowBreachError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FlowOptions {
  double breach_limit = 1e-6;  // abort once maxᵢ gᵢ exceeds this
};

/// Integrates ẋ = u(x) with xₖ₊₁ = xₖ + h·u(xₖ) on [0, T] using the full
/// constraint set and fixed weights wᵢ = cfg.w_floor (no line search).
inline FlowTrace integrate_flow(const Problem& p, const Point& x0, double h, double T,
                                const SolverConfig& cfg, const FlowOptions& opts = {}) {
  p.validate();
  cfg.validate();
  if (!(h > 0.0) || !(T > 0.0)) throw std::invalid_argument("flow: h and T must be positive");
  const auto start = check_feasibility(p, x0, cfg.feas_tol);
  if (!start.feasible) throw InfeasibleStartError(p.name + ": flow start is infeasible");

  const auto steps = static_cast<Index>(std::llround(T / h));
  const Vector w = Vector::Constant(p.m, cfg.w_floor);
  const std::vector<Index> rows = all_indices(p.m);

  FlowTrace tr;
  tr.times.reserve(static_cast<std::size_t>(steps + 1));
  tr.states.reserve(static_cast<std::size_t>(steps + 1));
  Point x = x0;
  for (Index k = 0; k <= steps; ++k) {
    const ObjectiveEval obj = eval_objective(p, x);
    const ConstraintEval cons = eval_constraints(p, x);
    const double mg = max_value(cons.values);
    if (mg > opts.breach_limit)
      throw FlowBreachError(p.name + ": flow left the feasible set (max g = " +
                            std::to_string(mg) + " at t = " + std::to_string(k * h) +
                            "); reduce h");
    const DirectionRequest req =
        detail::request_for_rows(obj, cons.values, cons.gradients, rows, cfg.alpha, w);
    const DirectionSolution dir = solve_direction(req, cfg.tol_sub, cfg.tol_kkt);
    if (dir.status != DirectionStatus::optimal)
      throw std::runtime_error(p.name + ": direction subproblem failed along the flow");

    tr.times.push_back(static_cast<double>(k) * h);
    tr.states.push_back(x);
    tr.u_norm_sq.push_back(dir.u.squaredNorm());
    tr.f_values.push_back(obj.value);
    tr.max_g.push_back(mg);
    if (k > 0)
      tr.integral_half_u_sq += 0.5 * h * 0.5 * (tr.u_norm_sq[tr.u_norm_sq.size() - 2] +
                                                 tr.u_norm_sq.back());
    x = x + h * dir.u;
  }
  return tr;
}

}  // namespace ssqcqp
