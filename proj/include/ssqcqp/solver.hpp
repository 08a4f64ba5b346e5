#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssqcqp/direction.hpp"
#include "ssqcqp/linesearch.hpp"
#include "ssqcqp/problem.hpp"

namespace ssqcqp {

struct SolverConfig {
  double alpha = 1.0;
  double gamma = 0.1;
  double w_floor = 1e-3;
  double epsilon = 1e-5;  // stop when ‖u‖₂ ≤ epsilon
  double delta = 0.5;     // active-set variant only
  double q_percent = 5.0; // active-set variant only
  int max_iter = 1000;
  int max_halvings = 60;
  double feas_tol = 0.0;
  bool adaptive_w = true;

  double tol_sub = 1e-9;
  double tol_kkt = 1e-6;
  int subproblem_retries = 3;

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
    if (!(alpha > 0.0)) fail("alpha must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
    if (!(w_floor > 0.0)) fail("w_floor must be positive");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (!(delta > 0.0)) fail("delta must be positive");
    if (!(q_percent >= 0.0 && q_percent <= 100.0)) fail("q_percent must lie in [0, 100]");
    if (max_iter < 0) fail("max_iter must be nonnegative");
    if (max_halvings < 0) fail("max_halvings must be nonnegative");
    if (!(feas_tol >= 0.0)) fail("feas_tol must be nonnegative");
    if (!(tol_sub > 0.0) || !(tol_kkt > 0.0)) fail("subproblem tolerances must be positive");
    if (subproblem_retries < 0) fail("subproblem_retries must be nonnegative");
  }
};

struct TraceRecord {
  Index k = 0;
  double f = 0.0;
  double max_g = 0.0;
  double u_norm_sq = 0.0;
  double step = 0.0;  // 0 on the terminating record
  Index active_count = 0;
  int halvings = 0;
  std::int64_t wall_ns = 0;
  std::int64_t subproblem_ns = 0;
};

enum class SolveStatus { converged, max_iter, line_search_failure, subproblem_failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iter:
      return "max_iter";
    case SolveStatus::line_search_failure:
      return "line_search_failure";
    case SolveStatus::subproblem_failure:
      return "subproblem_failure";
  }
  return "unknown";
}

struct SolveResult {
  Point x_final;
  SolveStatus status = SolveStatus::max_iter;
  std::vector<TraceRecord> trace;
  Vector multipliers;  // length m, zero off the active set
  KktResidual final_kkt;
  Vector weights;      // final wᵢ
  std::string message;
};

class InfeasibleStartError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A_δ ∪ T_q: every row with gᵢ ≥ −δ plus the ⌈q·m/100⌉ largest values
/// (ties go to the lower index). Returned in increasing order.
inline std::vector<Index> select_active_set(const Vector& g_values, double delta,
                                            double q_percent) {
  const Index m = g_values.size();
  std::vector<char> take(static_cast<std::size_t>(m), 0);
  for (Index i = 0; i < m; ++i)
    if (g_values[i] >= -delta) take[static_cast<std::size_t>(i)] = 1;

  const double raw = q_percent * static_cast<double>(m) / 100.0;
  const auto top = std::min<Index>(m, static_cast<Index>(std::ceil(raw - 1e-9)));
  if (top > 0) {
    std::vector<Index> order = all_indices(m);
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return g_values[a] > g_values[b]; });
    for (Index j = 0; j < top; ++j) take[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] = 1;
  }
  std::vector<Index> out;
  for (Index i = 0; i < m; ++i)
    if (take[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

/// wᵢ' = max{wᵢ, ‖∇gᵢ(x_next) − ∇gᵢ(x_prev)‖₂ / (2‖x_next − x_prev‖₂)}.
inline Vector update_w(const Vector& w, const Point& x_prev, const Point& x_next,
                       const Matrix& grads_prev, const Matrix& grads_next) {
  const double dx = (x_next - x_prev).norm();
  if (!(dx > 0.0)) throw std::invalid_argument("update_w: zero displacement");
  if (grads_prev.rows() != w.size() || grads_next.rows() != w.size())
    throw std::invalid_argument("update_w: gradient rows must match weights");
  Vector out = w;
  for (Index i = 0; i < w.size(); ++i)
    out[i] = std::max(w[i], (grads_next.row(i) - grads_prev.row(i)).norm() / (2.0 * dx));
  return out;
}

enum class DirectionKind { qcqp, linearized_qp };

namespace detail {

inline std::int64_t elapsed_ns(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now() - since)
      .count();
}

struct RowSelector {
  bool all_rows = true;
  double delta = 0.0;
  double q_percent = 0.0;

  std::vector<Index> operator()(const Vector& g) const {
    return all_rows ? all_indices(g.size()) : select_active_set(g, delta, q_percent);
  }
};

inline DirectionRequest request_for_rows(const ObjectiveEval& obj, const Vector& g_all,
                                         const Matrix& jac_all, const std::vector<Index>& rows,
                                         double alpha, const Vector& w) {
  const auto k = static_cast<Index>(rows.size());
  DirectionRequest req;
  req.grad_f = obj.gradient;
  req.g_values.resize(k);
  req.g_gradients.resize(k, obj.gradient.size());
  req.weights.resize(k);
  for (Index j = 0; j < k; ++j) {
    const Index i = rows[static_cast<std::size_t>(j)];
    req.g_values[j] = g_all[i];
    req.g_gradients.row(j) = jac_all.row(i);
    req.weights[j] = w[i];
  }
  req.active = rows;
  req.alpha = alpha;
  return req;
}

inline SolveResult run(const Problem& p, const Point& x0, const SolverConfig& cfg,
                       const RowSelector& selector, DirectionKind kind) {
  p.validate();
  cfg.validate();
  detail::require_dimension(p, x0);
  const auto start_report = check_feasibility(p, x0, cfg.feas_tol);
  if (!start_report.feasible)
    throw InfeasibleStartError(p.name + ": initial point violates a constraint by " +
                               std::to_string(start_report.max_violation));

  SolveResult res;
  res.weights = Vector::Constant(p.m, cfg.w_floor);
  res.multipliers = Vector::Zero(p.m);
  Vector& w = res.weights;

  Point x = x0;
  ObjectiveEval obj = eval_objective(p, x);
  ConstraintEval cons = eval_constraints(p, x);

  for (Index k = 0;; ++k) {
    const auto iter_start = std::chrono::steady_clock::now();
    const std::vector<Index> rows = selector(cons.values);

    const auto sub_start = std::chrono::steady_clock::now();
    DirectionSolution dir;
    for (int attempt = 0;; ++attempt) {
      const DirectionRequest req =
          request_for_rows(obj, cons.values, cons.gradients, rows, cfg.alpha, w);
      dir = kind == DirectionKind::qcqp ? solve_direction(req, cfg.tol_sub, cfg.tol_kkt)
                                        : solve_direction_qp(req, cfg.tol_sub, cfg.tol_kkt);
      if (dir.status == DirectionStatus::optimal || attempt >= cfg.subproblem_retries) break;
      w *= 2.0;
    }
    const std::int64_t sub_ns = elapsed_ns(sub_start);

    TraceRecord rec;
    rec.k = k;
    rec.f = obj.value;
    rec.max_g = max_value(cons.values);
    rec.active_count = static_cast<Index>(rows.size());
    rec.subproblem_ns = sub_ns;

    if (dir.status != DirectionStatus::optimal) {
      res.status = SolveStatus::subproblem_failure;
      res.message = "direction subproblem failed after " +
                    std::to_string(cfg.subproblem_retries) + " weight doublings";
      rec.wall_ns = elapsed_ns(iter_start);
      res.trace.push_back(rec);
      break;
    }

    rec.u_norm_sq = dir.u.squaredNorm();
    res.multipliers.setZero();
    for (std::size_t j = 0; j < rows.size(); ++j)
      res.multipliers[rows[j]] = dir.multipliers[static_cast<Index>(j)];

    if (std::sqrt(rec.u_norm_sq) <= cfg.epsilon) {
      res.status = SolveStatus::converged;
      rec.wall_ns = elapsed_ns(iter_start);
      res.trace.push_back(rec);
      break;
    }
    if (k >= cfg.max_iter) {
      res.status = SolveStatus::max_iter;
      rec.wall_ns = elapsed_ns(iter_start);
      res.trace.push_back(rec);
      break;
    }

    const StepResult step = backtrack(p, x, dir.u, obj.gradient, cfg.gamma, cfg.max_halvings,
                                      cfg.feas_tol, obj.value);
    rec.halvings = step.halvings;
    if (!step.accepted) {
      res.status = SolveStatus::line_search_failure;
      res.message = "no acceptable step after " + std::to_string(cfg.max_halvings) +
                    " halvings (‖u‖² = " + std::to_string(rec.u_norm_sq) + ")";
      rec.wall_ns = elapsed_ns(iter_start);
      res.trace.push_back(rec);
      break;
    }
    rec.step = step.t;

    ObjectiveEval next_obj = eval_objective(p, step.trial);
    ConstraintEval next_cons = eval_constraints(p, step.trial);
    if (cfg.adaptive_w && step.trial != x)
      w = update_w(w, x, step.trial, cons.gradients, next_cons.gradients);

    x = step.trial;
    obj = std::move(next_obj);
    cons = std::move(next_cons);
    rec.wall_ns = elapsed_ns(iter_start);
    res.trace.push_back(rec);
  }

  res.x_final = x;
  res.final_kkt = kkt_residual(p, x, res.multipliers);
  return res;
}

}  // namespace detail

/// Safe sequential QCQP over all m constraints. Every iterate is feasible and
/// every accepted step satisfies the Armijo condition.
inline SolveResult ss_qcqp(const Problem& p, const Point& x0, const SolverConfig& cfg = {}) {
  return detail::run(p, x0, cfg, detail::RowSelector{}, DirectionKind::qcqp);
}

/// Active-set variant: the direction subproblem keeps only A_δ(x) ∪ T_q(x);
/// the line search still checks all m constraints.
inline SolveResult ss_qcqp_as(const Problem& p, const Point& x0, const SolverConfig& cfg = {}) {
  return detail::run(p, x0, cfg, detail::RowSelector{false, cfg.delta, cfg.q_percent},
                     DirectionKind::qcqp);
}

/// The same outer loop driven by the linearized (QP) safe-gradient direction.
/// Near curved boundaries the direction can be tangent and the step collapse.
inline SolveResult safe_gradient_qp(const Problem& p, const Point& x0,
                                    const SolverConfig& cfg = {}) {
  return detail::run(p, x0, cfg, detail::RowSelector{}, DirectionKind::linearized_qp);
}

}  // namespace ssqcqp
