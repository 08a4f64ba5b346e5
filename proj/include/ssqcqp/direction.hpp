#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ssqcqp/cone_qp.hpp"
#include "ssqcqp/problem.hpp"

namespace ssqcqp {

/// Data of the direction subproblem at a point x, restricted to the rows in
/// `active`:
///
///   min_u ½‖u + ∇f‖²
///   s.t.  ∇gᵢᵀu + α gᵢ + wᵢ‖u‖² ≤ 0,   i ∈ active.
struct DirectionRequest {
  Vector grad_f;
  Vector g_values;          // one per active row
  Matrix g_gradients;       // |active| × n
  std::vector<Index> active;
  double alpha = 1.0;
  Vector weights;           // one per active row

  Index n() const { return grad_f.size(); }
  Index rows() const { return g_values.size(); }

  void validate() const {
    const Index k = g_values.size();
    if (g_gradients.rows() != k || g_gradients.cols() != grad_f.size() ||
        weights.size() != k || static_cast<Index>(active.size()) != k)
      throw std::invalid_argument("direction request: inconsistent dimensions");
    if (!(alpha > 0.0)) throw std::invalid_argument("direction request: alpha must be positive");
    if (k > 0 && !(weights.minCoeff() > 0.0))
      throw std::invalid_argument("direction request: weights must be positive");
    if (!grad_f.allFinite() || !g_values.allFinite() || !g_gradients.allFinite() ||
        !weights.allFinite())
      throw NonFiniteError("direction request: non-finite data");
  }
};

enum class DirectionStatus { optimal, max_iter, numerical_failure };

struct DirectionSolution {
  Vector u;
  double s = 0.0;        // epigraph value, s ≥ ‖u‖²
  Vector multipliers;    // one per active row
  double objective = 0.0;
  DirectionStatus status = DirectionStatus::numerical_failure;
  int conic_iterations = 0;
};

/// The epigraph form of the direction subproblem over y = (u, s):
///
///   min ½‖u‖² + ∇fᵀu
///   s.t. ∇gᵢᵀu + wᵢ s ≤ −α gᵢ          (orthant rows)
///        ‖(u, (s−1)/2)‖₂ ≤ (s+1)/2      (one cone, ⇔ ‖u‖² ≤ s)
struct ConicProgram {
  ConeQp qp;
  Index n = 0;
  Index linear_rows() const { return qp.cones.linear; }
};

inline ConicProgram to_conic_form(const DirectionRequest& req) {
  req.validate();
  const Index n = req.n();
  const Index k = req.rows();
  ConicProgram cp;
  cp.n = n;
  ConeQp& qp = cp.qp;
  qp.P = Matrix::Zero(n + 1, n + 1);
  qp.P.topLeftCorner(n, n).setIdentity();
  qp.q = Vector::Zero(n + 1);
  qp.q.head(n) = req.grad_f;
  qp.cones.linear = k;
  qp.cones.soc = {n + 2};
  qp.G = Matrix::Zero(k + n + 2, n + 1);
  qp.h = Vector::Zero(k + n + 2);
  qp.G.topLeftCorner(k, n) = req.g_gradients;
  qp.G.block(0, n, k, 1) = req.weights;
  qp.h.head(k) = -req.alpha * req.g_values;
  // Cone slack h − G(u, s) = ((s+1)/2, u, (s−1)/2).
  qp.G(k, n) = -0.5;
  qp.h[k] = 0.5;
  qp.G.block(k + 1, 0, n, n) = -Matrix::Identity(n, n);
  qp.G(k + n + 1, n) = -0.5;
  qp.h[k + n + 1] = -0.5;
  return cp;
}

namespace detail {

/// Constraint values ∇gᵢᵀu + α gᵢ + wᵢ‖u‖² for the given weights.
inline Vector direction_constraints(const DirectionRequest& req, const Vector& weights,
                                    const Vector& u) {
  return req.g_gradients * u + req.alpha * req.g_values + weights * u.squaredNorm();
}

/// Largest block of the subproblem KKT system:
///   u + ∇f + Σ λᵢ(∇gᵢ + 2wᵢu) = 0,  cᵢ ≤ 0,  λᵢ ≥ 0,  λᵢcᵢ = 0.
inline double direction_kkt(const DirectionRequest& req, const Vector& weights,
                            const Vector& u, const Vector& lambda) {
  const Vector c = direction_constraints(req, weights, u);
  Vector stat = u + req.grad_f;
  if (req.rows() > 0) {
    stat.noalias() += req.g_gradients.transpose() * lambda;
    stat += (2.0 * weights.dot(lambda)) * u;
  }
  double r = stat.lpNorm<Eigen::Infinity>();
  for (Index i = 0; i < req.rows(); ++i) {
    r = std::max(r, std::max(c[i], 0.0));
    r = std::max(r, std::max(-lambda[i], 0.0));
    r = std::max(r, std::abs(lambda[i] * c[i]));
  }
  return r;
}

/// Newton refinement of the subproblem KKT system on the rows the interior
/// point solution identifies as binding (λᵢ > −cᵢ). Replaces (u, λ) only if
/// the refined pair has a smaller KKT residual, nonnegative multipliers and no
/// larger constraint violation.
inline void polish_direction(const DirectionRequest& req, const Vector& weights, Vector& u,
                             Vector& lambda) {
  const Index n = req.n();
  const Vector c0 = direction_constraints(req, weights, u);
  std::vector<Index> bind;
  for (Index i = 0; i < req.rows(); ++i)
    if (lambda[i] > -c0[i]) bind.push_back(i);
  const auto b = static_cast<Index>(bind.size());
  if (b > n) return;

  Matrix A(b, n);
  Vector g(b), w(b), lam(b);
  for (Index j = 0; j < b; ++j) {
    const Index i = bind[static_cast<std::size_t>(j)];
    A.row(j) = req.g_gradients.row(i);
    g[j] = req.g_values[i];
    w[j] = weights[i];
    lam[j] = std::max(lambda[i], 0.0);
  }

  Vector v = u;
  for (int it = 0; it < 8; ++it) {
    const double sigma = 1.0 + 2.0 * w.dot(lam);
    const Vector F1 = sigma * v + req.grad_f + A.transpose() * lam;
    const Vector F2 = A * v + req.alpha * g + w * v.squaredNorm();
    if (b == 0) {
      v -= F1 / sigma;
      continue;
    }
    const Matrix C = A + 2.0 * w * v.transpose();
    const Matrix CCt = C * C.transpose();
    Eigen::LDLT<Matrix> ldlt(CCt);
    if (ldlt.info() != Eigen::Success) return;
    const Vector dlam = ldlt.solve(sigma * F2 - C * F1);
    if (!dlam.allFinite()) return;
    const Vector du = (-F1 - C.transpose() * dlam) / sigma;
    v += du;
    lam += dlam;
    if (du.lpNorm<Eigen::Infinity>() <= 1e-16 * std::max(1.0, v.lpNorm<Eigen::Infinity>()))
      break;
  }
  if (!v.allFinite() || !lam.allFinite() || (b > 0 && lam.minCoeff() < 0.0)) return;

  Vector full = Vector::Zero(req.rows());
  for (Index j = 0; j < b; ++j) full[bind[static_cast<std::size_t>(j)]] = lam[j];
  const Vector c1 = direction_constraints(req, weights, v);
  const double viol0 = req.rows() > 0 ? std::max(c0.maxCoeff(), 0.0) : 0.0;
  const double viol1 = req.rows() > 0 ? std::max(c1.maxCoeff(), 0.0) : 0.0;
  if (viol1 > viol0 + 1e-14) return;
  if (direction_kkt(req, weights, v, full) <= direction_kkt(req, weights, u, lambda)) {
    u = v;
    lambda = full;
  }
}

inline double kkt_scale(const DirectionRequest& req) {
  return std::max(1.0, req.grad_f.lpNorm<Eigen::Infinity>());
}

}  // namespace detail

/// Largest residual of the subproblem KKT system at (sol.u, sol.multipliers).
inline double verify_direction_kkt(const DirectionRequest& req, const DirectionSolution& sol) {
  return detail::direction_kkt(req, req.weights, sol.u, sol.multipliers);
}

/// Solves the direction QCQP through its conic epigraph form. Multipliers are
/// the duals of the orthant rows. The result is post-verified against the
/// QCQP KKT system and the conic solve is repeated once with tighter
/// tolerances if the residual exceeds `tol_kkt` (scaled by max(1, ‖∇f‖∞)).
/// The KKT check, not the conic solver's own exit flag, decides optimality.
inline DirectionSolution solve_direction(const DirectionRequest& req, double tol_sub = 1e-9,
                                         double tol_kkt = 1e-6) {
  req.validate();
  const Index n = req.n();
  const Index k = req.rows();
  DirectionSolution sol;
  if (k == 0) {
    sol.u = -req.grad_f;
    sol.s = sol.u.squaredNorm();
    sol.multipliers = Vector::Zero(0);
    sol.objective = 0.0;
    sol.status = DirectionStatus::optimal;
    return sol;
  }

  const ConicProgram cp = to_conic_form(req);
  ConeQpSettings settings;
  settings.feas_tol = tol_sub;
  settings.gap_tol = tol_sub;
  ConeQpStatus last = ConeQpStatus::numerical_failure;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const ConeQpSolution cs = solve_cone_qp(cp.qp, settings);
    sol.conic_iterations += cs.iterations;
    last = cs.status;
    if (cs.x.size() == 0) break;
    sol.u = cs.x.head(n);
    sol.s = cs.x[n];
    sol.multipliers = cs.z.head(k);
    detail::polish_direction(req, req.weights, sol.u, sol.multipliers);
    sol.s = std::max(sol.s, sol.u.squaredNorm());
    sol.objective = 0.5 * (sol.u + req.grad_f).squaredNorm();
    if (verify_direction_kkt(req, sol) <= tol_kkt * detail::kkt_scale(req)) {
      sol.status = DirectionStatus::optimal;
      return sol;
    }
    settings.feas_tol *= 1e-2;
    settings.gap_tol *= 1e-2;
  }
  sol.status = last == ConeQpStatus::max_iter ? DirectionStatus::max_iter
                                              : DirectionStatus::numerical_failure;
  return sol;
}

/// Linearized baseline direction:
///   min_u ½‖u + ∇f‖²  s.t.  ∇gᵢᵀu ≤ −α gᵢ.
/// The weights of the request are ignored; `s` is reported as ‖u‖².
inline DirectionSolution solve_direction_qp(const DirectionRequest& req, double tol_sub = 1e-9,
                                            double tol_kkt = 1e-6) {
  req.validate();
  const Index n = req.n();
  const Index k = req.rows();
  DirectionSolution sol;
  if (k == 0) {
    sol.u = -req.grad_f;
    sol.s = sol.u.squaredNorm();
    sol.multipliers = Vector::Zero(0);
    sol.status = DirectionStatus::optimal;
    return sol;
  }
  ConeQp qp;
  qp.P = Matrix::Identity(n, n);
  qp.q = req.grad_f;
  qp.G = req.g_gradients;
  qp.h = -req.alpha * req.g_values;
  qp.cones.linear = k;

  const Vector zero_w = Vector::Zero(k);
  ConeQpSettings settings;
  settings.feas_tol = tol_sub;
  settings.gap_tol = tol_sub;
  ConeQpStatus last = ConeQpStatus::numerical_failure;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const ConeQpSolution cs = solve_cone_qp(qp, settings);
    sol.conic_iterations += cs.iterations;
    last = cs.status;
    if (cs.x.size() == 0) break;
    sol.u = cs.x;
    sol.multipliers = cs.z;
    detail::polish_direction(req, zero_w, sol.u, sol.multipliers);
    sol.s = sol.u.squaredNorm();
    sol.objective = 0.5 * (sol.u + req.grad_f).squaredNorm();
    if (detail::direction_kkt(req, zero_w, sol.u, sol.multipliers) <=
        tol_kkt * detail::kkt_scale(req)) {
      sol.status = DirectionStatus::optimal;
      return sol;
    }
    settings.feas_tol *= 1e-2;
    settings.gap_tol *= 1e-2;
  }
  sol.status = last == ConeQpStatus::max_iter ? DirectionStatus::max_iter
                                              : DirectionStatus::numerical_failure;
  return sol;
}

/// Builds a request for `rows` at x from fresh oracle evaluations.
inline DirectionRequest make_direction_request(const ObjectiveEval& obj,
                                               const ConstraintEval& cons,
                                               std::vector<Index> rows, double alpha,
                                               const Vector& weights) {
  DirectionRequest req;
  req.grad_f = obj.gradient;
  req.g_values = cons.values;
  req.g_gradients = cons.gradients;
  req.active = std::move(rows);
  req.alpha = alpha;
  req.weights = weights;
  return req;
}

}  // namespace ssqcqp
