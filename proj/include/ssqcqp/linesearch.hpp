#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>

#include "ssqcqp/problem.hpp"

namespace ssqcqp {

struct StepResult {
  double t = 1.0;  // 2^-halvings
  int halvings = 0;
  Point trial;
  double f_trial = 0.0;
  Vector g_trial;  // all m constraint values at the trial point
  bool accepted = false;
};

/// Halves t from 1 until x + t·u is feasible for every one of the m
/// constraints (gᵢ ≤ feas_tol) and satisfies the Armijo condition
/// f(x + t·u) ≤ f(x) + γ·t·∇f(x)ᵀu.
///
/// `accepted == false` means `max_halvings` was exhausted; the caller should
/// treat that as a termination diagnostic (u ≈ 0 or a tolerance mismatch).
inline StepResult backtrack(const Problem& p, const Point& x, const Vector& u,
                            const Vector& grad_f, double gamma, int max_halvings,
                            double feas_tol = 0.0, std::optional<double> f_x = {}) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (max_halvings < 0) throw std::invalid_argument("max_halvings must be nonnegative");
  if (u.size() != p.n || grad_f.size() != p.n)
    throw std::invalid_argument("backtrack: direction dimension mismatch");
  const double f0 = f_x ? *f_x : objective_value(p, x);
  const double slope = grad_f.dot(u);

  StepResult r;
  for (int k = 0; k <= max_halvings; ++k) {
    r.halvings = k;
    r.t = std::ldexp(1.0, -k);
    r.trial = x + r.t * u;
    r.g_trial = constraint_values(p, r.trial);
    if (max_value(r.g_trial) > feas_tol) continue;
    r.f_trial = objective_value(p, r.trial);
    if (r.f_trial <= f0 + gamma * r.t * slope) {
      r.accepted = true;
      return r;
    }
  }
  return r;
}

/// Uniform step size below which both backtracking conditions always hold:
/// min{1/α, 2(1−γ)/L_f, 2w̲/L₁, …, 2w̲/L_m}.
inline double theoretical_step_bound(double alpha, double gamma, double lipschitz_f,
                                     double w_floor, std::span<const double> lipschitz_g) {
  if (!(alpha > 0.0) || !(lipschitz_f > 0.0) || !(w_floor > 0.0) ||
      !(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("theoretical_step_bound: arguments out of range");
  double t = std::min(1.0 / alpha, 2.0 * (1.0 - gamma) / lipschitz_f);
  for (double l : lipschitz_g) {
    if (!(l > 0.0)) throw std::invalid_argument("theoretical_step_bound: L_i must be positive");
    t = std::min(t, 2.0 * w_floor / l);
  }
  return t;
}

}  // namespace ssqcqp
