#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ssqcqp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// A point in the decision space. Entries must be finite.
using Point = Eigen::VectorXd;

/// Thrown when an oracle returns NaN or Inf.
class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Smooth inequality-constrained program
///
///   min f(x)  s.t.  gᵢ(x) ≤ 0,  i = 0..m-1.
///
/// The constraint oracle evaluates an arbitrary subset of rows at once so that
/// problems with shared structure (e.g. unrolled dynamics) can amortize work.
/// Both oracles must be pure: the solver calls them from whatever thread it
/// runs on and a Problem may be shared between concurrent solves.
struct Problem {
  /// Returns f(x); writes ∇f(x) into `gradient` when non-null (already sized n).
  using Objective = std::function<double(const Vector& x, Vector* gradient)>;

  /// Writes g_rows[j](x) into values[j] and, when `jacobian` is non-null, the
  /// gradient of that row into jacobian->row(j). Outputs are already sized.
  using Constraints = std::function<void(const Vector& x,
                                         std::span<const Index> rows,
                                         Vector& values, Matrix* jacobian)>;

  std::string name;
  Index n = 0;
  Index m = 0;
  Objective objective;
  Constraints constraints;

  /// Smoothness constants, present only for test problems.
  std::optional<double> lipschitz_f;
  std::vector<double> lipschitz_g;

  void validate() const {
    if (n <= 0) throw std::invalid_argument(name + ": dimension must be positive");
    if (m < 0) throw std::invalid_argument(name + ": negative constraint count");
    if (!objective) throw std::invalid_argument(name + ": missing objective");
    if (m > 0 && !constraints)
      throw std::invalid_argument(name + ": missing constraint oracle");
    if (lipschitz_f && !(*lipschitz_f > 0.0))
      throw std::invalid_argument(name + ": L_f must be positive");
    if (!lipschitz_g.empty()) {
      if (static_cast<Index>(lipschitz_g.size()) != m)
        throw std::invalid_argument(name + ": need one L_i per constraint");
      for (double l : lipschitz_g)
        if (!(l > 0.0)) throw std::invalid_argument(name + ": L_i must be positive");
    }
  }

  bool has_lipschitz() const {
    return lipschitz_f.has_value() && static_cast<Index>(lipschitz_g.size()) == m;
  }
};

/// A scalar function with its gradient, used to assemble small problems.
struct ScalarFunction {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

/// Builds a Problem from per-constraint scalar functions.
inline Problem make_problem(std::string name, Index n, ScalarFunction objective,
                            std::vector<ScalarFunction> constraints) {
  Problem p;
  p.name = std::move(name);
  p.n = n;
  p.m = static_cast<Index>(constraints.size());
  p.objective = [obj = std::move(objective)](const Vector& x, Vector* grad) {
    if (grad) *grad = obj.gradient(x);
    return obj.value(x);
  };
  p.constraints = [cons = std::move(constraints)](const Vector& x,
                                                  std::span<const Index> rows,
                                                  Vector& values, Matrix* jac) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const auto& g = cons[static_cast<std::size_t>(rows[j])];
      values[static_cast<Index>(j)] = g.value(x);
      if (jac) jac->row(static_cast<Index>(j)) = g.gradient(x).transpose();
    }
  };
  return p;
}

inline std::vector<Index> all_indices(Index m) {
  std::vector<Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

namespace detail {

inline void require_dimension(const Problem& p, const Vector& x) {
  if (x.size() != p.n)
    throw std::invalid_argument(p.name + ": point has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(p.n));
  if (!x.allFinite()) throw NonFiniteError(p.name + ": point has non-finite entries");
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& v, const std::string& what) {
  if (!v.allFinite()) throw NonFiniteError(what + " is not finite");
}

}  // namespace detail

struct ObjectiveEval {
  double value = 0.0;
  Vector gradient;
};

inline ObjectiveEval eval_objective(const Problem& p, const Point& x) {
  detail::require_dimension(p, x);
  ObjectiveEval out;
  out.gradient = Vector::Zero(p.n);
  out.value = p.objective(x, &out.gradient);
  if (!std::isfinite(out.value)) throw NonFiniteError(p.name + ": f(x) is not finite");
  detail::require_finite(out.gradient, p.name + ": ∇f(x)");
  return out;
}

inline double objective_value(const Problem& p, const Point& x) {
  detail::require_dimension(p, x);
  const double v = p.objective(x, nullptr);
  if (!std::isfinite(v)) throw NonFiniteError(p.name + ": f(x) is not finite");
  return v;
}

struct ConstraintEval {
  Vector values;
  Matrix gradients;  // one row per requested constraint
};

inline ConstraintEval eval_constraints(const Problem& p, const Point& x,
                                       std::span<const Index> subset) {
  detail::require_dimension(p, x);
  for (Index i : subset)
    if (i < 0 || i >= p.m)
      throw std::invalid_argument(p.name + ": constraint index " + std::to_string(i) +
                                  " out of range");
  ConstraintEval out;
  const auto k = static_cast<Index>(subset.size());
  out.values = Vector::Zero(k);
  out.gradients = Matrix::Zero(k, p.n);
  if (k > 0) p.constraints(x, subset, out.values, &out.gradients);
  detail::require_finite(out.values, p.name + ": g(x)");
  detail::require_finite(out.gradients, p.name + ": ∇g(x)");
  return out;
}

inline ConstraintEval eval_constraints(const Problem& p, const Point& x) {
  const auto rows = all_indices(p.m);
  return eval_constraints(p, x, rows);
}

/// All m constraint values without gradients.
inline Vector constraint_values(const Problem& p, const Point& x) {
  detail::require_dimension(p, x);
  Vector values = Vector::Zero(p.m);
  if (p.m > 0) {
    const auto rows = all_indices(p.m);
    p.constraints(x, rows, values, nullptr);
  }
  detail::require_finite(values, p.name + ": g(x)");
  return values;
}

inline double max_value(const Vector& v) {
  return v.size() == 0 ? -std::numeric_limits<double>::infinity() : v.maxCoeff();
}

struct FeasibilityReport {
  Vector values;
  double max_violation = -std::numeric_limits<double>::infinity();
  bool feasible = true;
};

inline FeasibilityReport check_feasibility(const Problem& p, const Point& x,
                                           double feas_tol = 0.0) {
  FeasibilityReport r;
  r.values = constraint_values(p, x);
  r.max_violation = max_value(r.values);
  r.feasible = r.max_violation <= feas_tol;
  return r;
}

/// Residuals of the first-order optimality system at (x, λ).
struct KktResidual {
  double stationarity = 0.0;     // ‖∇f + Σ λᵢ∇gᵢ‖₂
  double primal = 0.0;           // maxᵢ max(gᵢ, 0)
  double dual = 0.0;             // maxᵢ max(-λᵢ, 0)
  double complementarity = 0.0;  // maxᵢ |λᵢ gᵢ|

  double max() const { return std::max({stationarity, primal, dual, complementarity}); }
};

inline KktResidual kkt_residual(const Problem& p, const Point& x, const Vector& lambda) {
  if (lambda.size() != p.m)
    throw std::invalid_argument(p.name + ": multiplier vector must have length m");
  const auto obj = eval_objective(p, x);
  const auto cons = eval_constraints(p, x);
  KktResidual r;
  Vector grad_l = obj.gradient;
  if (p.m > 0) grad_l.noalias() += cons.gradients.transpose() * lambda;
  r.stationarity = grad_l.norm();
  for (Index i = 0; i < p.m; ++i) {
    r.primal = std::max(r.primal, cons.values[i]);
    r.dual = std::max(r.dual, -lambda[i]);
    r.complementarity = std::max(r.complementarity, std::abs(lambda[i] * cons.values[i]));
  }
  return r;
}

/// Largest ‖analytic − central difference‖∞ over f and every gᵢ.
inline double fd_gradient_check(const Problem& p, const Point& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  const auto obj = eval_objective(p, x);
  const auto cons = eval_constraints(p, x);

  Vector fd_f(p.n);
  Matrix fd_g(p.m, p.n);
  Point xp = x;
  Point xm = x;
  for (Index j = 0; j < p.n; ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    fd_f[j] = (objective_value(p, xp) - objective_value(p, xm)) / (2.0 * h);
    if (p.m > 0)
      fd_g.col(j) = (constraint_values(p, xp) - constraint_values(p, xm)) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  double err = (obj.gradient - fd_f).lpNorm<Eigen::Infinity>();
  if (p.m > 0) err = std::max(err, (cons.gradients - fd_g).lpNorm<Eigen::Infinity>());
  return err;
}

}  // namespace ssqcqp
