#pragma once

// Dense primal-dual interior-point method for
//
//   min ½xᵀPx + qᵀx   s.t.  Gx + s = h,  s ∈ K,
//
// where K is a nonnegative orthant followed by second-order cones
// Q = {(t, v) : ‖v‖₂ ≤ t}. Mehrotra predictor-corrector with Nesterov-Todd
// scaling; the reduced Newton system P + GᵀW⁻²G is factored densely, which is
// the right trade-off for the few hundred variables the direction subproblems
// produce.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace ssqcqp {

struct ConeDims {
  Eigen::Index linear = 0;
  std::vector<Eigen::Index> soc;

  Eigen::Index size() const {
    return std::accumulate(soc.begin(), soc.end(), linear);
  }
  /// Barrier degree: one per orthant coordinate and one per cone.
  Eigen::Index degree() const { return linear + static_cast<Eigen::Index>(soc.size()); }
};

struct ConeQp {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  ConeDims cones;
};

struct ConeQpSettings {
  double feas_tol = 1e-9;  // relative primal/dual residual
  double gap_tol = 1e-11;  // relative duality gap
  int max_iter = 100;
};

enum class ConeQpStatus { optimal, max_iter, numerical_failure };

/// On max_iter or numerical_failure, (x, s, z) hold the best iterate seen
/// (empty if the iteration broke down before the first one).
struct ConeQpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd s;
  Eigen::VectorXd z;
  ConeQpStatus status = ConeQpStatus::numerical_failure;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

namespace detail::cone {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

template <typename F>
void for_each_soc(const ConeDims& dims, F&& f) {
  Index offset = dims.linear;
  for (Index d : dims.soc) {
    f(offset, d);
    offset += d;
  }
}

/// Jordan product x∘y.
inline VectorXd product(const ConeDims& dims, const VectorXd& x, const VectorXd& y) {
  VectorXd out(x.size());
  const Index l = dims.linear;
  out.head(l) = x.head(l).cwiseProduct(y.head(l));
  for_each_soc(dims, [&](Index o, Index d) {
    out[o] = x.segment(o, d).dot(y.segment(o, d));
    out.segment(o + 1, d - 1) = x[o] * y.segment(o + 1, d - 1) + y[o] * x.segment(o + 1, d - 1);
  });
  return out;
}

/// Solves λ∘x = v for x.
inline VectorXd divide(const ConeDims& dims, const VectorXd& lambda, const VectorXd& v) {
  VectorXd out(v.size());
  const Index l = dims.linear;
  out.head(l) = v.head(l).cwiseQuotient(lambda.head(l));
  for_each_soc(dims, [&](Index o, Index d) {
    const double l0 = lambda[o];
    const auto l1 = lambda.segment(o + 1, d - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double x0 = (l0 * v[o] - l1.dot(v.segment(o + 1, d - 1))) / det;
    out[o] = x0;
    out.segment(o + 1, d - 1) = (v.segment(o + 1, d - 1) - x0 * l1) / l0;
  });
  return out;
}

inline VectorXd identity(const ConeDims& dims) {
  VectorXd e = VectorXd::Zero(dims.size());
  e.head(dims.linear).setOnes();
  for_each_soc(dims, [&](Index o, Index) { e[o] = 1.0; });
  return e;
}

/// Smallest "eigenvalue" of x with respect to K; positive iff x ∈ int K.
inline double min_eig(const ConeDims& dims, const VectorXd& x) {
  double m = std::numeric_limits<double>::infinity();
  if (dims.linear > 0) m = x.head(dims.linear).minCoeff();
  for_each_soc(dims, [&](Index o, Index d) {
    m = std::min(m, x[o] - x.segment(o + 1, d - 1).norm());
  });
  return m;
}

/// Largest a ≥ 0 (capped at `cap`) such that x + a·d ∈ K, for x ∈ int K.
inline double max_step(const ConeDims& dims, const VectorXd& x, const VectorXd& d,
                       double cap) {
  double a = cap;
  for (Index i = 0; i < dims.linear; ++i)
    if (d[i] < 0.0) a = std::min(a, -x[i] / d[i]);
  for_each_soc(dims, [&](Index o, Index n) {
    const double x0 = x[o];
    const double d0 = d[o];
    const auto x1 = x.segment(o + 1, n - 1);
    const auto d1 = d.segment(o + 1, n - 1);
    // (x0 + a d0)² − ‖x1 + a d1‖² = qa a² + 2 qb a + qc
    const double qa = d0 * d0 - d1.squaredNorm();
    const double qb = x0 * d0 - x1.dot(d1);
    const double qc = x0 * x0 - x1.squaredNorm();
    double root = std::numeric_limits<double>::infinity();
    if (qa == 0.0) {
      if (qb < 0.0) root = -qc / (2.0 * qb);
    } else {
      const double disc = qb * qb - qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double t = -(qb + std::copysign(sq, qb));
        const double r1 = t / qa;
        const double r2 = (t != 0.0) ? qc / t : std::numeric_limits<double>::infinity();
        for (double r : {r1, r2})
          if (r > 0.0) root = std::min(root, r);
      }
    }
    // Leaving through the apex side: the leading coordinate must stay positive.
    if (d0 < 0.0) root = std::min(root, -x0 / d0);
    a = std::min(a, root);
  });
  return a;
}

/// Nesterov-Todd scaling W with W z = W⁻¹ s = λ. W is symmetric and block
/// diagonal: a positive diagonal on the orthant and a dense block per cone.
struct NtScaling {
  ConeDims dims;
  VectorXd lin;                  // orthant diagonal √(s/z)
  std::vector<MatrixXd> w;       // per cone
  std::vector<MatrixXd> w_inv;   // per cone
  VectorXd lambda;

  NtScaling(const ConeDims& d, const VectorXd& s, const VectorXd& z) : dims(d) {
    const Index l = dims.linear;
    lin = (s.head(l).cwiseQuotient(z.head(l))).cwiseSqrt();
    lambda.resize(s.size());
    lambda.head(l) = s.head(l).cwiseProduct(z.head(l)).cwiseSqrt();
    for_each_soc(dims, [&](Index o, Index n) {
      const auto so = s.segment(o, n);
      const auto zo = z.segment(o, n);
      const double s_det = so[0] * so[0] - so.tail(n - 1).squaredNorm();
      const double z_det = zo[0] * zo[0] - zo.tail(n - 1).squaredNorm();
      const VectorXd sb = so / std::sqrt(s_det);
      const VectorXd zb = zo / std::sqrt(z_det);
      const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
      VectorXd jz = zb;
      jz.tail(n - 1) *= -1.0;
      // NT point w̄ (unit determinant), then its square root v so that
      // W = β(2vvᵀ − J) satisfies W² z = s.
      const VectorXd wb = (sb + jz) / (2.0 * gamma);
      VectorXd v = wb;
      v[0] += 1.0;
      v /= std::sqrt(2.0 * (wb[0] + 1.0));
      const double beta = std::pow(s_det / z_det, 0.25);
      MatrixXd J = MatrixXd::Identity(n, n);
      J.bottomRightCorner(n - 1, n - 1) *= -1.0;
      MatrixXd W = beta * (2.0 * v * v.transpose() - J);
      const VectorXd jw = J * v;
      MatrixXd Wi = (2.0 * jw * jw.transpose() - J) / beta;
      lambda.segment(o, n) = W * zo;
      w.push_back(std::move(W));
      w_inv.push_back(std::move(Wi));
    });
  }

  VectorXd apply(const VectorXd& v) const { return apply_impl(v, false); }
  VectorXd apply_inv(const VectorXd& v) const { return apply_impl(v, true); }

  /// W⁻¹ G, row-block by row-block.
  MatrixXd apply_inv_rows(const MatrixXd& G) const {
    MatrixXd out(G.rows(), G.cols());
    const Index l = dims.linear;
    out.topRows(l) = lin.cwiseInverse().asDiagonal() * G.topRows(l);
    std::size_t k = 0;
    for_each_soc(dims, [&](Index o, Index n) {
      out.middleRows(o, n).noalias() = w_inv[k++] * G.middleRows(o, n);
    });
    return out;
  }

 private:
  VectorXd apply_impl(const VectorXd& v, bool inverse) const {
    VectorXd out(v.size());
    const Index l = dims.linear;
    if (inverse)
      out.head(l) = v.head(l).cwiseQuotient(lin);
    else
      out.head(l) = v.head(l).cwiseProduct(lin);
    std::size_t k = 0;
    for_each_soc(dims, [&](Index o, Index n) {
      out.segment(o, n) = (inverse ? w_inv[k] : w[k]) * v.segment(o, n);
      ++k;
    });
    return out;
  }
};

}  // namespace detail::cone

inline ConeQpSolution solve_cone_qp(const ConeQp& prob, const ConeQpSettings& settings = {}) {
  using namespace detail::cone;
  const Index n = prob.q.size();
  const ConeDims& dims = prob.cones;
  const Index rows = dims.size();
  const double degree = static_cast<double>(dims.degree());

  ConeQpSolution sol;
  sol.status = ConeQpStatus::numerical_failure;
  if (prob.P.rows() != n || prob.P.cols() != n || prob.G.rows() != rows ||
      prob.G.cols() != n || prob.h.size() != rows)
    return sol;

  const VectorXd e = identity(dims);
  const double q_scale = std::max(1.0, prob.q.norm());
  const double h_scale = std::max(1.0, prob.h.norm());

  // Initial point: least-squares fit, then shift s and z into the cone.
  VectorXd x;
  {
    MatrixXd H0 = prob.P;
    H0.noalias() += prob.G.transpose() * prob.G;
    Eigen::LDLT<MatrixXd> ldlt(H0);
    if (ldlt.info() != Eigen::Success) return sol;
    x = ldlt.solve(-prob.q + prob.G.transpose() * prob.h);
  }
  VectorXd s = prob.h - prob.G * x;
  VectorXd z = -s;
  for (VectorXd* v : {&s, &z}) {
    const double shift = -min_eig(dims, *v);
    if (shift >= -1e-8 * std::max(v->norm(), 1.0)) *v += (1.0 + shift) * e;
  }

  // Best iterate by the largest of the three scaled optimality measures; it is
  // what gets returned when the iteration breaks down numerically.
  double best_merit = std::numeric_limits<double>::infinity();
  auto keep_best = [&](double merit, int it, double pres, double dres, double gap) {
    if (merit < best_merit) {
      best_merit = merit;
      sol.x = x;
      sol.s = s;
      sol.z = z;
      sol.iterations = it;
      sol.primal_residual = pres;
      sol.dual_residual = dres;
      sol.gap = gap;
    }
  };

  for (int it = 0; it < settings.max_iter; ++it) {
    const VectorXd rx = prob.P * x + prob.q + prob.G.transpose() * z;
    const VectorXd rz = prob.G * x + s - prob.h;
    const double gap = s.dot(z);
    const double pcost = 0.5 * x.dot(prob.P * x) + prob.q.dot(x);
    const double pres = rz.norm() / h_scale;
    const double dres = rx.norm() / q_scale;
    const double rgap = gap / std::max(1.0, std::abs(pcost));
    if (!std::isfinite(gap) || !std::isfinite(pcost) || !std::isfinite(pres) ||
        !std::isfinite(dres))
      return sol;
    keep_best(std::max({pres / settings.feas_tol, dres / settings.feas_tol,
                        rgap / settings.gap_tol}),
              it, pres, dres, gap);
    if (pres <= settings.feas_tol && dres <= settings.feas_tol && rgap <= settings.gap_tol) {
      sol.status = ConeQpStatus::optimal;
      return sol;
    }
    if (std::max({pres, dres}) > 1e6 * std::max(settings.feas_tol, std::min(sol.primal_residual, 1.0)) &&
        it > sol.iterations + 3)
      return sol;

    if (min_eig(dims, s) <= 0.0 || min_eig(dims, z) <= 0.0) return sol;
    const NtScaling W(dims, s, z);
    const MatrixXd M = W.apply_inv_rows(prob.G);  // W⁻¹G
    MatrixXd H = prob.P;
    H.noalias() += M.transpose() * M;
    Eigen::LLT<MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) return sol;

    // Solves  P dx + Gᵀdz = bx,  G dx + ds = bz,  W⁻¹ds + W dz = t
    // (t = λ \ dsrhs) through the reduced system, with one pass of iterative
    // refinement on the unreduced equations.
    struct Step {
      VectorXd dx, dz, ds, ds_scaled, dz_scaled;
    };
    auto reduced = [&](const VectorXd& bx, const VectorXd& bz, const VectorXd& t) {
      Step st;
      const VectorXd winv_bz = W.apply_inv(bz);
      st.dx = llt.solve(bx + M.transpose() * (winv_bz - t));
      st.dz = W.apply_inv(M * st.dx - winv_bz + t);
      st.dz_scaled = W.apply(st.dz);
      st.ds_scaled = t - st.dz_scaled;
      st.ds = W.apply(st.ds_scaled);
      return st;
    };
    auto newton = [&](const VectorXd& bx, const VectorXd& bz, const VectorXd& dsrhs) {
      const VectorXd t = divide(dims, W.lambda, dsrhs);
      Step st = reduced(bx, bz, t);
      for (int pass = 0; pass < 2; ++pass) {
        const VectorXd ex = bx - prob.P * st.dx - prob.G.transpose() * st.dz;
        const VectorXd ez = bz - prob.G * st.dx - st.ds;
        const VectorXd et = t - W.apply_inv(st.ds) - st.dz_scaled;
        const Step c = reduced(ex, ez, et);
        st.dx += c.dx;
        st.dz += c.dz;
        st.ds += c.ds;
        st.dz_scaled = W.apply(st.dz);
        st.ds_scaled = W.apply_inv(st.ds);
      }
      return st;
    };

    const double mu = gap / degree;
    const VectorXd lsq = product(dims, W.lambda, W.lambda);

    const Step aff = newton(-rx, -rz, -lsq);
    const double a_aff = std::min(max_step(dims, W.lambda, aff.ds_scaled, 1.0),
                                  max_step(dims, W.lambda, aff.dz_scaled, 1.0));
    const double sigma = std::pow(std::clamp(1.0 - a_aff, 0.0, 1.0), 3);

    const VectorXd corr = product(dims, aff.ds_scaled, aff.dz_scaled);
    const Step cmb = newton(-(1.0 - sigma) * rx, -(1.0 - sigma) * rz,
                            -lsq - corr + sigma * mu * e);
    const double a_max = std::min(max_step(dims, W.lambda, cmb.ds_scaled, 1e300),
                                  max_step(dims, W.lambda, cmb.dz_scaled, 1e300));
    const double a = std::min(1.0, 0.99 * a_max);
    if (!(a > 0.0) || !cmb.dx.allFinite()) return sol;

    x += a * cmb.dx;
    s += a * cmb.ds;
    z += a * cmb.dz;
  }
  sol.status = ConeQpStatus::max_iter;
  return sol;
}

}  // namespace ssqcqp
