#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "phidiss/error.hpp"
#include "phidiss/linalg.hpp"

namespace phidiss {

/// Re<A l, l> - L^2 Re<A w, w> (Re<l, w>)^2 + L Re(<A w, l> - <A l, w>) Re<l, w>
inline double eval_P(const CMatrix& a, double lambda, std::span<const cplx> l, std::span<const cplx> w) {
  const std::size_t m = a.size();
  if (l.size() != m || w.size() != m) throw Error(ErrorKind::Shape, "eval_P: vector length differs from matrix size");
  if (std::abs(norm(w) - 1.0) > 1e-12) throw Error(ErrorKind::Precondition, "eval_P: omega must be a unit vector");
  const CVector al = a.apply(l);
  const CVector aw = a.apply(w);
  const double lw = inner(l, w).real();
  return inner(al, l).real() - lambda * lambda * inner(aw, w).real() * lw * lw +
         lambda * (inner(aw, l) - inner(al, w)).real() * lw;
}

struct MinOptions {
  std::size_t starts = 16;  // random starts on top of the deterministic ones
  std::uint64_t seed = 42;
};

struct MinResult {
  double margin = std::numeric_limits<double>::infinity();
  CVector lambda;  // unit
  CVector omega;   // unit
  std::size_t unconverged_starts = 0;
};

namespace detail {

inline RVector random_unit(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  RVector v(d);
  double nv = 0.0;
  while (nv < 1e-8) {
    for (auto& x : v) x = g(rng);
    nv = norm(std::span<const double>(v));
  }
  for (auto& x : v) x /= nv;
  return v;
}

/// Block form on R^{2m n} x S^{2m-1}:
///   x^T G(y) x,  G_hk = R_hk + L (B_hk y) y^T - L^2 (y^T R_hk y) y y^T
/// with R_hk = realify(A^{hk}) and B_hk = realify(A^{hk} - (A^{kh})*).
/// For n = 1 this is the realified P.
class BlockForm {
 public:
  BlockForm(const BlockTensor& t, double lambda) : n_(t.n()), d_(2 * t.m()), lambda_(lambda) {
    r_.reserve(n_ * n_);
    b_.reserve(n_ * n_);
    for (std::size_t h = 0; h < n_; ++h) {
      for (std::size_t k = 0; k < n_; ++k) {
        r_.push_back(realify(t(h, k)));
        b_.push_back(realify(t(h, k) - adjoint(t(k, h))));
      }
    }
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  const RMatrix& r(std::size_t h, std::size_t k) const { return r_[h * n_ + k]; }

  struct Eval {
    double value;
    RVector x;     // unit minimiser in R^{d n}
    RVector grad;  // Euclidean gradient in y at fixed x
  };

  RMatrix assemble(std::span<const double> y) const {
    const double l2 = lambda_ * lambda_;
    const std::size_t dim = d_ * n_;
    RMatrix g(dim);
    for (std::size_t h = 0; h < n_; ++h) {
      for (std::size_t k = 0; k < n_; ++k) {
        const RMatrix& r = r_[h * n_ + k];
        const RVector by = b_[h * n_ + k].apply(y);
        const double a = bilinear(r, y, y);
        for (std::size_t i = 0; i < d_; ++i)
          for (std::size_t j = 0; j < d_; ++j)
            g(h * d_ + i, k * d_ + j) = r(i, j) + lambda_ * by[i] * y[j] - l2 * a * y[i] * y[j];
      }
    }
    return symmetric_part(g);
  }

  Eval evaluate(std::span<const double> y) const {
    const auto eig = jacobi_eigen(assemble(y));
    Eval e{eig.values[0], eig.vector(0), RVector(d_, 0.0)};
    const double l2 = lambda_ * lambda_;
    RVector yx(n_);
    for (std::size_t h = 0; h < n_; ++h) yx[h] = dot(y, block(e.x, h));
    for (std::size_t h = 0; h < n_; ++h) {
      const auto xh = block(e.x, h);
      for (std::size_t k = 0; k < n_; ++k) {
        const auto xk = block(e.x, k);
        const RMatrix& r = r_[h * n_ + k];
        const RMatrix& b = b_[h * n_ + k];
        const RVector by = b.apply(y);
        const RVector bt_xh = b.transpose().apply(xh);
        const RVector ry = r.apply(y);
        const RVector rty = r.transpose().apply(y);
        const double xh_by = dot(xh, by);
        const double a = dot(y, ry);
        for (std::size_t i = 0; i < d_; ++i) {
          e.grad[i] += lambda_ * (yx[k] * bt_xh[i] + xh_by * xk[i]);
          e.grad[i] -= l2 * (yx[h] * yx[k] * (ry[i] + rty[i]) + a * (yx[k] * xh[i] + yx[h] * xk[i]));
        }
      }
    }
    return e;
  }

  std::span<const double> block(const RVector& x, std::size_t h) const {
    return std::span<const double>(x).subspan(h * d_, d_);
  }

 private:
  std::size_t n_, d_;
  double lambda_;
  std::vector<RMatrix> r_, b_;
};

struct SphereResult {
  double value = std::numeric_limits<double>::infinity();
  RVector x, y;
  std::size_t unconverged = 0;
};

/// Riemannian gradient descent with Armijo backtracking on
/// f(y) = lambda_min(G(y)) from each start; best value wins, ties go to the
/// earlier start.
inline SphereResult minimize_on_sphere(const BlockForm& form, const std::vector<RVector>& starts) {
  SphereResult best;
  for (const RVector& start : starts) {
    RVector y = start;
    normalize(std::span<double>(y));
    auto cur = form.evaluate(y);
    double alpha = 0.5;
    bool converged = false;
    for (int it = 0; it < 400; ++it) {
      RVector g = cur.grad;
      const double gy = dot(g, y);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= gy * y[i];
      const double gn2 = dot(g, g);
      if (std::sqrt(gn2) <= 1e-10 * (1.0 + std::abs(cur.value))) {
        converged = true;
        break;
      }
      bool moved = false;
      while (alpha > 1e-14) {
        RVector trial(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) trial[i] = y[i] - alpha * g[i];
        normalize(std::span<double>(trial));
        auto next = form.evaluate(trial);
        if (next.value <= cur.value - 1e-4 * alpha * gn2) {
          const double gain = cur.value - next.value;
          y = std::move(trial);
          cur = std::move(next);
          alpha = std::min(alpha * 2.0, 1e3);
          moved = true;
          if (gain <= 1e-15 * (1.0 + std::abs(cur.value))) converged = true;
          break;
        }
        alpha *= 0.5;
      }
      // no admissible step at machine resolution: stationary for our purposes
      if (!moved) converged = true;
      if (converged) break;
    }
    if (!converged) ++best.unconverged;
    if (cur.value < best.value) {
      best.value = cur.value;
      best.x = cur.x;
      best.y = y;
    }
  }
  return best;
}

inline void push_unit(std::vector<RVector>& out, RVector v) {
  if (norm(std::span<const double>(v)) < 1e-12) return;
  normalize(std::span<double>(v));
  out.push_back(std::move(v));
}

/// Coordinate vectors, eigenvectors of the symmetrised real parts of the
/// diagonal blocks, caller seeds, then `random` seeded draws.
inline std::vector<RVector> sphere_starts(const BlockForm& form, const std::vector<RVector>& seeds,
                                          std::size_t random, std::uint64_t seed) {
  const std::size_t d = form.d();
  std::vector<RVector> out;
  for (std::size_t i = 0; i < d; ++i) {
    RVector e(d, 0.0);
    e[i] = 1.0;
    out.push_back(std::move(e));
  }
  for (std::size_t h = 0; h < form.n(); ++h) {
    const auto eig = jacobi_eigen(symmetric_part(form.r(h, h)));
    for (std::size_t k = 0; k < d; ++k) push_unit(out, eig.vector(k));
  }
  for (const auto& s : seeds) push_unit(out, s);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < random; ++i) out.push_back(random_unit(rng, d));
  return out;
}

}  // namespace detail

/// inf of P over |lambda| = |omega| = 1. The inner minimum over lambda is the
/// smallest eigenvalue of a 2m x 2m symmetric matrix; the outer one over
/// omega is a multi-start local search, so the result is an upper bound on
/// the true infimum that is attained at the returned witness.
inline MinResult min_P(const CMatrix& a, double lambda, const MinOptions& opts = {},
                       const std::vector<CVector>& seeds = {}) {
  if (opts.starts < 8) throw Error(ErrorKind::Precondition, "min_P needs at least 8 starts");
  if (a.size() == 0) throw Error(ErrorKind::Shape, "min_P: empty matrix");
  const std::vector<CMatrix> single{a};
  const detail::BlockForm form(BlockTensor::diagonal(single), lambda);
  std::vector<RVector> real_seeds;
  for (const auto& s : seeds) {
    if (s.size() != a.size()) throw Error(ErrorKind::Shape, "min_P: seed has wrong length");
    real_seeds.push_back(realify(s));
  }
  const auto res = detail::minimize_on_sphere(form, detail::sphere_starts(form, real_seeds, opts.starts, opts.seed));
  return {res.value, complexify(res.x), complexify(res.y), res.unconverged};
}

struct EigenSummary {
  double mu_min = 0.0;
  double mu_max = 0.0;
  double trace = 0.0;
  double det = 0.0;  // filled for m = 2 only
  std::size_t m = 0;
};

inline void require_symmetric(const RMatrix& a) {
  double scale = 1.0;
  for (const double v : a.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-12 * scale)
        throw Error(ErrorKind::Precondition, "matrix is not symmetric within 1e-12");
}

inline EigenSummary summarize(const RMatrix& a) {
  require_symmetric(a);
  const auto eig = jacobi_eigen(a);
  EigenSummary s;
  s.m = a.size();
  s.mu_min = eig.values.front();
  s.mu_max = eig.values.back();
  for (std::size_t i = 0; i < a.size(); ++i) s.trace += a(i, i);
  if (a.size() == 2) s.det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  return s;
}

struct SymmetricCheck {
  bool holds = false;
  bool positive = true;  // mu_1 > 0
  double slack = 0.0;    // 4 mu_1 mu_m - L^2 (mu_1 + mu_m)^2
  std::string note;
};

/// Lambda_inf^2 (mu_1 + mu_m)^2 <= 4 mu_1 mu_m for a real symmetric positive
/// definite matrix. Equality is accepted up to 1e-12 relative.
inline SymmetricCheck symmetric_criterion(const RMatrix& a, double lambda_inf_sq) {
  const EigenSummary s = summarize(a);
  SymmetricCheck out;
  if (!(s.mu_min > 0.0)) {
    out.positive = false;
    out.note = "fails positivity: smallest eigenvalue is not positive";
    out.slack = -std::numeric_limits<double>::infinity();
    return out;
  }
  const double sum = s.mu_min + s.mu_max;
  const double rhs = 4.0 * s.mu_min * s.mu_max;
  const double lhs = lambda_inf_sq * sum * sum;
  out.slack = rhs - lhs;
  const double tol = 1e-12 * std::max(lhs, rhs);
  out.holds = lhs <= rhs + tol;
  if (s.m == 2) {
    const double lhs2 = lambda_inf_sq * s.trace * s.trace;
    const double rhs2 = 4.0 * s.det;
    const bool holds2 = lhs2 <= rhs2 + 1e-12 * std::max(std::abs(lhs2), std::abs(rhs2));
    // both forms agree up to rounding of the eigenvalues
    if (holds2 != out.holds && std::abs(out.slack) > 1e-10 * std::max(lhs, rhs))
      throw Error(ErrorKind::InvariantViolation, "eigenvalue and trace/determinant forms disagree");
  }
  return out;
}

struct StrictSymmetricCheck {
  bool holds = false;
  double margin = std::numeric_limits<double>::infinity();  // min of (1+c) mu_1 - (1-c) mu_m
  std::optional<double> trace_det_margin;                   // m = 2: min of c tr - sqrt(tr^2 - 4 det)
};

inline StrictSymmetricCheck strict_symmetric_criterion(std::span<const EigenSummary> eigs, double lambda_inf_sq) {
  if (!(lambda_inf_sq < 1.0)) throw Error(ErrorKind::UnsupportedRegime, "strict criterion needs Lambda_inf^2 < 1");
  const double c = std::sqrt(1.0 - lambda_inf_sq);
  StrictSymmetricCheck out;
  bool all_two = !eigs.empty();
  double td = std::numeric_limits<double>::infinity();
  for (const auto& s : eigs) {
    out.margin = std::min(out.margin, (1.0 + c) * s.mu_min - (1.0 - c) * s.mu_max);
    if (s.m == 2)
      td = std::min(td, c * s.trace - std::sqrt(std::max(0.0, s.trace * s.trace - 4.0 * s.det)));
    else
      all_two = false;
  }
  out.holds = out.margin > 0.0;
  if (all_two) {
    out.trace_det_margin = td;
    if ((td > 0.0) != out.holds && std::abs(td) > 1e-10 && std::abs(out.margin) > 1e-10)
      throw Error(ErrorKind::InvariantViolation, "eigenvalue and trace/determinant strict margins differ in sign");
  }
  return out;
}

struct ProductCheck {
  double value = std::numeric_limits<double>::infinity();  // min of mu_1 mu_m - (L^2/4)(mu_1 + mu_m)^2
  bool necessary_holds = false;
  bool sufficient_holds = false;
  enum class Status { Holds, Inconclusive, Fails } status = Status::Fails;
};

/// Product form of the strict eigenvalue condition. The positive minimum is
/// necessary for strict dissipativity; it is also sufficient when the largest
/// eigenvalue is bounded (pass `sup_mu_max`, or nullopt if unbounded).
inline ProductCheck product_criterion(std::span<const EigenSummary> eigs, double lambda_inf_sq,
                                      std::optional<double> sup_mu_max) {
  ProductCheck out;
  for (const auto& s : eigs) {
    const double sum = s.mu_min + s.mu_max;
    out.value = std::min(out.value, s.mu_min * s.mu_max - 0.25 * lambda_inf_sq * sum * sum);
  }
  out.necessary_holds = out.value > 0.0;
  out.sufficient_holds = out.necessary_holds && sup_mu_max.has_value() && std::isfinite(*sup_mu_max);
  if (out.sufficient_holds)
    out.status = ProductCheck::Status::Holds;
  else if (out.necessary_holds)
    out.status = ProductCheck::Status::Inconclusive;
  return out;
}

struct StrongResult {
  double margin = std::numeric_limits<double>::infinity();
  std::vector<CVector> xi;  // n blocks, jointly unit
  CVector omega;
  double lambda = 0.0;
  std::size_t unconverged_starts = 0;
};

/// Lambda values for a sweep over [lo, hi]: both ends plus 17 interior points.
inline RVector lambda_sweep(double lo, double hi) {
  if (lo > hi) std::swap(lo, hi);
  if (hi - lo <= 1e-15) return {lo};
  RVector out{lo, hi};
  for (int i = 1; i <= 17; ++i) out.push_back(lo + (hi - lo) * i / 18.0);
  return out;
}

/// inf over unit xi in C^{mn}, unit omega, and Lambda in the sweep of the
/// strong form
///   sum_hk Re<A^{hk} xi_k, xi_h> + L Re<(A^{hk} - (A^{kh})*) w, xi_h> Re<w, xi_k>
///          - L^2 Re<A^{hk} w, w> Re<w, xi_k> Re<w, xi_h>.
inline StrongResult strong_form_min(const BlockTensor& t, double lambda_lo, double lambda_hi,
                                    const MinOptions& opts = {}, const std::vector<CVector>& omega_seeds = {}) {
  if (t.n() == 0 || t.m() == 0) throw Error(ErrorKind::Shape, "strong_form_min: empty tensor");
  for (std::size_t h = 0; h < t.n(); ++h)
    for (std::size_t k = 0; k < t.n(); ++k)
      if (t(h, k).size() != t.m()) throw Error(ErrorKind::Shape, "strong_form_min: block of wrong size");
  if (!(std::abs(lambda_lo) < 1.0 && std::abs(lambda_hi) < 1.0))
    throw Error(ErrorKind::Precondition, "strong_form_min needs |Lambda| < 1");

  std::vector<RVector> seeds;
  for (const auto& s : omega_seeds) seeds.push_back(realify(s));
  StrongResult best;
  for (const double lam : lambda_sweep(lambda_lo, lambda_hi)) {
    const detail::BlockForm form(t, lam);
    const auto res = detail::minimize_on_sphere(form, detail::sphere_starts(form, seeds, opts.starts, opts.seed));
    best.unconverged_starts += res.unconverged;
    if (res.value < best.margin) {
      best.margin = res.value;
      best.lambda = lam;
      best.omega = complexify(res.y);
      best.xi.clear();
      for (std::size_t h = 0; h < t.n(); ++h) {
        const auto b = form.block(res.x, h);
        best.xi.push_back(complexify(b));
      }
    }
  }
  return best;
}

/// Direct evaluation of the strong form, for tests and witness checks.
inline double eval_strong(const BlockTensor& t, double lambda, const std::vector<CVector>& xi,
                          std::span<const cplx> w) {
  if (xi.size() != t.n()) throw Error(ErrorKind::Shape, "eval_strong: xi has wrong block count");
  double s = 0.0;
  for (std::size_t h = 0; h < t.n(); ++h) {
    for (std::size_t k = 0; k < t.n(); ++k) {
      const CMatrix& a = t(h, k);
      const CMatrix b = a - adjoint(t(k, h));
      const double wk = inner(w, xi[k]).real();
      const double wh = inner(w, xi[h]).real();
      s += inner(a.apply(xi[k]), xi[h]).real();
      s += lambda * inner(b.apply(w), xi[h]).real() * wk;
      s -= lambda * lambda * inner(a.apply(w), w).real() * wk * wh;
    }
  }
  return s;
}

/// min_P of the contraction sum_hk A^{hk} q_h q_k, normalised by |q|^2.
inline MinResult weak_form_min(const BlockTensor& t, std::span<const double> q, double lambda,
                               const MinOptions& opts = {}) {
  const double q2 = dot(q, q);
  if (!(q2 > 0.0)) throw Error(ErrorKind::Precondition, "weak_form_min needs q != 0");
  MinResult r = min_P(t.contract(q) * cplx(1.0 / q2, 0.0), lambda, opts);
  return r;
}

}  // namespace phidiss
