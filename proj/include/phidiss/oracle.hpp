#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "phidiss/dissipativity.hpp"
#include "phidiss/error.hpp"
#include "phidiss/field.hpp"
#include "phidiss/linalg.hpp"
#include "phidiss/phi.hpp"
#include "phidiss/spectral.hpp"

namespace phidiss {

/// One quadrature piece along an axis. Flat pieces are ones on which the
/// integrand does not vary along that axis; two Simpson intervals integrate
/// them exactly.
struct Piece {
  double a = 0.0;
  double b = 0.0;
  bool flat = false;
};

/// C^1 compactly supported field R^n -> C^m with exact gradient.
class TestFunction {
 public:
  enum class Kind { PolynomialBump, RampFamily, GridSampled };

  /// Writes v(x) into `v` and d_k v(x) into `grad[k]`; both are presized.
  using Evaluator = std::function<void(std::span<const double> x, CVector& v, std::vector<CVector>& grad)>;

  struct Monomial {
    std::vector<int> exponents;  // per axis, around the support centre
    CVector coeff;               // length m
  };

  struct RampParams {
    double mu = 0.0;
    double R = 0.0;
    double L = 0.0;  // transverse cutoff scale, n >= 2
    std::size_t h = 0;
    CVector lambda, omega;
    RVector centre;
  };

  TestFunction(Kind kind, std::size_t m, std::size_t n, std::vector<std::vector<Piece>> pieces, Evaluator eval)
      : kind_(kind), m_(m), n_(n), pieces_(std::move(pieces)), eval_(std::move(eval)) {
    if (m_ == 0 || n_ == 0) throw Error(ErrorKind::Shape, "test function needs m, n >= 1");
    if (pieces_.size() != n_) throw Error(ErrorKind::Shape, "test function needs pieces for every axis");
    for (const auto& axis : pieces_) {
      if (axis.empty()) throw Error(ErrorKind::Shape, "test function axis has no pieces");
      for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!(axis[i].a < axis[i].b)) throw Error(ErrorKind::Precondition, "empty quadrature piece");
        if (i > 0 && axis[i].a != axis[i - 1].b) throw Error(ErrorKind::Precondition, "pieces must be contiguous");
      }
    }
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }
  const std::vector<std::vector<Piece>>& pieces() const noexcept { return pieces_; }
  double support_lo(std::size_t i) const { return pieces_.at(i).front().a; }
  double support_hi(std::size_t i) const { return pieces_.at(i).back().b; }
  const std::optional<RampParams>& ramp() const noexcept { return ramp_; }
  void set_ramp(RampParams p) { ramp_ = std::move(p); }

  void operator()(std::span<const double> x, CVector& v, std::vector<CVector>& grad) const {
    v.assign(m_, cplx(0.0, 0.0));
    grad.assign(n_, CVector(m_, cplx(0.0, 0.0)));
    eval_(x, v, grad);
  }

 private:
  Kind kind_;
  std::size_t m_, n_;
  std::vector<std::vector<Piece>> pieces_;
  Evaluator eval_;
  std::optional<RampParams> ramp_;
};

/// v(x) = prod_i ((x_i - a_i)(b_i - x_i))^2 * sum_j c_j prod_i (x_i - centre_i)^{e_ij}
/// on the box [a, b], zero outside.
inline TestFunction polynomial_bump(std::vector<std::pair<double, double>> support,
                                    std::vector<TestFunction::Monomial> terms) {
  const std::size_t n = support.size();
  if (n == 0 || terms.empty()) throw Error(ErrorKind::Shape, "polynomial_bump needs a support box and terms");
  const std::size_t m = terms.front().coeff.size();
  for (const auto& t : terms)
    if (t.coeff.size() != m || t.exponents.size() != n)
      throw Error(ErrorKind::Shape, "polynomial_bump: inconsistent term shape");
  std::vector<std::vector<Piece>> pieces;
  for (const auto& [a, b] : support) pieces.push_back({Piece{a, b, false}});

  auto eval = [support, terms, n, m](std::span<const double> x, CVector& v, std::vector<CVector>& grad) {
    RVector base(n), dbase(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [a, b] = support[i];
      if (x[i] <= a || x[i] >= b) return;
      const double g = (x[i] - a) * (b - x[i]);
      const double dg = (b - x[i]) - (x[i] - a);
      base[i] = g * g;
      dbase[i] = 2.0 * g * dg;
    }
    double bump = 1.0;
    for (double f : base) bump *= f;

    // q(x) and its gradient
    CVector q(m, cplx(0.0, 0.0));
    std::vector<CVector> dq(n, CVector(m, cplx(0.0, 0.0)));
    for (const auto& t : terms) {
      double mono = 1.0;
      RVector dmono(n, 1.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double c = 0.5 * (support[i].first + support[i].second);
        const double y = x[i] - c;
        const int e = t.exponents[i];
        mono *= std::pow(y, e);
        for (std::size_t k = 0; k < n; ++k) {
          if (k == i)
            dmono[k] *= e == 0 ? 0.0 : e * std::pow(y, e - 1);
          else
            dmono[k] *= std::pow(y, e);
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        q[j] += mono * t.coeff[j];
        for (std::size_t k = 0; k < n; ++k) dq[k][j] += dmono[k] * t.coeff[j];
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      double dbump = dbase[k];
      for (std::size_t i = 0; i < n; ++i)
        if (i != k) dbump *= base[i];
      for (std::size_t j = 0; j < m; ++j) grad[k][j] = dbump * q[j] + bump * dq[k][j];
    }
    for (std::size_t j = 0; j < m; ++j) v[j] = bump * q[j];
  };
  return TestFunction(TestFunction::Kind::PolynomialBump, m, n, std::move(pieces), std::move(eval));
}

/// Random polynomial bump of total degree <= 2 on a random sub-box of
/// [lo, hi] covering at least a fifth of each side.
inline TestFunction random_bump(std::mt19937_64& rng, std::size_t m, std::span<const double> lo,
                                std::span<const double> hi) {
  const std::size_t n = lo.size();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::pair<double, double>> support;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = hi[i] - lo[i];
    const double len = w * (0.2 + 0.8 * unit(rng));
    const double a = lo[i] + (w - len) * unit(rng);
    support.emplace_back(a, a + len);
  }
  std::vector<TestFunction::Monomial> terms;
  const auto add = [&](std::vector<int> e) {
    CVector c(m);
    for (auto& z : c) z = cplx(g(rng), g(rng));
    terms.push_back({std::move(e), std::move(c)});
  };
  add(std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> e(n, 0);
    e[i] = 1;
    add(e);
    for (std::size_t k = i; k < n; ++k) {
      std::vector<int> f(n, 0);
      ++f[i];
      ++f[k];
      add(f);
    }
  }
  return polynomial_bump(std::move(support), std::move(terms));
}

/// Arbitrary C^1 field given by values plus an exact-gradient callback.
inline TestFunction sampled_function(std::size_t m, std::vector<std::vector<Piece>> pieces,
                                     TestFunction::Evaluator eval) {
  const std::size_t n = pieces.size();
  return TestFunction(TestFunction::Kind::GridSampled, m, n, std::move(pieces), std::move(eval));
}

namespace detail {

// quintic smoothstep on [0, 1]
inline double smoothstep5(double z) { return z * z * z * (10.0 + z * (-15.0 + 6.0 * z)); }
inline double dsmoothstep5(double z) { return 30.0 * z * z * (1.0 - z) * (1.0 - z); }

/// eta(s) = 1 on |s| <= 1/2, 0 on |s| >= 1; returns (eta, eta').
inline std::pair<double, double> cutoff(double s) {
  const double a = std::abs(s);
  if (a <= 0.5) return {1.0, 0.0};
  if (a >= 1.0) return {0.0, 0.0};
  const double z = 2.0 * a - 1.0;
  const double d = -2.0 * dsmoothstep5(z) * (s < 0.0 ? -1.0 : 1.0);
  return {1.0 - smoothstep5(z), d};
}

// w(x) = v(x) * f(|v|) with the chain rule; f returns (f, f').
template <class F>
TestFunction radial_rescale(const TestFunction& u, F f) {
  auto base = u;
  auto eval = [base, f](std::span<const double> x, CVector& v, std::vector<CVector>& grad) {
    base(x, v, grad);
    const double s = norm(std::span<const cplx>(v));
    if (s == 0.0) {
      for (auto& g : grad) std::fill(g.begin(), g.end(), cplx(0.0, 0.0));
      return;
    }
    const auto [fs, dfs] = f(s);
    for (auto& g : grad) {
      const double ds = inner(v, g).real() / s;  // d|v|
      for (std::size_t j = 0; j < v.size(); ++j) g[j] = fs * g[j] + dfs * ds * v[j];
    }
    for (auto& z : v) z *= fs;
  };
  return sampled_function(u.m(), u.pieces(), std::move(eval));
}

}  // namespace detail

/// The ramp from the necessity construction, along axis h:
///   eta(t/R) (mu omega + S(t) lambda),  S = 0 | t^2(3 - 2t) | 1,
/// with t = x_h - centre_h + 1/2 so the ramp straddles the centre. For
/// n >= 2 it is multiplied by eta((x_k - centre_k)/L) on the other axes.
inline TestFunction ramp_function(std::size_t n, std::size_t h, double mu, double R, double L, CVector lambda,
                                  CVector omega, RVector centre) {
  const std::size_t m = lambda.size();
  if (omega.size() != m || centre.size() != n || h >= n) throw Error(ErrorKind::Shape, "ramp_function: bad shape");
  if (!(mu > 0.0) || !(R >= 2.0) || (n > 1 && !(L > 0.0)))
    throw Error(ErrorKind::Precondition, "ramp_function needs mu > 0, R >= 2, L > 0");
  std::vector<std::vector<Piece>> pieces(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == h) {
      const double o = centre[i] - 0.5;
      pieces[i] = {{o - R, o - R / 2, false}, {o - R / 2, o, true}, {o, o + 1.0, false},
                   {o + 1.0, o + R / 2, true}, {o + R / 2, o + R, false}};
    } else {
      const double c = centre[i];
      pieces[i] = {{c - L, c - L / 2, false}, {c - L / 2, c + L / 2, true}, {c + L / 2, c + L, false}};
    }
  }
  auto eval = [=](std::span<const double> x, CVector& v, std::vector<CVector>& grad) {
    const double t = x[h] - centre[h] + 0.5;
    double S = 0.0, dS = 0.0;
    if (t >= 1.0) {
      S = 1.0;
    } else if (t > 0.0) {
      S = t * t * (3.0 - 2.0 * t);
      dS = 6.0 * t * (1.0 - t);
    }
    const auto [eh, deh] = detail::cutoff(t / R);
    RVector chi(n, 1.0), dchi(n, 0.0);
    chi[h] = eh;
    dchi[h] = deh / R;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == h) continue;
      const auto [e, de] = detail::cutoff((x[i] - centre[i]) / L);
      chi[i] = e;
      dchi[i] = de / L;
    }
    double prod = 1.0;
    for (double c : chi) prod *= c;
    if (prod == 0.0 && std::all_of(dchi.begin(), dchi.end(), [](double d) { return d == 0.0; })) return;
    CVector w(m);
    for (std::size_t j = 0; j < m; ++j) w[j] = mu * omega[j] + S * lambda[j];
    for (std::size_t k = 0; k < n; ++k) {
      double others = 1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (i != k) others *= chi[i];
      for (std::size_t j = 0; j < m; ++j) {
        grad[k][j] = dchi[k] * others * w[j];
        if (k == h) grad[k][j] += prod * dS * lambda[j];
      }
    }
    for (std::size_t j = 0; j < m; ++j) v[j] = prod * w[j];
  };
  TestFunction f(TestFunction::Kind::RampFamily, m, n, std::move(pieces), std::move(eval));
  f.set_ramp({mu, R, L, h, lambda, omega, centre});
  return f;
}

/// v = sqrt(phi(|u|)) u, for comparing the two forms of the functional.
inline TestFunction sqrt_phi_transform(const TestFunction& u, const PhiSpec& spec) {
  return detail::radial_rescale(u, [spec](double s) {
    const double ph = spec.phi(s);
    const double r = std::sqrt(ph);
    return std::pair{r, spec.dphi(s) / (2.0 * r)};
  });
}

/// v = sqrt(psi(|w|)) w; equals sqrt(phi(|u|)) u when w = phi(|u|) u.
inline TestFunction sqrt_psi_transform(const TestFunction& w, const PhiSpec& spec) {
  return detail::radial_rescale(w, [spec](double s) {
    const double r = std::sqrt(psi_of(spec, s));
    return std::pair{r, dpsi_of(spec, s) / (2.0 * r)};
  });
}

struct QuadratureOptions {
  std::size_t intervals = 0;  // Simpson intervals per piece; 0 picks 1024 for n = 1, else 64
  double rel_tol = 1e-4;      // allowed relative change between two levels
  int max_levels = 4;         // N, 2N, ... before giving up
};

struct FunctionalValue {
  double lhs = 0.0;
  double rhs = 0.0;
  // v-form: gradient term, Lambda term, Lambda^2 term.
  // u-form: phi term, phi' term, unused.
  std::array<double, 3> terms{0.0, 0.0, 0.0};
  std::size_t intervals = 0;  // per piece at the accepted level
  std::size_t nodes = 0;
  double previous_lhs = 0.0;  // one level coarser
};

namespace detail {

struct Neumaier {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

struct Rule {
  RVector x, w;
};

inline Rule simpson_rule(const std::vector<Piece>& pieces, std::size_t intervals) {
  Rule r;
  for (const auto& p : pieces) {
    const std::size_t N = p.flat ? 2 : intervals;
    const double step = (p.b - p.a) / static_cast<double>(N);
    for (std::size_t i = 0; i <= N; ++i) {
      const double wi = (i == 0 || i == N) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      const double xi = i == N ? p.b : p.a + step * static_cast<double>(i);
      if (i == 0 && !r.x.empty()) {
        r.w.back() += wi * step / 3.0;
        continue;
      }
      r.x.push_back(xi);
      r.w.push_back(wi * step / 3.0);
    }
  }
  return r;
}

// Calls fn(x, weight) at every node of the tensor rule.
template <class Fn>
std::size_t for_each_node(const std::vector<Rule>& rules, Fn&& fn) {
  const std::size_t n = rules.size();
  std::vector<std::size_t> idx(n, 0);
  RVector x(n);
  std::size_t count = 0;
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rules[i].x[idx[i]];
      w *= rules[i].w[idx[i]];
    }
    fn(std::span<const double>(x), w);
    ++count;
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++idx[i] < rules[i].x.size()) break;
      idx[i] = 0;
      if (i == 0) return count;
    }
  }
}

// Integrand: returns {term0, term1, term2, rhs} at x for nonvanishing v.
using Integrand = std::function<std::array<double, 4>(std::span<const double> x, const CVector& v,
                                                      const std::vector<CVector>& grad)>;

inline FunctionalValue integrate_once(const TestFunction& f, const Integrand& g, std::size_t intervals) {
  std::vector<Rule> rules;
  for (const auto& p : f.pieces()) rules.push_back(simpson_rule(p, intervals));
  CVector v;
  std::vector<CVector> grad;

  double sup = 0.0;
  for_each_node(rules, [&](std::span<const double> x, double) {
    f(x, v, grad);
    sup = std::max(sup, norm(std::span<const cplx>(v)));
  });
  const double eps_zero = 1e-12 * sup;

  std::array<Neumaier, 4> acc;
  FunctionalValue r;
  r.nodes = for_each_node(rules, [&](std::span<const double> x, double w) {
    f(x, v, grad);
    if (!(norm(std::span<const cplx>(v)) > eps_zero)) return;  // zero-extension
    const auto t = g(x, v, grad);
    for (std::size_t i = 0; i < 4; ++i) acc[i].add(w * t[i]);
  });
  r.terms = {acc[0].value(), acc[1].value(), acc[2].value()};
  r.lhs = r.terms[0] + r.terms[1] + r.terms[2];
  r.rhs = acc[3].value();
  r.intervals = intervals;
  if (!std::isfinite(r.lhs) || !std::isfinite(r.rhs))
    throw NumericFailure("functional is not finite", r.lhs, r.rhs);
  return r;
}

inline FunctionalValue integrate(const TestFunction& f, const Integrand& g, const QuadratureOptions& q) {
  if (f.n() > 3) throw Error(ErrorKind::UnsupportedRegime, "quadrature supports n <= 3");
  std::size_t N = q.intervals != 0 ? q.intervals : (f.n() == 1 ? 1024 : 64);
  if (N % 2 == 1) ++N;
  FunctionalValue prev = integrate_once(f, g, N);
  for (int level = 1; level < std::max(q.max_levels, 2); ++level) {
    N *= 2;
    FunctionalValue cur = integrate_once(f, g, N);
    cur.previous_lhs = prev.lhs;
    const double lhs_scale = std::max(std::abs(cur.lhs), 1e-2 * std::abs(cur.rhs));
    const bool lhs_ok = std::abs(cur.lhs - prev.lhs) <= q.rel_tol * lhs_scale;
    const bool rhs_ok = std::abs(cur.rhs - prev.rhs) <= q.rel_tol * std::abs(cur.rhs);
    if (lhs_ok && rhs_ok) return cur;
    prev = cur;
  }
  throw NumericFailure("quadrature did not converge; last two lhs values are the bracket", prev.previous_lhs,
                       prev.lhs);
}

inline void check_dims(const CoefficientField& field, const TestFunction& f) {
  if (field.m() != f.m() || field.n() != f.n())
    throw Error(ErrorKind::Shape, "field and test function dimensions differ");
}

// A^{hk} at x, constant fields cached by the caller
inline BlockTensor tensor_at(const CoefficientField& field, std::span<const double> x) {
  if (field.per_h()) return BlockTensor::diagonal(field.evaluate(x));
  return field.evaluate_tensor(x);
}

}  // namespace detail

/// Re int <A^{hk} d_k v, d_h v> + Lambda |v|^-2 Re<(A^{hk} - (A^{kh})*) v, d_h v> Re<v, d_k v>
///   - Lambda^2 |v|^-4 Re<A^{hk} v, v> Re<v, d_k v> Re<v, d_h v>,  Lambda = Lambda(|v|),
/// with rhs = int |grad v|^2.
inline FunctionalValue eval_functional_v(const CoefficientField& field, const LambdaProfile& profile,
                                         const TestFunction& v, const QuadratureOptions& q = {}) {
  detail::check_dims(field, v);
  std::optional<BlockTensor> fixed;
  if (field.is_constant()) fixed = detail::tensor_at(field, RVector(field.n(), 0.0));
  const std::size_t n = v.n();
  const bool per_h = field.per_h();

  detail::Integrand g = [&](std::span<const double> x, const CVector& val, const std::vector<CVector>& grad) {
    const BlockTensor t = fixed ? *fixed : detail::tensor_at(field, x);
    const double s = norm(std::span<const cplx>(val));
    const double lam = profile.lambda_at(s);
    CVector w = val;
    for (auto& z : w) z /= s;
    std::array<double, 4> out{0.0, 0.0, 0.0, 0.0};
    RVector wd(n);
    for (std::size_t k = 0; k < n; ++k) {
      wd[k] = inner(w, grad[k]).real();
      out[3] += std::pow(norm(std::span<const cplx>(grad[k])), 2);
    }
    for (std::size_t h = 0; h < n; ++h) {
      for (std::size_t k = 0; k < n; ++k) {
        if (per_h && h != k) continue;
        const CMatrix& a = t(h, k);
        const CMatrix b = a - adjoint(t(k, h));
        out[0] += inner(a.apply(grad[k]), grad[h]).real();
        out[1] += lam * inner(b.apply(w), grad[h]).real() * wd[k];
        out[2] -= lam * lam * inner(a.apply(w), w).real() * wd[k] * wd[h];
      }
    }
    return out;
  };
  return detail::integrate(v, g, q);
}

/// Re int <A^{hk} d_k u, d_h(phi(|u|) u)> with rhs = int |grad(sqrt(phi(|u|)) u)|^2.
/// For r < 0 the argument is read as w = phi(|u|) u and the equal dual
/// integral Re int <(A^{kh})* d_k w, d_h(psi(|w|) w)> is computed, which
/// stays bounded where u vanishes.
inline FunctionalValue eval_functional_u(const CoefficientField& field, const PhiSpec& spec,
                                         const TestFunction& u, const QuadratureOptions& q = {}) {
  detail::check_dims(field, u);
  std::optional<BlockTensor> fixed;
  if (field.is_constant()) fixed = detail::tensor_at(field, RVector(field.n(), 0.0));
  const std::size_t n = u.n();
  const bool per_h = field.per_h();
  const bool dual = spec.r() < 0.0;

  detail::Integrand g = [&](std::span<const double> x, const CVector& val, const std::vector<CVector>& grad) {
    const BlockTensor t = fixed ? *fixed : detail::tensor_at(field, x);
    const double s = norm(std::span<const cplx>(val));
    double f = 0.0, df = 0.0;
    if (dual) {
      f = psi_of(spec, s);
      df = dpsi_of(spec, s);
    } else {
      f = spec.phi(s);
      df = spec.dphi(s);
    }
    std::array<double, 4> out{0.0, 0.0, 0.0, 0.0};
    RVector ds(n);
    for (std::size_t k = 0; k < n; ++k) ds[k] = inner(val, grad[k]).real() / s;
    // d_h(f(|u|) u) = f d_h u + f' d_h|u| u
    for (std::size_t h = 0; h < n; ++h) {
      for (std::size_t k = 0; k < n; ++k) {
        if (per_h && h != k) continue;
        const CMatrix a = dual ? adjoint(t(k, h)) : t(h, k);
        const CVector au = a.apply(grad[k]);
        out[0] += f * inner(au, grad[h]).real();
        out[1] += df * ds[h] * inner(au, val).real();
      }
    }
    const double rf = std::sqrt(f);
    const double drf = df / (2.0 * rf);
    for (std::size_t k = 0; k < n; ++k) {
      double sq = 0.0;
      for (std::size_t j = 0; j < val.size(); ++j) sq += std::norm(rf * grad[k][j] + drf * ds[k] * val[j]);
      out[3] += sq;
    }
    return out;
  };
  return detail::integrate(u, g, q);
}

struct FalsifyOptions {
  std::size_t budget = 12;  // (mu, R) instances tried
  QuadratureOptions quadrature{};
  MinOptions min{};
};

struct Counterexample {
  TestFunction function;
  FunctionalValue value;
  Witness witness;  // after polishing
  double mu = 0.0;
  double R = 0.0;
};

/// Ramp search from a pointwise witness. The coefficients are frozen at the
/// witness point (the limit of a shrinking neighbourhood), the witness is
/// polished by a seeded min_P so that the leading error is second order in
/// 1/mu, and mu in {10, 1e2, 1e3, 1e4} with R = rho mu^2, rho in
/// {10, 1e3, 1e5}, is swept until lhs < -1e-9 rhs or the budget runs out.
inline std::optional<Counterexample> falsify(const CoefficientField& field, const LambdaProfile& profile,
                                             const Witness& witness, const FalsifyOptions& opts = {}) {
  if (opts.budget == 0) return std::nullopt;
  const std::size_t n = field.n();
  const std::size_t m = field.m();
  if (witness.x.size() != n || witness.h >= n || witness.lambda.size() != m || witness.omega.size() != m)
    throw Error(ErrorKind::Shape, "falsify: witness does not match the field");

  const BlockTensor frozen = detail::tensor_at(field, witness.x);
  const CoefficientField local = field.per_h() ? CoefficientField::constant_per_h([&] {
    std::vector<CMatrix> per_h;
    for (std::size_t h = 0; h < n; ++h) per_h.push_back(frozen(h, h));
    return per_h;
  }())
                                               : CoefficientField::constant_tensor(frozen);

  Witness w = witness;
  normalize(std::span<cplx>(w.lambda));
  normalize(std::span<cplx>(w.omega));
  const CMatrix& a = frozen(w.h, w.h);
  const double lam = profile.lambda_inf();
  const auto polished = min_P(a, lam, opts.min, {w.omega});
  if (polished.margin < eval_P(a, lam, w.lambda, w.omega)) {
    w.lambda = polished.lambda;
    w.omega = polished.omega;
  }

  std::size_t tried = 0;
  for (double mu : {1e1, 1e2, 1e3, 1e4}) {
    for (double rho : {1e1, 1e3, 1e5}) {
      if (tried++ == opts.budget) return std::nullopt;
      const double R = rho * mu * mu;
      const double L = 1e3 * mu * std::sqrt(R);
      auto fn = ramp_function(n, w.h, mu, R, L, w.lambda, w.omega, w.x);
      FunctionalValue val;
      try {
        val = eval_functional_v(local, profile, fn, opts.quadrature);
      } catch (const NumericFailure&) {
        continue;
      }
      if (val.lhs < -1e-9 * val.rhs) return Counterexample{std::move(fn), val, w, mu, R};
    }
  }
  return std::nullopt;
}

/// CSV dump of v on a uniform grid over the support: x_1..x_n, re_1, im_1, ...
inline void write_test_function(std::ostream& out, const TestFunction& f, std::size_t points_per_axis = 101) {
  if (points_per_axis < 2) throw Error(ErrorKind::Precondition, "need at least two points per axis");
  for (std::size_t i = 0; i < f.n(); ++i) out << "x" << i + 1 << ',';
  for (std::size_t j = 0; j < f.m(); ++j) out << "re" << j + 1 << ",im" << j + 1 << (j + 1 < f.m() ? "," : "\n");
  std::vector<detail::Rule> rules;
  for (std::size_t i = 0; i < f.n(); ++i) {
    detail::Rule r;
    const double lo = f.support_lo(i), hi = f.support_hi(i);
    for (std::size_t k = 0; k < points_per_axis; ++k)
      r.x.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points_per_axis - 1));
    r.w.assign(points_per_axis, 1.0);
    rules.push_back(std::move(r));
  }
  CVector v;
  std::vector<CVector> grad;
  detail::for_each_node(rules, [&](std::span<const double> x, double) {
    f(x, v, grad);
    for (double xi : x) out << detail::format_double(xi) << ',';
    for (std::size_t j = 0; j < v.size(); ++j)
      out << detail::format_double(v[j].real()) << ',' << detail::format_double(v[j].imag())
          << (j + 1 < v.size() ? "," : "\n");
  });
}

/// Structured-text record of a functional value.
inline void write_functional(std::ostream& out, const FunctionalValue& v) {
  out << "lhs = " << detail::format_double(v.lhs) << '\n'
      << "rhs = " << detail::format_double(v.rhs) << '\n'
      << "term.0 = " << detail::format_double(v.terms[0]) << '\n'
      << "term.1 = " << detail::format_double(v.terms[1]) << '\n'
      << "term.2 = " << detail::format_double(v.terms[2]) << '\n'
      << "intervals = " << v.intervals << '\n'
      << "nodes = " << v.nodes << '\n';
}

}  // namespace phidiss
