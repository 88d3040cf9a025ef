#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "phidiss/error.hpp"
#include "phidiss/field.hpp"
#include "phidiss/linalg.hpp"
#include "phidiss/phi.hpp"
#include "phidiss/spectral.hpp"

namespace phidiss {

enum class Status { Dissipative, StrictlyDissipative, NotDissipative, Inconclusive };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Dissipative: return "Dissipative";
    case Status::StrictlyDissipative: return "StrictlyDissipative";
    case Status::NotDissipative: return "NotDissipative";
    case Status::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

/// Dissipative or strictly dissipative.
inline bool passes(Status s) { return s == Status::Dissipative || s == Status::StrictlyDissipative; }

struct Witness {
  RVector x;
  std::size_t h = 0;  // 0-based axis
  CVector lambda;
  CVector omega;
};

struct Verdict {
  Status status = Status::Inconclusive;
  double margin = 0.0;       // worst value over samples and axes
  double kappa = 0.0;        // shift constant; margin / (1 - Lambda_inf^2) on the general path
  double kappa_prime = 0.0;  // (1 - Lambda_inf^2) kappa
  std::optional<Witness> witness;
  std::size_t certified_points = 0;
  double lambda_inf_sq = 0.0;
  std::vector<std::string> notes;
};

struct CheckOptions {
  MinOptions min{};
  double strict_tol = 1e-7;       // margin above this is strict (under the Lambda condition)
  double dissipative_tol = 1e-9;  // margin at or above minus this is dissipative
};

/// margin < -strict_tol: violated; [-strict_tol, -dissipative_tol): inconclusive;
/// [-dissipative_tol, strict_tol]: dissipative, not strict; above: strict when
/// cond_L holds.
inline Status classify_margin(double margin, bool cond_l, const CheckOptions& opts = {}) {
  if (margin < -opts.strict_tol) return Status::NotDissipative;
  if (margin < -opts.dissipative_tol) return Status::Inconclusive;
  if (margin > opts.strict_tol && cond_l) return Status::StrictlyDissipative;
  return Status::Dissipative;
}

namespace detail {

inline void finish(Verdict& v, const LambdaProfile& profile, const CheckOptions& opts) {
  v.lambda_inf_sq = profile.lambda_inf_sq();
  v.status = classify_margin(v.margin, profile.cond_l(), opts);
  if (v.status == Status::StrictlyDissipative) {
    v.kappa = v.margin / (1.0 - v.lambda_inf_sq);
    v.kappa_prime = (1.0 - v.lambda_inf_sq) * v.kappa;
  }
  v.notes.push_back("certified at " + std::to_string(v.certified_points) + " sample points");
}

// smallest eigenvalue of the symmetrised real form, with its eigenvector
inline std::pair<double, CVector> positivity_screen(const CMatrix& a) {
  const auto eig = jacobi_eigen(symmetric_part(realify(a)));
  return {eig.values[0], complexify(eig.vector(0))};
}

struct PointResult {
  double margin;
  CVector lambda, omega;
};

inline PointResult point_margin(const CMatrix& a, double lambda, const CheckOptions& opts) {
  const auto [mu, vec] = positivity_screen(a);
  if (mu < -opts.strict_tol) {
    // omega = i lambda makes Re<lambda, omega> vanish, so P = Re<A lambda, lambda> = mu
    CVector w(vec.size());
    for (std::size_t i = 0; i < vec.size(); ++i) w[i] = cplx(0.0, 1.0) * vec[i];
    return {mu, vec, w};
  }
  const auto r = min_P(a, lambda, opts.min);
  return {r.margin, r.lambda, r.omega};
}

inline Verdict check_per_h(const CoefficientField& field, const DomainBox& box, const LambdaProfile& profile,
                           const CheckOptions& opts, const std::optional<double>& shift) {
  if (!field.per_h())
    throw Error(ErrorKind::Precondition, "general A^{hk} tensors have no algebraic criterion; use classify");
  if (box.size() == 0) throw Error(ErrorKind::EmptyDomain, "empty sample grid");
  const double lam = profile.lambda_inf();
  Verdict v;
  v.margin = std::numeric_limits<double>::infinity();

  const auto shifted = [&](CMatrix a) {
    if (shift) a -= CMatrix::identity(a.size()) * cplx(*shift, 0.0);
    return a;
  };
  const auto consider = [&](const PointResult& r, const RVector& x, std::size_t h) {
    if (r.margin < v.margin) {
      v.margin = r.margin;
      v.witness = Witness{x, h, r.lambda, r.omega};
    }
  };

  if (field.kind() == CoefficientField::Kind::ConstantPerH) {
    if (field.n() != box.n()) throw Error(ErrorKind::Shape, "field and box dimensions differ");
    RVector x0(box.n());
    for (std::size_t i = 0; i < box.n(); ++i) x0[i] = box.axis_points(i)[0];
    for (std::size_t h = 0; h < field.n(); ++h)
      consider(point_margin(shifted(field.constant_matrices()[h]), lam, opts), x0, h);
    v.certified_points = box.size();
  } else {
    for_each_sample(field, box, [&](const FieldSample& s) {
      for (std::size_t h = 0; h < field.n(); ++h) consider(point_margin(shifted(s.per_h[h]), lam, opts), s.x, h);
      ++v.certified_points;
    });
  }
  finish(v, profile, opts);
  if (!box.bounded())
    v.notes.push_back("unbounded domain: uniform strictness across slices is not certified by grid sampling");
  for (const auto& w : box.warnings()) v.notes.push_back(w);
  return v;
}

}  // namespace detail

/// Pointwise criterion P >= 0 (or >= kappa) at Lambda_inf on every sample of
/// a one-dimensional field.
inline Verdict check_ode(const CoefficientField& field, const DomainBox& box, const LambdaProfile& profile,
                         const CheckOptions& opts = {}) {
  if (field.n() != 1) throw Error(ErrorKind::Precondition, "check_ode needs a one-dimensional field");
  return detail::check_per_h(field, box, profile, opts, std::nullopt);
}

/// The same criterion for every axis h of a per-h operator d_h(A^h d_h u).
inline Verdict check_pde_diagonal(const CoefficientField& field, const DomainBox& box, const LambdaProfile& profile,
                                  const CheckOptions& opts = {}) {
  return detail::check_per_h(field, box, profile, opts, std::nullopt);
}

/// Criterion for A^h - kappa I: the shifted form P - kappa (|l|^2 - L^2 Re<l, w>^2).
inline Verdict kappa_shift_check(const CoefficientField& field, const DomainBox& box, const LambdaProfile& profile,
                                 double kappa, const CheckOptions& opts = {}) {
  if (!profile.cond_l()) throw Error(ErrorKind::UnsupportedRegime, "the kappa shift needs Lambda_inf^2 < 1");
  if (!(kappa >= 0.0)) throw Error(ErrorKind::Precondition, "kappa must be non-negative");
  auto v = detail::check_per_h(field, box, profile, opts, kappa);
  v.notes.push_back("shifted by kappa = " + std::to_string(kappa));
  return v;
}

/// Largest kappa for which the shifted check passes, by bisection to 1e-8
/// absolute; 0 when kappa = 0 already fails. With m the unshifted margin the
/// answer lies in [m, m / (1 - Lambda_inf^2)].
inline double supremal_kappa(const CoefficientField& field, const DomainBox& box, const LambdaProfile& profile,
                             const CheckOptions& opts = {}) {
  const auto base = kappa_shift_check(field, box, profile, 0.0, opts);
  if (!passes(base.status) || base.margin <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = base.margin / (1.0 - profile.lambda_inf_sq()) + 1e-8;
  for (int it = 0; it < 200 && hi - lo > 1e-8; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (passes(kappa_shift_check(field, box, profile, mid, opts).status))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

struct FastResult {
  std::optional<Verdict> verdict;
  std::string fallback_reason;  // set when the eigenvalue path does not apply
};

/// Eigenvalue-only verdict for real symmetric positive definite per-h fields.
/// margin is the worst (1 + c) mu_1 - (1 - c) mu_m with c = sqrt(1 - Lambda_inf^2),
/// kappa the supremal shift margin / (2c).
inline FastResult check_symmetric_fast(const CoefficientField& field, const DomainBox& box,
                                       const LambdaProfile& profile, const CheckOptions& opts = {}) {
  if (!field.per_h()) return {std::nullopt, "tensor field"};
  FastResult out;
  const double l2 = profile.lambda_inf_sq();
  const double c = std::sqrt(std::max(0.0, 1.0 - l2));
  Verdict v;
  v.margin = std::numeric_limits<double>::infinity();
  double worst_slack = std::numeric_limits<double>::infinity();
  std::string reason;

  const auto visit = [&](const CMatrix& a, const RVector& x, std::size_t h) {
    if (!reason.empty()) return;
    RMatrix r(a.size());
    double scale = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a.size(); ++j) {
        r(i, j) = a(i, j).real();
        scale = std::max(scale, std::abs(a(i, j)));
      }
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a.size(); ++j)
        if (std::abs(a(i, j).imag()) > 1e-12 * scale || std::abs(r(i, j) - r(j, i)) > 1e-12 * scale) {
          reason = "matrix is not real symmetric";
          return;
        }
    const auto s = summarize(r);
    if (!(s.mu_min > 0.0)) {
      reason = "matrix is not positive definite";
      return;
    }
    // slack of Lambda^2 (mu_1 + mu_m)^2 <= 4 mu_1 mu_m, scaled to the eigenvalues
    const double sum = s.mu_min + s.mu_max;
    const double slack = (4.0 * s.mu_min * s.mu_max - l2 * sum * sum) / (sum * sum);
    const double strict = (1.0 + c) * s.mu_min - (1.0 - c) * s.mu_max;
    if (slack < worst_slack) worst_slack = slack;
    if (strict < v.margin) {
      v.margin = strict;
      v.witness = Witness{x, h, {}, {}};
    }
  };

  if (field.kind() == CoefficientField::Kind::ConstantPerH) {
    RVector x0(box.n());
    for (std::size_t i = 0; i < box.n(); ++i) x0[i] = box.axis_points(i)[0];
    for (std::size_t h = 0; h < field.n(); ++h) visit(field.constant_matrices()[h], x0, h);
    v.certified_points = box.size();
  } else {
    for_each_sample(field, box, [&](const FieldSample& s) {
      for (std::size_t h = 0; h < field.n(); ++h) visit(s.per_h[h], s.x, h);
      ++v.certified_points;
    });
  }
  if (!reason.empty()) return {std::nullopt, reason};

  v.lambda_inf_sq = l2;
  if (worst_slack < -1e-12)
    v.status = Status::NotDissipative;
  else if (profile.cond_l() && v.margin > opts.strict_tol)
    v.status = Status::StrictlyDissipative;
  else
    v.status = Status::Dissipative;
  if (v.status == Status::StrictlyDissipative) {
    v.kappa = v.margin / (2.0 * c);
    v.kappa_prime = (1.0 - l2) * v.kappa;
  }
  v.notes.push_back("eigenvalue criterion; certified at " + std::to_string(v.certified_points) + " sample points");
  out.verdict = std::move(v);
  return out;
}

namespace detail {

inline std::string join_complex(const CVector& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += " ";
    s += format_double(v[i].real()) + " " + format_double(v[i].imag());
  }
  return s;
}

}  // namespace detail

/// key = value record; numbers in shortest round-trip form.
inline void write_verdict(std::ostream& out, const Verdict& v) {
  using detail::format_double;
  out << "status = " << to_string(v.status) << "\n";
  out << "margin = " << format_double(v.margin) << "\n";
  out << "kappa = " << format_double(v.kappa) << "\n";
  out << "kappa_prime = " << format_double(v.kappa_prime) << "\n";
  out << "lambda_inf_sq = " << format_double(v.lambda_inf_sq) << "\n";
  out << "certified_points = " << v.certified_points << "\n";
  if (v.witness) {
    out << "witness.x =";
    for (const double xi : v.witness->x) out << " " << format_double(xi);
    out << "\nwitness.h = " << v.witness->h + 1 << "\n";
    if (!v.witness->lambda.empty()) {
      out << "witness.lambda = " << detail::join_complex(v.witness->lambda) << "\n";
      out << "witness.omega = " << detail::join_complex(v.witness->omega) << "\n";
    }
  }
  for (const auto& n : v.notes) out << "note = " << n << "\n";
}

inline std::string verdict_record(const Verdict& v) {
  std::ostringstream os;
  write_verdict(os, v);
  return os.str();
}

}  // namespace phidiss
