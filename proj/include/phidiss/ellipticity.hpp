#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "phidiss/dissipativity.hpp"
#include "phidiss/error.hpp"
#include "phidiss/field.hpp"
#include "phidiss/linalg.hpp"
#include "phidiss/oracle.hpp"
#include "phidiss/phi.hpp"
#include "phidiss/spectral.hpp"

namespace phidiss {

enum class Tri { False, True, Inconclusive };

inline const char* to_string(Tri t) {
  switch (t) {
    case Tri::True: return "true";
    case Tri::False: return "false";
    case Tri::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

struct StrongPart {
  Tri holds = Tri::Inconclusive;
  double kappa = 0.0;  // the sampled margin
  RVector x;
  std::vector<CVector> xi;
  CVector omega;
};

struct IntegralPart {
  Tri holds = Tri::Inconclusive;
  double kappa = 0.0;
  std::string basis;  // how the value was obtained
};

struct WeakPart {
  Tri holds = Tri::Inconclusive;
  double kappa = 0.0;
  RVector x;
  RVector q;
  CVector lambda, omega;
};

struct EllipticityReport {
  StrongPart strong;
  IntegralPart integral;
  WeakPart weak;
  bool per_h = false;
  double lambda_inf_sq = 0.0;
  std::vector<std::string> consistency_flags;  // empty when no implication is broken
  std::vector<std::string> notes;
};

struct ClassifyOptions {
  CheckOptions check{};
  std::size_t directions = 256;  // q samples besides the axes
  std::size_t refine = 8;        // best coarse directions re-run with full starts
  FalsifyOptions falsify{};
};

inline Tri tri_from_margin(double margin, const CheckOptions& opts) {
  if (margin > opts.strict_tol) return Tri::True;
  if (margin < -opts.strict_tol) return Tri::False;
  return Tri::Inconclusive;
}

/// Axes first, then a half circle (n = 2) or a golden-angle hemisphere
/// (n = 3); q and -q give the same contraction.
inline std::vector<RVector> weak_directions(std::size_t n, std::size_t count) {
  if (n == 0 || n > 3) throw Error(ErrorKind::UnsupportedRegime, "weak sweep supports n <= 3");
  std::vector<RVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    RVector e(n, 0.0);
    e[i] = 1.0;
    out.push_back(std::move(e));
  }
  if (n == 2) {
    for (std::size_t j = 0; j < count; ++j) {
      const double th = std::numbers::pi * static_cast<double>(j) / static_cast<double>(count);
      out.push_back({std::cos(th), std::sin(th)});
    }
  } else if (n == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t j = 0; j < count; ++j) {
      const double z = 1.0 - (static_cast<double>(j) + 0.5) / static_cast<double>(count);
      const double r = std::sqrt(1.0 - z * z);
      const double th = golden * static_cast<double>(j);
      out.push_back({r * std::cos(th), r * std::sin(th), z});
    }
  }
  return out;
}

namespace detail {

struct WeakSample {
  double margin = std::numeric_limits<double>::infinity();
  RVector q;
  CVector lambda, omega;
};

// min over the q sweep of min_P(contract(q)/|q|^2) at one point
inline WeakSample weak_at(const BlockTensor& t, double lam, const std::vector<RVector>& dirs,
                          const std::vector<CVector>& seeds, const ClassifyOptions& opts) {
  const std::size_t n = t.n();
  WeakSample best;
  std::vector<std::pair<double, std::size_t>> coarse;
  std::vector<RVector> warm(dirs.size());
  RVector prev;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const CMatrix c = t.contract(dirs[i]) * cplx(1.0 / dot(dirs[i], dirs[i]), 0.0);
    const std::vector<CMatrix> single{c};
    const BlockForm form(BlockTensor::diagonal(single), lam);
    std::vector<RVector> s;
    if (!prev.empty()) s.push_back(prev);
    for (const auto& w : seeds) s.push_back(realify(w));
    // neighbouring directions differ little, so past the first sweep point
    // the previous minimiser is a good enough start
    const auto res = minimize_on_sphere(form, i <= n ? sphere_starts(form, s, 0, opts.check.min.seed) : s);
    prev = res.y;
    warm[i] = res.y;
    coarse.emplace_back(res.value, i);
    if (res.value < best.margin) best = {res.value, dirs[i], complexify(res.x), complexify(res.y)};
  }
  // full starts on the axes and the most negative coarse directions
  std::stable_sort(coarse.begin(), coarse.end());
  std::vector<std::size_t> pick;
  for (std::size_t i = 0; i < n && i < dirs.size(); ++i) pick.push_back(i);
  for (std::size_t i = 0; i < coarse.size() && i < opts.refine; ++i)
    if (coarse[i].second >= n) pick.push_back(coarse[i].second);
  for (std::size_t i : pick) {
    std::vector<CVector> s = seeds;
    s.push_back(complexify(warm[i]));
    const auto r = min_P(t.contract(dirs[i]) * cplx(1.0 / dot(dirs[i], dirs[i]), 0.0), lam, opts.check.min, s);
    if (r.margin < best.margin) best = {r.margin, dirs[i], r.lambda, r.omega};
  }
  return best;
}

inline BlockTensor tensor_of(const FieldSample& s) {
  if (s.tensor) return *s.tensor;
  return BlockTensor::diagonal(s.per_h);
}

}  // namespace detail

/// Strong, integral and weak ellipticity of a field over the sample grid.
inline EllipticityReport classify(const CoefficientField& field, const DomainBox& box, const LambdaProfile& profile,
                                  const ClassifyOptions& opts = {}) {
  if (field.n() != box.n()) throw Error(ErrorKind::Shape, "field and box dimensions differ");
  EllipticityReport rep;
  rep.per_h = field.per_h();
  rep.lambda_inf_sq = profile.lambda_inf_sq();

  if (!profile.cond_l()) {
    // Lambda reaches +-1, where every form degenerates along xi = omega
    rep.strong.holds = rep.weak.holds = rep.integral.holds = Tri::False;
    rep.integral.basis = "Lambda_inf^2 = 1";
    rep.notes.push_back("Lambda_inf^2 = 1: no uniform kappa > 0 exists for any of the three notions");
    return rep;
  }
  const double lam = profile.lambda_inf();

  // integral, and the seeds it supplies
  std::optional<Verdict> verdict;
  std::vector<CVector> seeds;
  if (rep.per_h) {
    verdict = field.n() == 1 ? check_ode(field, box, profile, opts.check)
                             : check_pde_diagonal(field, box, profile, opts.check);
    if (verdict->witness) seeds.push_back(verdict->witness->omega);
    rep.integral.kappa = verdict->margin;
    rep.integral.basis = "strict dissipativity of the per-axis operators";
    switch (verdict->status) {
      case Status::StrictlyDissipative: rep.integral.holds = Tri::True; break;
      case Status::NotDissipative: rep.integral.holds = Tri::False; break;
      default: rep.integral.holds = Tri::Inconclusive; break;
    }
  }

  // strong and weak, sample by sample
  const auto dirs = weak_directions(field.n(), field.n() == 1 ? 0 : opts.directions);
  rep.strong.kappa = std::numeric_limits<double>::infinity();
  rep.weak.kappa = std::numeric_limits<double>::infinity();
  const auto visit = [&](const BlockTensor& t, const RVector& x) {
    const auto s = strong_form_min(t, lam, lam, opts.check.min, seeds);
    if (s.margin < rep.strong.kappa) {
      rep.strong.kappa = s.margin;
      rep.strong.x = x;
      rep.strong.xi = s.xi;
      rep.strong.omega = s.omega;
    }
    const auto w = detail::weak_at(t, lam, dirs, seeds, opts);
    if (w.margin < rep.weak.kappa) {
      rep.weak.kappa = w.margin;
      rep.weak.x = x;
      rep.weak.q = w.q;
      rep.weak.lambda = w.lambda;
      rep.weak.omega = w.omega;
    }
  };
  if (field.is_constant()) {
    RVector x0(box.n());
    for (std::size_t i = 0; i < box.n(); ++i) x0[i] = box.axis_points(i)[0];
    visit(detail::tensor_at(field, x0), x0);
  } else {
    for_each_sample(field, box, [&](const FieldSample& s) { visit(detail::tensor_of(s), s.x); });
  }
  rep.strong.holds = tri_from_margin(rep.strong.kappa, opts.check);
  rep.weak.holds = tri_from_margin(rep.weak.kappa, opts.check);

  if (!rep.per_h) {
    // only strong => integral is available; falsity needs an explicit counterexample
    rep.integral.kappa = rep.strong.kappa;
    if (rep.strong.holds == Tri::True) {
      rep.integral.holds = Tri::True;
      rep.integral.basis = "implied by strong ellipticity";
    } else {
      rep.integral.holds = Tri::Inconclusive;
      rep.integral.basis = "not decided";
      const auto& q = rep.weak.q;
      std::optional<std::size_t> axis;
      for (std::size_t i = 0; i < q.size(); ++i)
        if (std::abs(std::abs(q[i]) - 1.0) < 1e-15) axis = i;
      if (rep.weak.holds == Tri::False && axis) {
        const Witness w{rep.weak.x, *axis, rep.weak.lambda, rep.weak.omega};
        if (auto ce = falsify(field, profile, w, opts.falsify)) {
          rep.integral.holds = Tri::False;
          rep.integral.kappa = ce->value.lhs / ce->value.rhs;
          rep.integral.basis = "ramp counterexample";
        }
      }
    }
  }

  // implication order, up to the inconclusive band
  if (rep.strong.holds == Tri::True && rep.integral.holds == Tri::False)
    rep.consistency_flags.push_back("strong holds but integral fails");
  if (rep.strong.holds == Tri::True && rep.weak.holds == Tri::False)
    rep.consistency_flags.push_back("strong holds but weak fails");
  if (rep.per_h && rep.integral.holds == Tri::True && rep.weak.holds == Tri::False)
    rep.consistency_flags.push_back("integral holds but weak fails");
  if (rep.per_h && rep.integral.holds == Tri::False && rep.weak.holds == Tri::True)
    rep.consistency_flags.push_back("weak holds but integral fails");
  if (!box.bounded()) rep.notes.push_back("unbounded domain: sampled verdicts only");
  return rep;
}

struct HarnessCase {
  Tri weak = Tri::Inconclusive;
  Tri per_axis = Tri::Inconclusive;  // AND over h of the per-axis strict criteria
  double weak_margin = 0.0;
  double per_axis_margin = 0.0;
  bool agree = true;
};

struct HarnessReport {
  std::size_t trials = 0;
  std::size_t disagreements = 0;
  std::size_t inconclusive = 0;
  std::vector<HarnessCase> cases;
  std::vector<std::string> details;
};

/// Weak ellipticity against the AND over h of the strict per-axis criteria
/// for one per-h field.
inline HarnessCase compare_weak_per_axis(const CoefficientField& field, const DomainBox& box,
                                         const LambdaProfile& profile, const ClassifyOptions& opts = {}) {
  if (!field.per_h()) throw Error(ErrorKind::Precondition, "the harness needs a per-h field");
  HarnessCase c;
  const auto rep = classify(field, box, profile, opts);
  c.weak = rep.weak.holds;
  c.weak_margin = rep.weak.kappa;
  c.per_axis = rep.integral.holds;
  c.per_axis_margin = rep.integral.kappa;
  c.agree = c.weak == c.per_axis || c.weak == Tri::Inconclusive || c.per_axis == Tri::Inconclusive;
  return c;
}

/// Random constant per-h fields: diagonally dominant complex blocks whose
/// diagonal spread is wide enough that both outcomes occur.
inline CoefficientField random_per_h_field(std::mt19937_64& rng, std::size_t m, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> diag(0.0, 1.0);
  std::vector<CMatrix> per_h;
  for (std::size_t h = 0; h < n; ++h) {
    CMatrix a(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) a(i, j) = cplx(0.25 * g(rng), 0.25 * g(rng));
    for (std::size_t i = 0; i < m; ++i) a(i, i) += std::exp(5.0 * diag(rng) - 1.5);
    per_h.push_back(a);
  }
  return CoefficientField::constant_per_h(std::move(per_h));
}

/// `trials` random per-h instances with p drawn from `powers`.
inline HarnessReport equivalence_harness(std::size_t trials, std::size_t m, std::size_t n,
                                         const std::vector<double>& powers, std::uint64_t seed,
                                         const ClassifyOptions& opts = {}) {
  if (powers.empty()) throw Error(ErrorKind::Precondition, "equivalence_harness needs at least one exponent");
  std::mt19937_64 rng(seed);
  HarnessReport rep;
  const auto box = DomainBox::cube(n, 0.0, 1.0, 3);
  for (std::size_t i = 0; i < trials; ++i) {
    const double p = powers[i % powers.size()];
    const auto prof = lambda_profile(PhiSpec::power(p));
    const auto field = random_per_h_field(rng, m, n);
    auto c = compare_weak_per_axis(field, box, prof, opts);
    ++rep.trials;
    if (c.weak == Tri::Inconclusive || c.per_axis == Tri::Inconclusive) ++rep.inconclusive;
    if (!c.agree) {
      ++rep.disagreements;
      std::ostringstream os;
      os << "trial " << i << " p=" << p << ": weak " << to_string(c.weak) << " (" << c.weak_margin
         << "), per-axis " << to_string(c.per_axis) << " (" << c.per_axis_margin << ")";
      rep.details.push_back(os.str());
    }
    rep.cases.push_back(c);
  }
  return rep;
}

inline void write_report(std::ostream& out, const EllipticityReport& r) {
  using detail::format_double;
  using detail::join_complex;
  const auto join_real = [](const RVector& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
    return s;
  };
  out << "strong.holds = " << to_string(r.strong.holds) << '\n'
      << "strong.kappa = " << format_double(r.strong.kappa) << '\n';
  if (!r.strong.x.empty()) {
    out << "strong.witness.x = " << join_real(r.strong.x) << '\n';
    for (std::size_t h = 0; h < r.strong.xi.size(); ++h)
      out << "strong.witness.xi." << h + 1 << " = " << join_complex(r.strong.xi[h]) << '\n';
    out << "strong.witness.omega = " << join_complex(r.strong.omega) << '\n';
  }
  out << "integral.holds = " << to_string(r.integral.holds) << '\n'
      << "integral.kappa = " << format_double(r.integral.kappa) << '\n'
      << "integral.basis = " << r.integral.basis << '\n'
      << "weak.holds = " << to_string(r.weak.holds) << '\n'
      << "weak.kappa = " << format_double(r.weak.kappa) << '\n';
  if (!r.weak.x.empty()) {
    out << "weak.witness.x = " << join_real(r.weak.x) << '\n'
        << "weak.witness.q = " << join_real(r.weak.q) << '\n'
        << "weak.witness.lambda = " << join_complex(r.weak.lambda) << '\n'
        << "weak.witness.omega = " << join_complex(r.weak.omega) << '\n';
  }
  out << "per_h = " << (r.per_h ? "true" : "false") << '\n'
      << "lambda_inf_sq = " << format_double(r.lambda_inf_sq) << '\n';
  for (const auto& f : r.consistency_flags) out << "flag = " << f << '\n';
  for (const auto& n : r.notes) out << "note = " << n << '\n';
}

}  // namespace phidiss
