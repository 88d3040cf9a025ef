#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "phidiss/error.hpp"
#include "phidiss/linalg.hpp"

namespace phidiss {

/// Samples (s, phi(s), phi'(s)) with s strictly increasing.
struct TabulatedGrid {
  RVector s;
  RVector phi;
  RVector dphi;
};

/// Weight function phi together with its growth data.
///
/// The Power family is phi(s) = s^(p-2). Tabulated specs interpolate
/// log(phi) against log(s) with cubic Hermite segments whose end slopes are
/// the exact log-slopes s phi'(s) / phi(s) at the nodes; power laws are
/// therefore reproduced exactly and positivity is automatic.
class PhiSpec {
 public:
  enum class Family { Power, Tabulated };

  static PhiSpec power(double p, double s0 = 1.0, std::optional<double> s1 = std::nullopt) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorKind::MalformedSpec, "power family needs p > 1");
    if (!(s0 > 0.0)) throw Error(ErrorKind::MalformedSpec, "s0 must be positive");
    PhiSpec spec;
    spec.family_ = Family::Power;
    spec.p_ = p;
    spec.r_ = p - 2.0;
    spec.s0_ = s0;
    spec.s1_ = s1.value_or(s0);
    if (spec.s1_ < spec.s0_) throw Error(ErrorKind::MalformedSpec, "s1 must be >= s0");
    return spec;
  }

  static PhiSpec tabulated(TabulatedGrid grid, double r, double s0, std::optional<double> s1 = std::nullopt) {
    const std::size_t n = grid.s.size();
    if (grid.phi.size() != n || grid.dphi.size() != n)
      throw Error(ErrorKind::MalformedSpec, "tabulated grid columns differ in length");
    if (n < 4) throw Error(ErrorKind::InsufficientData, "tabulated grid needs at least 4 points");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(grid.s[i] > 0.0)) throw Error(ErrorKind::MalformedSpec, "tabulated s must be positive");
      if (i > 0 && !(grid.s[i] > grid.s[i - 1]))
        throw Error(ErrorKind::MalformedSpec, "tabulated s must be strictly increasing");
      if (!(grid.phi[i] > 0.0) || !std::isfinite(grid.phi[i]))
        throw Error(ErrorKind::MalformedSpec, "non-positive phi value at s = " + std::to_string(grid.s[i]));
      if (!std::isfinite(grid.dphi[i])) throw Error(ErrorKind::MalformedSpec, "non-finite phi' value");
    }
    if (!(r > -1.0)) throw Error(ErrorKind::MalformedSpec, "growth exponent r must exceed -1");
    if (!(s0 > 0.0)) throw Error(ErrorKind::MalformedSpec, "s0 must be positive");

    PhiSpec spec;
    spec.family_ = Family::Tabulated;
    spec.r_ = r;
    spec.s0_ = s0;
    spec.s1_ = s1.value_or(std::max(s0, 0.5 * grid.s.back()));
    if (spec.s1_ < spec.s0_) throw Error(ErrorKind::MalformedSpec, "s1 must be >= s0");
    spec.log_s_.resize(n);
    spec.log_phi_.resize(n);
    spec.slope_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      spec.log_s_[i] = std::log(grid.s[i]);
      spec.log_phi_[i] = std::log(grid.phi[i]);
      spec.slope_[i] = grid.s[i] * grid.dphi[i] / grid.phi[i];
    }
    spec.grid_ = std::move(grid);
    return spec;
  }

  Family family() const noexcept { return family_; }
  double p() const noexcept { return p_; }
  double r() const noexcept { return r_; }
  double s0() const noexcept { return s0_; }
  double s1() const noexcept { return s1_; }
  const TabulatedGrid& grid() const noexcept { return grid_; }

  /// Closed interval on which phi can be evaluated.
  std::pair<double, double> s_range() const {
    if (family_ == Family::Power) return {std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max()};
    return {grid_.s.front(), grid_.s.back()};
  }

  double phi(double s) const {
    if (family_ == Family::Power) return std::pow(s, p_ - 2.0);
    return std::exp(segment(s).first);
  }

  double dphi(double s) const {
    if (family_ == Family::Power) return (p_ - 2.0) * std::pow(s, p_ - 3.0);
    const auto [y, dy] = segment(s);
    return std::exp(y) * dy / s;
  }

  /// s phi'(s) / phi(s)
  double log_slope(double s) const {
    if (family_ == Family::Power) return p_ - 2.0;
    return segment(s).second;
  }

  /// (s phi(s))' = phi + s phi'
  double growth(double s) const { return phi(s) * (1.0 + log_slope(s)); }

  /// The defining ratio -s phi' / (s phi' + 2 phi), as a function of s.
  double lambda_at_s(double s) const {
    const double k = log_slope(s);
    return -k / (k + 2.0);
  }

 private:
  PhiSpec() = default;

  // (log phi, d log phi / d log s) at s
  std::pair<double, double> segment(double s) const {
    const double u = std::log(s);
    const std::size_t n = log_s_.size();
    const double tol = 1e-12 * std::max(1.0, std::abs(log_s_.back()));
    if (u < log_s_.front() - tol || u > log_s_.back() + tol)
      throw Error(ErrorKind::Precondition, "s = " + std::to_string(s) + " outside tabulated range");
    std::size_t i = static_cast<std::size_t>(std::upper_bound(log_s_.begin(), log_s_.end(), u) - log_s_.begin());
    i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
    const double h = log_s_[i + 1] - log_s_[i];
    const double tau = std::clamp((u - log_s_[i]) / h, 0.0, 1.0);
    const double t2 = tau * tau;
    const double t3 = t2 * tau;
    const double y0 = log_phi_[i], y1 = log_phi_[i + 1];
    const double m0 = slope_[i] * h, m1 = slope_[i + 1] * h;
    const double y = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + tau) * m0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
    const double dy = ((6 * t2 - 6 * tau) * y0 + (3 * t2 - 4 * tau + 1) * m0 + (-6 * t2 + 6 * tau) * y1 +
                       (3 * t2 - 2 * tau) * m1) /
                      h;
    return {y, dy};
  }

  Family family_ = Family::Power;
  double p_ = 2.0;
  double r_ = 0.0;
  double s0_ = 1.0;
  double s1_ = 1.0;
  TabulatedGrid grid_;
  RVector log_s_, log_phi_, slope_;
};

namespace detail {

/// Root of an increasing map f(s) = target on the spec's s-range.
/// Bisection (geometric while the bracket spans more than a factor 2),
/// stopping at a bracket width of 1e-13 * hi or after 200 halvings.
inline double solve_increasing(const std::function<double(double)>& f, double target, double lo_bound,
                               double hi_bound, const char* what) {
  if (!(target > 0.0) || !std::isfinite(target))
    throw NumericFailure(std::string(what) + ": target must be positive and finite", lo_bound, hi_bound);
  double lo = std::clamp(1.0, lo_bound, hi_bound);
  double hi = lo;
  int expand = 0;
  while (f(lo) > target) {
    if (lo <= lo_bound && f(lo) <= target * (1.0 + 1e-10)) return lo;
    if (lo <= lo_bound || ++expand > 2200) throw NumericFailure(std::string(what) + ": target below range", lo, hi);
    hi = lo;
    lo = std::max(lo / 2.0, lo_bound);
  }
  while (f(hi) < target) {
    if (hi >= hi_bound && f(hi) >= target * (1.0 - 1e-10)) return hi;
    if (hi >= hi_bound || ++expand > 2200) throw NumericFailure(std::string(what) + ": target above range", lo, hi);
    lo = hi;
    hi = std::min(hi * 2.0, hi_bound);
  }
  for (int it = 0; it < 200; ++it) {
    if (hi - lo <= 1e-13 * hi) return 0.5 * (lo + hi);
    const double mid = (hi > 2.0 * lo && lo > 0.0) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) return mid;
    if (f(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  if (hi - lo <= 1e-10 * hi) return 0.5 * (lo + hi);
  throw NumericFailure(std::string(what) + ": bisection did not converge", lo, hi);
}

inline double s_for_t(const PhiSpec& spec, double t) {
  const auto [lo, hi] = spec.s_range();
  if (spec.family() == PhiSpec::Family::Power) {
    // s^(p/2) = t, then polish through the general bisection contract.
    const double guess = std::pow(t, 2.0 / spec.p());
    if (std::isfinite(guess) && guess > 0.0) {
      return solve_increasing([&](double s) { return s * std::sqrt(spec.phi(s)); }, t,
                              std::max(lo, guess * 0.5), std::min(hi, guess * 2.0), "lambda_of_t");
    }
  }
  return solve_increasing([&](double s) { return s * std::sqrt(spec.phi(s)); }, t, lo, hi, "lambda_of_t");
}

inline double s_for_product(const PhiSpec& spec, double t) {
  const auto [lo, hi] = spec.s_range();
  if (spec.family() == PhiSpec::Family::Power) {
    const double guess = std::pow(t, 1.0 / (spec.p() - 1.0));
    if (std::isfinite(guess) && guess > 0.0) {
      return solve_increasing([&](double s) { return s * spec.phi(s); }, t, std::max(lo, guess * 0.5),
                              std::min(hi, guess * 2.0), "psi_of");
    }
  }
  return solve_increasing([&](double s) { return s * spec.phi(s); }, t, lo, hi, "psi_of");
}

}  // namespace detail

/// Lambda(t) with t = s sqrt(phi(s)).
inline double lambda_of_t(const PhiSpec& spec, double t) {
  if (!(t > 0.0)) throw Error(ErrorKind::Precondition, "lambda_of_t needs t > 0");
  return spec.lambda_at_s(detail::s_for_t(spec, t));
}

/// psi(t) with t psi(t) the inverse of s phi(s).
inline double psi_of(const PhiSpec& spec, double t) {
  if (!(t > 0.0)) throw Error(ErrorKind::Precondition, "psi_of needs t > 0");
  return detail::s_for_product(spec, t) / t;
}

/// psi'(t). With s = t psi(t), d log psi / d log t = -k / (1 + k) where k is
/// the log-slope of phi at s; this avoids the cancellation in 1/(s phi)' - psi.
inline double dpsi_of(const PhiSpec& spec, double t) {
  const double s = detail::s_for_product(spec, t);
  const double k = spec.log_slope(s);
  return -(s / t) * k / ((1.0 + k) * t);
}

struct ConditionCheck {
  int index = 0;  // 1..6
  bool passed = true;
  std::optional<std::size_t> first_failing_sample;
  double failing_s = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::array<ConditionCheck, 6> conditions{};
  double c1 = 0.0;  // fitted lower constant of the small-s growth bound
  double c2 = 0.0;  // fitted upper constant
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t samples = 0;
  std::vector<std::string> warnings;

  bool ok() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const ConditionCheck& c) { return c.passed; });
  }

  const ConditionCheck* first_failure() const {
    for (const auto& c : conditions)
      if (!c.passed) return &c;
    return nullptr;
  }
};

/// Checks the six admissibility conditions on a log-spaced sample grid over
/// (s0 * 1e-6, s1 * 1e3), clipped to the spec's evaluable range.
///
/// C1, C2 are the min/max of (s phi)'/s^r over samples below s0; the growth
/// condition fails when no sample lies below s0 or when C2/C1 > 1e3 (i.e. the
/// stated r is off by more than half a power over six decades).
inline ValidationReport validate_phi(const PhiSpec& spec, std::size_t samples = 256) {
  if (samples < 64) throw Error(ErrorKind::Precondition, "validate_phi needs at least 64 samples");

  ValidationReport report;
  for (int i = 0; i < 6; ++i) report.conditions[static_cast<std::size_t>(i)].index = i + 1;
  const auto [range_lo, range_hi] = spec.s_range();
  report.window_lo = std::max(spec.s0() * 1e-6, range_lo);
  report.window_hi = std::min(spec.s1() * 1e3, range_hi);
  report.samples = samples;
  if (!(report.window_hi > report.window_lo))
    throw Error(ErrorKind::InsufficientData, "validation window is empty for this spec");

  RVector s(samples), phi(samples), dphi(samples);
  const double llo = std::log(report.window_lo), lhi = std::log(report.window_hi);
  for (std::size_t i = 0; i < samples; ++i) {
    s[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(samples - 1));
    if (i == 0) s[i] = report.window_lo;
    if (i + 1 == samples) s[i] = report.window_hi;
    phi[i] = spec.phi(s[i]);
    dphi[i] = spec.dphi(s[i]);
    if (std::isfinite(phi[i]) && !(phi[i] > 0.0))
      throw Error(ErrorKind::MalformedSpec, "non-positive phi value at s = " + std::to_string(s[i]));
  }

  auto fail = [&](int cond, std::size_t i, std::string detail) {
    auto& c = report.conditions[static_cast<std::size_t>(cond - 1)];
    if (!c.passed) return;
    c.passed = false;
    c.first_failing_sample = i;
    c.failing_s = s[i];
    c.detail = std::move(detail);
  };

  // (i) C^1: finite values and derivatives
  for (std::size_t i = 0; i < samples; ++i)
    if (!std::isfinite(phi[i]) || !std::isfinite(dphi[i])) fail(1, i, "phi or phi' not finite");

  // (ii) (s phi)' > 0
  RVector g(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    g[i] = phi[i] + s[i] * dphi[i];
    if (!(g[i] > 0.0)) fail(2, i, "(s phi)' <= 0");
  }

  // (iii) s phi(s) strictly increasing; the range is only observable up to the window
  for (std::size_t i = 1; i < samples; ++i)
    if (!(s[i] * phi[i] > s[i - 1] * phi[i - 1])) fail(3, i, "s phi(s) not strictly increasing");
  if (s.front() * phi.front() > 1e-3)
    report.warnings.push_back("s phi(s) does not approach 0 inside the sampled window");
  if (s.back() * phi.back() < 1e3)
    report.warnings.push_back("s phi(s) does not grow past 1e3 inside the sampled window");

  // (iv) C1 s^r <= (s phi)' <= C2 s^r on (0, s0)
  {
    double c1 = std::numeric_limits<double>::infinity();
    double c2 = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < samples && s[i] < spec.s0(); ++i) {
      const double ratio = g[i] / std::pow(s[i], spec.r());
      if (!(ratio > 0.0) || !std::isfinite(ratio)) fail(4, i, "(s phi)'/s^r not positive and finite");
      c1 = std::min(c1, ratio);
      c2 = std::max(c2, ratio);
      ++count;
    }
    if (count == 0) {
      fail(4, 0, "no samples below s0");
    } else {
      report.c1 = c1;
      report.c2 = c2;
      if (c2 > 1e3 * c1) fail(4, 0, "(s phi)'/s^r varies by more than 1e3 below s0; r looks wrong");
      if (spec.r() == 0.0) {
        // finite positive phi(0+) and s phi'(s) -> 0
        if (std::abs(s[0] * dphi[0]) > 1e-2 * phi[0]) fail(4, 0, "r = 0 requires s phi'(s) -> 0");
      }
    }
  }

  // (v) phi' of constant sign beyond s1
  {
    bool seen_pos = false, seen_neg = false;
    for (std::size_t i = 0; i < samples; ++i) {
      if (s[i] < spec.s1()) continue;
      // log-slopes below 1e-10 count as zero (tabulated noise)
      const double tol = 1e-10 * phi[i] / s[i];
      if (dphi[i] > tol) seen_pos = true;
      if (dphi[i] < -tol) seen_neg = true;
      if (seen_pos && seen_neg) {
        fail(5, i, "phi' changes sign beyond s1");
        break;
      }
    }
  }

  // (vi) |s phi'/phi| non-decreasing
  {
    double prev = std::abs(s[0] * dphi[0] / phi[0]);
    for (std::size_t i = 1; i < samples; ++i) {
      const double cur = std::abs(s[i] * dphi[i] / phi[i]);
      if (cur < prev - 1e-9 * std::max(1.0, prev)) fail(6, i, "|s phi'/phi| decreases");
      prev = cur;
    }
  }
  return report;
}

/// Lambda over its whole range plus its two end limits.
class LambdaProfile {
 public:
  struct Sample {
    double t;
    double lambda;
  };

  /// Profile with Lambda(t) = value for every t (the power case, or a
  /// synthetic profile for experiments at a prescribed Lambda_inf).
  static LambdaProfile constant(double value) {
    if (!(std::abs(value) <= 1.0)) throw Error(ErrorKind::Precondition, "Lambda must lie in [-1, 1]");
    LambdaProfile prof;
    prof.constant_ = value;
    prof.lambda_zero_limit_ = value;
    prof.lambda_inf_ = value;
    prof.lambda_inf_sq_ = value * value;
    prof.cond_l_ = prof.lambda_inf_sq_ < 1.0;
    prof.range_min_ = prof.range_max_ = value;
    return prof;
  }

  double lambda_zero_limit() const noexcept { return lambda_zero_limit_; }
  /// Signed end value with the largest magnitude.
  double lambda_inf() const noexcept { return lambda_inf_; }
  double lambda_inf_sq() const noexcept { return lambda_inf_sq_; }
  bool cond_l() const noexcept { return cond_l_; }
  double range_min() const noexcept { return range_min_; }
  double range_max() const noexcept { return range_max_; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  const std::optional<PhiSpec>& spec() const noexcept { return spec_; }

  /// Lambda(t); outside the evaluable range the end limits are returned.
  double lambda_at(double t) const {
    if (constant_) return *constant_;
    if (!(t > 0.0)) return lambda_zero_limit_;
    if (t <= t_lo_) return t_lo_is_limit_ ? lambda_zero_limit_ : lambda_of_t(*spec_, t_lo_);
    if (t >= t_hi_) return t_hi_is_limit_ ? lambda_end_inf_ : lambda_of_t(*spec_, t_hi_);
    return lambda_of_t(*spec_, t);
  }

 private:
  friend LambdaProfile lambda_profile(const PhiSpec& spec);

  std::optional<double> constant_;
  std::optional<PhiSpec> spec_;
  double lambda_zero_limit_ = 0.0;
  double lambda_end_inf_ = 0.0;
  double lambda_inf_ = 0.0;
  double lambda_inf_sq_ = 0.0;
  bool cond_l_ = true;
  double range_min_ = 0.0;
  double range_max_ = 0.0;
  double t_lo_ = 0.0, t_hi_ = 0.0;
  bool t_lo_is_limit_ = true, t_hi_is_limit_ = true;
  std::vector<Sample> samples_;
  std::vector<std::string> warnings_;
};

namespace detail {

// Limit of the log-slope k at one end, from three decade-spaced values with
// k_c the outermost. Converged increments return k_c; geometrically
// contracting increments are summed; non-contracting ones mean k diverges
// (k -> +inf, Lambda -> -1) or runs down to its floor k -> -1 (Lambda -> 1).
inline double end_limit_lambda(double k_a, double k_b, double k_c) {
  const double d1 = k_b - k_a;
  const double d2 = k_c - k_b;
  if (std::abs(d2) <= 1e-10 * std::max(1.0, std::abs(k_c))) return -k_c / (k_c + 2.0);
  const double rho = (d1 != 0.0) ? d2 / d1 : 2.0;
  if (rho > 0.0 && rho <= 0.9) {
    const double k = std::max(k_c + d2 * rho / (1.0 - rho), -1.0);
    return -k / (k + 2.0);
  }
  if (rho <= 0.0) return -k_c / (k_c + 2.0);
  return d2 > 0.0 ? -1.0 : 1.0;
}

}  // namespace detail

/// Samples Lambda on t in [1e-12, 1e12] (clipped to the evaluable range, 8
/// points per decade of s), checks monotonicity, and extracts Lambda(0+),
/// Lambda(inf) and Lambda_inf^2.
inline LambdaProfile lambda_profile(const PhiSpec& spec) {
  LambdaProfile prof;
  prof.spec_ = spec;

  auto [s_lo, s_hi] = spec.s_range();
  const auto t_of = [&](double s) { return s * std::sqrt(spec.phi(s)); };
  if (spec.family() == PhiSpec::Family::Power) {
    s_lo = std::pow(1e-12, 2.0 / spec.p());
    s_hi = std::pow(1e12, 2.0 / spec.p());
  } else {
    if (t_of(s_lo) < 1e-12) s_lo = detail::s_for_t(spec, 1e-12);
    if (t_of(s_hi) > 1e12) s_hi = detail::s_for_t(spec, 1e12);
  }
  prof.t_lo_ = t_of(s_lo);
  prof.t_hi_ = t_of(s_hi);

  const double decades = std::log10(s_hi / s_lo);
  const std::size_t count = std::max<std::size_t>(9, static_cast<std::size_t>(std::ceil(decades * 8.0)) + 1);
  RVector s(count), k(count);
  for (std::size_t i = 0; i < count; ++i) {
    s[i] = s_lo * std::pow(s_hi / s_lo, static_cast<double>(i) / static_cast<double>(count - 1));
    k[i] = spec.log_slope(s[i]);
    const double lam = -k[i] / (k[i] + 2.0);
    prof.samples_.push_back({t_of(s[i]), lam});
  }

  // monotone with constant sign
  bool up = true, down = true;
  for (std::size_t i = 1; i < count; ++i) {
    const double d = prof.samples_[i].lambda - prof.samples_[i - 1].lambda;
    if (d < -1e-9) up = false;
    if (d > 1e-9) down = false;
  }
  if (!up && !down)
    throw Error(ErrorKind::InvariantViolation, "sampled Lambda is not monotone; check condition (vi) of the spec");

  // decade-spaced k values toward each end
  const auto k_at = [&](double sv) { return spec.log_slope(std::clamp(sv, s_lo, s_hi)); };
  const double d = std::min(10.0, std::pow(s_hi / s_lo, 1.0 / 3.0));
  prof.lambda_zero_limit_ = detail::end_limit_lambda(k_at(s_lo * d * d), k_at(s_lo * d), k_at(s_lo));
  prof.lambda_end_inf_ = detail::end_limit_lambda(k_at(s_hi / (d * d)), k_at(s_hi / d), k_at(s_hi));
  prof.t_lo_is_limit_ = true;
  prof.t_hi_is_limit_ = true;

  const double z2 = prof.lambda_zero_limit_ * prof.lambda_zero_limit_;
  const double i2 = prof.lambda_end_inf_ * prof.lambda_end_inf_;
  prof.lambda_inf_ = (z2 > i2) ? prof.lambda_zero_limit_ : prof.lambda_end_inf_;
  double sup_sq = std::max(z2, i2);
  prof.range_min_ = std::min(prof.lambda_zero_limit_, prof.lambda_end_inf_);
  prof.range_max_ = std::max(prof.lambda_zero_limit_, prof.lambda_end_inf_);
  for (const auto& smp : prof.samples_) {
    sup_sq = std::max(sup_sq, smp.lambda * smp.lambda);
    prof.range_min_ = std::min(prof.range_min_, smp.lambda);
    prof.range_max_ = std::max(prof.range_max_, smp.lambda);
  }
  prof.lambda_inf_sq_ = std::min(sup_sq, 1.0);
  prof.cond_l_ = prof.lambda_inf_sq_ < 1.0;

  if (spec.r() != 0.0) {
    const double expected = -spec.r() / (spec.r() + 2.0);
    if (std::abs(prof.lambda_zero_limit_ - expected) > 1e-2)
      prof.warnings_.push_back("Lambda(0+) = " + std::to_string(prof.lambda_zero_limit_) +
                               " differs from -r/(r+2) = " + std::to_string(expected));
  }
  // exact for the power family; spares a root solve per call
  if (spec.family() == PhiSpec::Family::Power) prof.constant_ = 2.0 / spec.p() - 1.0;
  return prof;
}

/// (Phi(s), Psi(s)): the Young function of phi and its conjugate.
inline std::pair<double, double> young_pair(const PhiSpec& spec, double s) {
  if (!(s >= 0.0)) throw Error(ErrorKind::Precondition, "young_pair needs s >= 0");
  if (s == 0.0) return {0.0, 0.0};

  const auto check = [](double val, double err, double a, double b) {
    if (!std::isfinite(val) || err > 1e-8 * std::max(std::abs(val), 1e-300))
      throw NumericFailure("young_pair: quadrature did not converge", a, b);
    return val;
  };

  if (spec.family() == PhiSpec::Family::Power) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    double err = 0.0;
    const double big_phi =
        check(integrator.integrate([&](double x) { return x * spec.phi(x); }, 0.0, s, 1e-10, &err), err, 0.0, s);
    const double big_psi = check(
        integrator.integrate(
                   // the inverse underflows long before x reaches the nodes tanh-sinh clusters at 0
                   [&](double x) { return x < 1e-100 * s ? 0.0 : detail::s_for_product(spec, x); }, 0.0, s,
                   1e-10, &err), err,
        0.0, s);
    return {big_phi, big_psi};
  }

  // Tabulated: integrate node segment by node segment in u = log(sigma), where
  // the interpolant is smooth. Below the first node the integrands follow
  // the end power law.
  const auto& nodes = spec.grid().s;
  const double lo = nodes.front();
  const double k_lo = spec.log_slope(lo);
  const auto segments = [&](const std::function<double(double)>& f, double b) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size() && nodes[i] < b; ++i) {
      const double ua = std::log(nodes[i]);
      const double ub = std::log(std::min(nodes[i + 1], b));
      double err = 0.0;
      const double val = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
          [&](double u) { return f(std::exp(u)) * std::exp(u); }, ua, ub, 8, 1e-12, &err);
      sum += check(val, err, nodes[i], nodes[i + 1]);
    }
    return sum;
  };

  const double big_phi = [&] {
    if (s <= lo) {
      const double phi_s = spec.phi(lo) * std::pow(s / lo, k_lo);
      return s * s * phi_s / (k_lo + 2.0);
    }
    return lo * lo * spec.phi(lo) / (k_lo + 2.0) + segments([&](double x) { return x * spec.phi(x); }, s);
  }();

  // Psi(t) = int_0^t sigma(x) dx with x = sigma phi(sigma), so
  // dx = (sigma phi)'(sigma) d sigma.
  const double t_lo = lo * spec.phi(lo);
  const double big_psi = [&] {
    // sigma(x) near 0 behaves like x^(1/(1+k))
    const double e = 1.0 / (1.0 + k_lo) + 1.0;
    if (s <= t_lo) return s * lo * std::pow(s / t_lo, 1.0 / (1.0 + k_lo)) / e;
    const double sigma_end = detail::s_for_product(spec, s);
    return t_lo * lo / e + segments([&](double x) { return x * spec.growth(x); }, sigma_end);
  }();
  return {big_phi, big_psi};
}

/// Tabulated spec for the conjugate weight psi, with growth exponent
/// -r/(r+1). Nodes span the conjugate validation window plus a decade on
/// each side, 16 per decade.
inline PhiSpec conjugate_spec(const PhiSpec& spec) {
  const double s0c = spec.s0() * spec.phi(spec.s0());
  double s1c = spec.s1() * spec.phi(spec.s1());
  if (s1c < s0c) s1c = s0c;
  const double t_lo = s0c * 1e-7;
  const double t_hi = s1c * 1e4;
  const std::size_t count = static_cast<std::size_t>(std::ceil(std::log10(t_hi / t_lo) * 16.0)) + 1;
  TabulatedGrid grid;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = t_lo * std::pow(t_hi / t_lo, static_cast<double>(i) / static_cast<double>(count - 1));
    grid.s.push_back(t);
    grid.phi.push_back(psi_of(spec, t));
    grid.dphi.push_back(dpsi_of(spec, t));
  }
  const double r = spec.r();
  return PhiSpec::tabulated(std::move(grid), -r / (r + 1.0), s0c, s1c);
}

}  // namespace phidiss
