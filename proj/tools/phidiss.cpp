// phidiss: check | lambda | falsify | report
//
// Exit codes
//   check    0 strict, 1 dissipative, 2 not dissipative, 3 inconclusive
//   falsify  0 nothing found, 2 counterexample found, 65 no witness available
//   all      64 configuration error, 70 numerical failure

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "phidiss/config.hpp"
#include "phidiss/dissipativity.hpp"
#include "phidiss/ellipticity.hpp"
#include "phidiss/oracle.hpp"
#include "phidiss/phi.hpp"

namespace {

using namespace phidiss;

constexpr int kConfigError = 64;
constexpr int kNoWitness = 65;
constexpr int kSoftware = 70;

struct Options {
  std::string config;
  std::uint64_t seed = 42;
  std::size_t starts = 16;
  std::size_t grid = 0;  // 0 keeps the config value
  double tol = 1e-7;
  std::string out;
  std::string csv;
  std::size_t budget = 12;
  double tmin = 1e-6;
  double tmax = 1e6;
};

CheckOptions check_options(const Options& o) {
  CheckOptions c;
  c.min.seed = o.seed;
  c.min.starts = o.starts;
  c.strict_tol = o.tol;
  c.dissipative_tol = std::min(1e-9, o.tol);
  return c;
}

RunConfig load(const Options& o) {
  RunConfig cfg = load_config(o.config);
  const auto report = validate_phi(cfg.phi);
  if (!report.ok()) {
    const auto* f = report.first_failure();
    throw Error(ErrorKind::Config, "phi violates condition " + std::to_string(f->index) + ": " + f->detail);
  }
  if (o.grid != 0) {
    auto axes = cfg.domain.axes();
    for (auto& a : axes) a.points = o.grid;
    cfg.domain = DomainBox(std::move(axes));
  }
  return cfg;
}

// stdout, and the --out file when given
void emit(const Options& o, const std::string& text) {
  std::cout << text;
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    if (!f) throw Error(ErrorKind::Config, "cannot write " + o.out);
    f << text;
  }
}

Verdict run_check(const RunConfig& cfg, const LambdaProfile& prof, const CheckOptions& c) {
  if (!cfg.field.per_h())
    throw Error(ErrorKind::Config, "check needs a per-axis field; use report for general tensors");
  return cfg.field.n() == 1 ? check_ode(cfg.field, cfg.domain, prof, c)
                            : check_pde_diagonal(cfg.field, cfg.domain, prof, c);
}

int exit_code(Status s) {
  switch (s) {
    case Status::StrictlyDissipative: return 0;
    case Status::Dissipative: return 1;
    case Status::NotDissipative: return 2;
    case Status::Inconclusive: return 3;
  }
  return 3;
}

int cmd_check(const Options& o) {
  const auto cfg = load(o);
  const auto prof = lambda_profile(cfg.phi);
  const auto v = run_check(cfg, prof, check_options(o));
  emit(o, verdict_record(v));
  return exit_code(v.status);
}

int cmd_lambda(const Options& o) {
  const auto cfg = load(o);
  const auto prof = lambda_profile(cfg.phi);
  if (!(o.tmin > 0.0 && o.tmax > o.tmin)) throw Error(ErrorKind::Config, "need 0 < tmin < tmax");
  const std::size_t count = o.grid != 0 ? o.grid : 49;
  if (count < 2) throw Error(ErrorKind::Config, "lambda grid needs at least two points");
  std::ostringstream os;
  os << "t,Lambda,Lambda_sq\n";
  for (std::size_t i = 0; i < count; ++i) {
    const double t = o.tmin * std::pow(o.tmax / o.tmin, static_cast<double>(i) / static_cast<double>(count - 1));
    const double l = prof.lambda_at(t);
    os << detail::format_double(t) << ',' << detail::format_double(l) << ',' << detail::format_double(l * l) << '\n';
  }
  os << "# lambda_inf_sq=" << detail::format_double(prof.lambda_inf_sq())
     << " cond_L=" << (prof.cond_l() ? "true" : "false") << '\n';
  if (!o.csv.empty()) {
    std::ofstream f(o.csv);
    if (!f) throw Error(ErrorKind::Config, "cannot write " + o.csv);
    f << os.str();
  }
  emit(o, os.str());
  return 0;
}

int cmd_falsify(const Options& o) {
  const auto cfg = load(o);
  const auto prof = lambda_profile(cfg.phi);
  std::optional<Witness> w = cfg.witness;
  std::optional<Verdict> verdict;
  if (!w && cfg.field.per_h()) {
    verdict = run_check(cfg, prof, check_options(o));
    w = verdict->witness;
  }
  if (!w) {
    std::cerr << "phidiss: falsify needs a witness: add a [witness] section or use a per-axis field\n";
    return kNoWitness;
  }
  FalsifyOptions fo;
  fo.budget = o.budget;
  fo.min = check_options(o).min;
  const auto ce = falsify(cfg.field, prof, *w, fo);

  std::ostringstream os;
  if (!ce) {
    os << "result = none within budget\n"
       << "budget = " << o.budget << '\n';
    if (verdict && verdict->status == Status::NotDissipative)
      os << "note = the algebraic witness is unconfirmed by the integral oracle\n";
    emit(o, os.str());
    return 0;
  }
  os << "result = counterexample\n"
     << "mu = " << detail::format_double(ce->mu) << '\n'
     << "R = " << detail::format_double(ce->R) << '\n';
  write_functional(os, ce->value);
  os << "witness.x =";
  for (double x : ce->witness.x) os << ' ' << detail::format_double(x);
  os << "\nwitness.h = " << ce->witness.h + 1 << '\n'
     << "witness.lambda = " << detail::join_complex(ce->witness.lambda) << '\n'
     << "witness.omega = " << detail::join_complex(ce->witness.omega) << '\n';
  emit(o, os.str());
  if (!o.csv.empty()) {
    std::ofstream f(o.csv);
    if (!f) throw Error(ErrorKind::Config, "cannot write " + o.csv);
    // the ramp lives on [-R, R]; the interesting part is near the centre
    write_test_function(f, ce->function, 201);
  }
  return 2;
}

int cmd_report(const Options& o) {
  const auto cfg = load(o);
  const auto prof = lambda_profile(cfg.phi);
  ClassifyOptions co;
  co.check = check_options(o);
  co.falsify.budget = o.budget;
  co.falsify.min = co.check.min;
  const auto rep = classify(cfg.field, cfg.domain, prof, co);
  std::ostringstream os;
  write_report(os, rep);
  emit(o, os.str());

  // margin map: per-axis min_P at Lambda_inf, or the axis contraction for tensors
  const std::size_t n = cfg.field.n();
  std::ostringstream map;
  for (std::size_t i = 0; i < n; ++i) map << 'x' << i + 1 << ',';
  for (std::size_t h = 0; h < n; ++h) map << "margin_h" << h + 1 << ',';
  map << "margin_min\n";
  const double lam = prof.cond_l() ? prof.lambda_inf() : 0.0;
  std::optional<RVector> cached;
  const auto row = [&](const FieldSample& s) {
    if (!cached || !cfg.field.is_constant()) {
      RVector m(n);
      for (std::size_t h = 0; h < n; ++h) {
        const CMatrix a = s.tensor ? (*s.tensor)(h, h) : s.per_h[h];
        m[h] = prof.cond_l() ? detail::point_margin(a, lam, co.check).margin : -std::numeric_limits<double>::infinity();
      }
      cached = m;
    }
    for (double x : s.x) map << detail::format_double(x) << ',';
    double lo = std::numeric_limits<double>::infinity();
    for (double m : *cached) {
      map << detail::format_double(m) << ',';
      lo = std::min(lo, m);
    }
    map << detail::format_double(lo) << '\n';
  };
  for_each_sample(cfg.field, cfg.domain, row);
  if (!o.csv.empty()) {
    std::ofstream f(o.csv);
    if (!f) throw Error(ErrorKind::Config, "cannot write " + o.csv);
    f << map.str();
  } else {
    std::cout << '\n' << map.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional dissipativity and ellipticity checks for matrix elliptic operators"};
  app.require_subcommand(1);
  Options o;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI run configuration")->required();
    sub->add_option("--seed", o.seed, "seed for random starts")->capture_default_str();
    sub->add_option("--starts", o.starts, "random starts per minimisation (>= 8)")->capture_default_str();
    sub->add_option("--grid", o.grid, "sample points per axis (lambda: number of t values)");
    sub->add_option("--tol", o.tol, "strictness threshold on the margin")->capture_default_str();
    sub->add_option("--out", o.out, "also write the record to this file");
  };
  auto* check = app.add_subcommand("check", "classify dissipativity of a per-axis field");
  common(check);
  auto* lambda = app.add_subcommand("lambda", "tabulate Lambda(t)");
  common(lambda);
  lambda->add_option("--csv", o.csv, "write the table here as well");
  lambda->add_option("--tmin", o.tmin, "smallest t")->capture_default_str();
  lambda->add_option("--tmax", o.tmax, "largest t")->capture_default_str();
  auto* fals = app.add_subcommand("falsify", "search a ramp counterexample from a witness");
  common(fals);
  fals->add_option("--budget", o.budget, "number of (mu, R) instances")->capture_default_str();
  fals->add_option("--csv", o.csv, "dump the counterexample test function");
  auto* report = app.add_subcommand("report", "strong / integral / weak ellipticity and a margin map");
  common(report);
  report->add_option("--budget", o.budget, "falsifier budget for general tensors")->capture_default_str();
  report->add_option("--csv", o.csv, "margin map destination (stdout otherwise)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    if (*check) return cmd_check(o);
    if (*lambda) return cmd_lambda(o);
    if (*fals) return cmd_falsify(o);
    if (*report) return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "phidiss: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::NumericFailure:
      case ErrorKind::InvariantViolation:
      case ErrorKind::UnsupportedRegime: return kSoftware;
      default: return kConfigError;
    }
  } catch (const std::exception& e) {
    std::cerr << "phidiss: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}
