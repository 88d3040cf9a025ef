#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "phidiss/dissipativity.hpp"
#include "phidiss/error.hpp"
#include "phidiss/field.hpp"
#include "phidiss/phi.hpp"

namespace phidiss {

/// Everything a CLI run needs from the INI file.
///
///   [phi]     family = power | tabulated; p; grid_path; r; s0; s1
///   [domain]  n; bounds = "a1 b1; a2 b2" (inf / -inf allowed); grid = "N" or "N1 N2"
///   [field]   path = field file, or A1 = "1 (0,2); (0,-2) 3", A2 = ... (constant per axis)
///   [witness] x = "0.5"; h = 1 (1-based); lambda = "(1,0) 0"; omega = "0 (0,1)"
struct RunConfig {
  PhiSpec phi = PhiSpec::power(2.0);
  DomainBox domain;
  CoefficientField field = CoefficientField::constant_per_h({CMatrix::identity(1)});
  std::optional<Witness> witness;
  std::filesystem::path base;  // directory relative paths resolve against
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<std::string> tokens(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

inline double config_number(const std::string& text, const std::string& key) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw Error(ErrorKind::Config, key + ": not a number: '" + text + "'");
  return v;
}

inline std::size_t config_count(const std::string& text, const std::string& key) {
  const double v = config_number(text, key);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e9) throw Error(ErrorKind::Config, key + ": not a count: '" + text + "'");
  return static_cast<std::size_t>(v);
}

// "x" or "(re,im)"
inline cplx config_complex(const std::string& text, const std::string& key) {
  if (!text.empty() && text.front() == '(') {
    if (text.back() != ')') throw Error(ErrorKind::Config, key + ": unbalanced parenthesis in '" + text + "'");
    const auto parts = split(text.substr(1, text.size() - 2), ',');
    if (parts.size() != 2) throw Error(ErrorKind::Config, key + ": complex entry needs (re,im): '" + text + "'");
    return {config_number(parts[0], key), config_number(parts[1], key)};
  }
  return {config_number(text, key), 0.0};
}

inline CVector config_vector(const std::string& text, const std::string& key) {
  CVector v;
  for (const auto& t : tokens(text)) v.push_back(config_complex(t, key));
  if (v.empty()) throw Error(ErrorKind::Config, key + ": empty vector");
  return v;
}

// rows separated by ';'
inline CMatrix config_matrix(const std::string& text, const std::string& key) {
  const auto rows = split(text, ';');
  const std::size_t m = rows.size();
  CMatrix a(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto v = config_vector(rows[i], key);
    if (v.size() != m) throw Error(ErrorKind::Config, key + ": matrix is not square");
    for (std::size_t j = 0; j < m; ++j) a(i, j) = v[j];
  }
  return a;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::Config, "file not found: " + path.string());
  return path;
}

inline TabulatedGrid read_phi_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open " + path.string());
  TabulatedGrid g;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    CsvCursor cur;
    cur.line = lineno;
    split_csv(line, cur);
    if (cur.cells.size() != 3) throw ParseError("phi grid rows need s,phi,dphi", lineno, 1);
    // a header row is allowed
    if (g.s.empty() && cur.cells[0].find_first_of("0123456789") == std::string_view::npos) continue;
    g.s.push_back(parse_double(cur, 0));
    g.phi.push_back(parse_double(cur, 1));
    g.dphi.push_back(parse_double(cur, 2));
  }
  return g;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in, const std::filesystem::path& base = ".") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::Config, std::string("INI syntax: ") + e.what());
  }
  RunConfig cfg;
  cfg.base = base;
  const auto get = [&](const std::string& key) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(key)) return *v;
    return std::nullopt;
  };
  const auto need = [&](const std::string& key) {
    auto v = get(key);
    if (!v) throw Error(ErrorKind::Config, "missing key " + key);
    return *v;
  };

  // phi
  const std::string family = get("phi.family").value_or("power");
  const double s0 = get("phi.s0") ? detail::config_number(*get("phi.s0"), "phi.s0") : 1.0;
  std::optional<double> s1;
  if (auto v = get("phi.s1")) s1 = detail::config_number(*v, "phi.s1");
  if (family == "power") {
    cfg.phi = PhiSpec::power(detail::config_number(need("phi.p"), "phi.p"), s0, s1);
  } else if (family == "tabulated") {
    auto grid = detail::read_phi_grid(detail::resolve(base, need("phi.grid_path")));
    cfg.phi = PhiSpec::tabulated(std::move(grid), detail::config_number(need("phi.r"), "phi.r"), s0, s1);
  } else {
    throw Error(ErrorKind::Config, "phi.family must be power or tabulated, got '" + family + "'");
  }

  // domain
  const std::size_t n = detail::config_count(need("domain.n"), "domain.n");
  if (n == 0) throw Error(ErrorKind::Config, "domain.n must be at least 1");
  auto bounds = detail::split(get("domain.bounds").value_or("0 1"), ';');
  if (bounds.size() == 1) bounds.assign(n, bounds[0]);
  if (bounds.size() != n) throw Error(ErrorKind::Config, "domain.bounds needs one interval per axis");
  auto grid = detail::tokens(get("domain.grid").value_or(std::to_string(DomainBox::default_points(n))));
  if (grid.size() == 1) grid.assign(n, grid[0]);
  if (grid.size() != n) throw Error(ErrorKind::Config, "domain.grid needs one count or one per axis");
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ab = detail::tokens(bounds[i]);
    if (ab.size() != 2) throw Error(ErrorKind::Config, "domain.bounds: interval needs two ends");
    Axis a;
    const double lo = detail::config_number(ab[0], "domain.bounds");
    const double hi = detail::config_number(ab[1], "domain.bounds");
    a.lo_unbounded = std::isinf(lo);
    a.hi_unbounded = std::isinf(hi);
    a.lo = a.lo_unbounded ? 0.0 : lo;
    a.hi = a.hi_unbounded ? 0.0 : hi;
    if (a.lo_unbounded && lo > 0) throw Error(ErrorKind::Config, "domain.bounds: lower end cannot be +inf");
    if (a.hi_unbounded && hi < 0) throw Error(ErrorKind::Config, "domain.bounds: upper end cannot be -inf");
    a.points = detail::config_count(grid[i], "domain.grid");
    axes.push_back(a);
  }
  try {
    cfg.domain = DomainBox(std::move(axes));
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, std::string("domain: ") + e.what());
  }

  // field
  if (auto p = get("field.path")) {
    cfg.field = load_field(detail::resolve(base, *p).string());
  } else {
    std::vector<CMatrix> per_h;
    for (std::size_t h = 1; h <= n; ++h) {
      const std::string key = "field.A" + std::to_string(h);
      per_h.push_back(detail::config_matrix(need(key), key));
    }
    cfg.field = CoefficientField::constant_per_h(std::move(per_h));
  }
  if (cfg.field.n() != n) throw Error(ErrorKind::Config, "field dimension differs from domain.n");

  // witness
  if (tree.get_child_optional("witness")) {
    Witness w;
    for (const auto& t : detail::tokens(need("witness.x"))) w.x.push_back(detail::config_number(t, "witness.x"));
    const std::size_t h = detail::config_count(need("witness.h"), "witness.h");
    if (h == 0 || h > n) throw Error(ErrorKind::Config, "witness.h must lie in 1..n");
    w.h = h - 1;
    w.lambda = detail::config_vector(need("witness.lambda"), "witness.lambda");
    w.omega = detail::config_vector(need("witness.omega"), "witness.omega");
    if (w.x.size() != n || w.lambda.size() != cfg.field.m() || w.omega.size() != cfg.field.m())
      throw Error(ErrorKind::Config, "witness has the wrong shape");
    cfg.witness = std::move(w);
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config " + path);
  return parse_config(in, std::filesystem::path(path).parent_path());
}

}  // namespace phidiss
