#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "phidiss/error.hpp"
#include "phidiss/linalg.hpp"

namespace phidiss {

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool lo_unbounded = false;
  bool hi_unbounded = false;
  std::size_t points = 3;

  bool bounded() const noexcept { return !lo_unbounded && !hi_unbounded; }
};

/// Box domain with a tensor sample grid; row-major order, last axis fastest.
class DomainBox {
 public:
  DomainBox() = default;

  explicit DomainBox(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw Error(ErrorKind::Precondition, "domain needs at least one axis");
    for (const auto& a : axes_) {
      if (a.points < 3) throw Error(ErrorKind::Precondition, "sample grid needs at least 3 points per axis");
      if (a.bounded() && !(a.lo < a.hi)) throw Error(ErrorKind::Precondition, "axis bounds must satisfy a < b");
    }
  }

  /// [lo, hi]^n with `points` per axis.
  static DomainBox cube(std::size_t n, double lo, double hi, std::size_t points) {
    return DomainBox(std::vector<Axis>(n, Axis{lo, hi, false, false, points}));
  }

  static std::size_t default_points(std::size_t n) { return n == 1 ? 256 : 64; }

  std::size_t n() const noexcept { return axes_.size(); }
  const std::vector<Axis>& axes() const noexcept { return axes_; }
  const Axis& axis(std::size_t i) const { return axes_.at(i); }

  bool bounded() const {
    return std::all_of(axes_.begin(), axes_.end(), [](const Axis& a) { return a.bounded(); });
  }

  std::size_t size() const {
    std::size_t s = 1;
    for (const auto& a : axes_) s *= a.points;
    return s;
  }

  std::vector<std::size_t> shape() const {
    std::vector<std::size_t> s;
    for (const auto& a : axes_) s.push_back(a.points);
    return s;
  }

  /// Inclusive linspace; unbounded ends go through an arctan stretch and
  /// exclude the point at infinity.
  RVector axis_points(std::size_t i) const {
    const Axis& a = axes_.at(i);
    const std::size_t np = a.points;
    RVector x(np);
    const double half_pi = 0.5 * std::numbers::pi;
    for (std::size_t k = 0; k < np; ++k) {
      const double f = static_cast<double>(k) / static_cast<double>(np - 1);
      if (a.bounded()) {
        x[k] = (k + 1 == np) ? a.hi : a.lo + (a.hi - a.lo) * f;
      } else if (a.lo_unbounded && a.hi_unbounded) {
        const double th = -half_pi + std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(np + 1);
        x[k] = std::tan(th);
      } else if (a.hi_unbounded) {
        x[k] = a.lo + std::tan(half_pi * static_cast<double>(k) / static_cast<double>(np));
      } else {
        x[k] = a.hi - std::tan(half_pi * static_cast<double>(np - 1 - k) / static_cast<double>(np));
      }
    }
    return x;
  }

  std::vector<std::size_t> unflatten(std::size_t flat) const {
    std::vector<std::size_t> idx(n());
    for (std::size_t i = n(); i-- > 0;) {
      idx[i] = flat % axes_[i].points;
      flat /= axes_[i].points;
    }
    return idx;
  }

  std::size_t flatten(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < n(); ++i) flat = flat * axes_[i].points + idx[i];
    return flat;
  }

  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    for (std::size_t i = 0; i < n(); ++i)
      if (!axes_[i].bounded())
        w.push_back("axis " + std::to_string(i + 1) +
                    " is unbounded: sampled through an arctan stretch, uniformity in x is not certified");
    return w;
  }

  bool same_grid(const DomainBox& o) const {
    if (o.n() != n()) return false;
    for (std::size_t i = 0; i < n(); ++i) {
      const Axis &a = axes_[i], &b = o.axes_[i];
      if (a.points != b.points || a.lo_unbounded != b.lo_unbounded || a.hi_unbounded != b.hi_unbounded) return false;
      if (!a.lo_unbounded && a.lo != b.lo) return false;
      if (!a.hi_unbounded && a.hi != b.hi) return false;
    }
    return true;
  }

 private:
  std::vector<Axis> axes_;
};

/// A^h(x) (per-h operators) or A^{hk}(x) (general tensors).
class CoefficientField {
 public:
  enum class Kind { ConstantPerH, GridPerH, ConstantTensor, Callback };
  /// Returns n matrices (per-h) or n*n matrices, row-major in (h, k) (tensor).
  using Evaluator = std::function<std::vector<CMatrix>(std::span<const double>)>;

  static CoefficientField constant_per_h(std::vector<CMatrix> per_h) {
    if (per_h.empty()) throw Error(ErrorKind::Shape, "field needs at least one matrix");
    CoefficientField f;
    f.kind_ = Kind::ConstantPerH;
    f.m_ = per_h.front().size();
    f.n_ = per_h.size();
    for (const auto& a : per_h) f.check_matrix(a, "constant field");
    f.constant_ = std::move(per_h);
    return f;
  }

  /// values[flat point][h] on the sample grid of `box`.
  static CoefficientField grid_per_h(DomainBox box, std::vector<std::vector<CMatrix>> values) {
    if (values.size() != box.size()) throw Error(ErrorKind::Shape, "grid values do not match the box shape");
    if (values.empty() || values.front().size() != box.n())
      throw Error(ErrorKind::Shape, "grid field needs one matrix per axis at every point");
    CoefficientField f;
    f.kind_ = Kind::GridPerH;
    f.n_ = box.n();
    f.m_ = values.front().front().size();
    for (const auto& pt : values) {
      if (pt.size() != f.n_) throw Error(ErrorKind::Shape, "grid field needs one matrix per axis at every point");
      for (const auto& a : pt) f.check_matrix(a, "grid field");
    }
    f.grid_box_ = std::move(box);
    f.grid_ = std::move(values);
    return f;
  }

  static CoefficientField constant_tensor(BlockTensor t) {
    if (t.n() == 0 || t.m() == 0) throw Error(ErrorKind::Shape, "empty tensor");
    CoefficientField f;
    f.kind_ = Kind::ConstantTensor;
    f.n_ = t.n();
    f.m_ = t.m();
    for (std::size_t h = 0; h < t.n(); ++h)
      for (std::size_t k = 0; k < t.n(); ++k) f.check_matrix(t(h, k), "tensor field");
    f.tensor_ = std::move(t);
    return f;
  }

  static CoefficientField callback(std::size_t n, std::size_t m, Evaluator eval, bool per_h = true) {
    if (n == 0 || m == 0) throw Error(ErrorKind::Shape, "callback field needs n, m >= 1");
    CoefficientField f;
    f.kind_ = Kind::Callback;
    f.n_ = n;
    f.m_ = m;
    f.callback_per_h_ = per_h;
    f.eval_ = std::make_shared<Evaluator>(std::move(eval));
    return f;
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }
  bool per_h() const noexcept { return kind_ != Kind::ConstantTensor && (kind_ != Kind::Callback || callback_per_h_); }
  bool is_constant() const noexcept { return kind_ == Kind::ConstantPerH || kind_ == Kind::ConstantTensor; }
  const std::optional<DomainBox>& grid_box() const noexcept { return grid_box_; }
  const std::vector<CMatrix>& constant_matrices() const noexcept { return constant_; }
  const std::vector<std::vector<CMatrix>>& grid_values() const noexcept { return grid_; }
  const BlockTensor& tensor() const noexcept { return tensor_; }

  /// A^1(x), ..., A^n(x) for per-h fields.
  std::vector<CMatrix> evaluate(std::span<const double> x) const {
    if (x.size() != n_) throw Error(ErrorKind::Shape, "point has wrong dimension");
    if (!per_h()) throw Error(ErrorKind::Precondition, "tensor field has no per-axis matrices");
    switch (kind_) {
      case Kind::ConstantPerH:
        return constant_;
      case Kind::GridPerH:
        return interpolate(x);
      default:
        return call(x);
    }
  }

  /// A^{hk}(x); per-h fields give the block-diagonal tensor.
  BlockTensor evaluate_tensor(std::span<const double> x) const {
    if (x.size() != n_) throw Error(ErrorKind::Shape, "point has wrong dimension");
    if (kind_ == Kind::ConstantTensor) return tensor_;
    if (per_h()) {
      const auto per = evaluate(x);
      return BlockTensor::diagonal(per);
    }
    const auto flat = call(x);
    BlockTensor t(n_, m_);
    for (std::size_t h = 0; h < n_; ++h)
      for (std::size_t k = 0; k < n_; ++k) t(h, k) = flat[h * n_ + k];
    return t;
  }

 private:
  CoefficientField() = default;

  void check_matrix(const CMatrix& a, const char* what) const {
    if (a.size() != m_) throw Error(ErrorKind::Schema, std::string(what) + ": inconsistent m across matrices");
    if (!all_finite(a)) throw Error(ErrorKind::Shape, std::string(what) + ": non-finite entry");
  }

  std::vector<CMatrix> call(std::span<const double> x) const {
    auto out = (*eval_)(x);
    const std::size_t want = callback_per_h_ ? n_ : n_ * n_;
    bool ok = out.size() == want;
    for (const auto& a : out) ok = ok && a.size() == m_;
    if (!ok) {
      std::ostringstream os;
      os << "callback returned wrong shape at x = (";
      for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
      os << ")";
      throw Error(ErrorKind::Shape, os.str());
    }
    for (const auto& a : out)
      if (!all_finite(a)) throw Error(ErrorKind::Shape, "callback returned a non-finite entry");
    return out;
  }

  // multilinear in x between grid nodes; clamped outside the grid
  std::vector<CMatrix> interpolate(std::span<const double> x) const {
    const DomainBox& box = *grid_box_;
    std::vector<std::size_t> base(n_);
    RVector frac(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const RVector pts = box.axis_points(i);
      const double xi = std::clamp(x[i], pts.front(), pts.back());
      std::size_t j = static_cast<std::size_t>(std::upper_bound(pts.begin(), pts.end(), xi) - pts.begin());
      j = std::clamp<std::size_t>(j, 1, pts.size() - 1) - 1;
      base[i] = j;
      frac[i] = (xi - pts[j]) / (pts[j + 1] - pts[j]);
    }
    std::vector<CMatrix> out(n_, CMatrix(m_));
    std::vector<std::size_t> idx(n_);
    for (std::size_t corner = 0; corner < (std::size_t{1} << n_); ++corner) {
      double w = 1.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const bool up = (corner >> i) & 1u;
        idx[i] = base[i] + (up ? 1 : 0);
        w *= up ? frac[i] : 1.0 - frac[i];
      }
      if (w == 0.0) continue;
      const auto& vals = grid_[box.flatten(idx)];
      for (std::size_t h = 0; h < n_; ++h) out[h] += vals[h] * cplx(w, 0.0);
    }
    return out;
  }

  Kind kind_ = Kind::ConstantPerH;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  bool callback_per_h_ = true;
  std::vector<CMatrix> constant_;
  std::optional<DomainBox> grid_box_;
  std::vector<std::vector<CMatrix>> grid_;
  BlockTensor tensor_;
  std::shared_ptr<Evaluator> eval_;
};

struct FieldSample {
  std::size_t index = 0;
  RVector x;
  std::vector<CMatrix> per_h;   // per-h fields
  std::optional<BlockTensor> tensor;  // tensor fields
};

/// Visits every grid point of `box` in row-major order.
template <typename Fn>
void for_each_sample(const CoefficientField& field, const DomainBox& box, Fn&& fn) {
  if (field.n() != box.n()) throw Error(ErrorKind::Shape, "field and box dimensions differ");
  if (field.kind() == CoefficientField::Kind::GridPerH && !field.grid_box()->same_grid(box))
    throw Error(ErrorKind::Shape, "grid field sampled on a different grid");
  std::vector<RVector> pts(box.n());
  for (std::size_t i = 0; i < box.n(); ++i) pts[i] = box.axis_points(i);
  for (std::size_t flat = 0; flat < box.size(); ++flat) {
    FieldSample s;
    s.index = flat;
    const auto idx = box.unflatten(flat);
    s.x.resize(box.n());
    for (std::size_t i = 0; i < box.n(); ++i) s.x[i] = pts[i][idx[i]];
    if (field.kind() == CoefficientField::Kind::GridPerH)
      s.per_h = field.grid_values()[flat];
    else if (field.per_h())
      s.per_h = field.evaluate(s.x);
    else
      s.tensor = field.evaluate_tensor(s.x);
    fn(static_cast<const FieldSample&>(s));
  }
}

inline std::vector<FieldSample> sample_field(const CoefficientField& field, const DomainBox& box) {
  std::vector<FieldSample> out;
  out.reserve(box.size());
  for_each_sample(field, box, [&](const FieldSample& s) { out.push_back(s); });
  return out;
}

struct Slice {
  bool empty = true;
  std::optional<CoefficientField> field;  // 1-D: x_h -> A^h
  std::optional<DomainBox> box;           // the interval omega(y_h) with its grid
};

/// Restriction of A^h to the line through y_h parallel to axis h. `y` holds
/// the other n-1 coordinates in axis order. A y outside the projected box
/// gives the void slice.
inline Slice slice(const CoefficientField& field, const DomainBox& box, std::size_t h, std::span<const double> y) {
  if (h >= field.n()) throw Error(ErrorKind::Index, "slice axis out of range");
  if (!field.per_h()) throw Error(ErrorKind::Precondition, "slices are defined for per-h fields");
  if (field.n() != box.n()) throw Error(ErrorKind::Shape, "field and box dimensions differ");
  if (y.size() + 1 != field.n()) throw Error(ErrorKind::Shape, "slice needs n-1 transverse coordinates");

  RVector x(field.n());
  std::vector<std::size_t> fixed_idx(field.n(), 0);
  bool on_grid = field.kind() == CoefficientField::Kind::GridPerH;
  for (std::size_t i = 0, j = 0; i < field.n(); ++i) {
    if (i == h) continue;
    const Axis& a = box.axis(i);
    const double v = y[j++];
    if ((!a.lo_unbounded && v < a.lo) || (!a.hi_unbounded && v > a.hi)) return {};
    x[i] = v;
    if (on_grid) {
      const RVector pts = box.axis_points(i);
      const auto it = std::find(pts.begin(), pts.end(), v);
      if (it == pts.end())
        on_grid = false;
      else
        fixed_idx[i] = static_cast<std::size_t>(it - pts.begin());
    }
  }

  Slice out;
  out.empty = false;
  out.box = DomainBox(std::vector<Axis>{box.axis(h)});
  if (field.kind() == CoefficientField::Kind::ConstantPerH) {
    out.field = CoefficientField::constant_per_h({field.constant_matrices()[h]});
  } else if (on_grid) {
    std::vector<std::vector<CMatrix>> vals;
    for (std::size_t k = 0; k < box.axis(h).points; ++k) {
      fixed_idx[h] = k;
      vals.push_back({field.grid_values()[box.flatten(fixed_idx)][h]});
    }
    out.field = CoefficientField::grid_per_h(*out.box, std::move(vals));
  } else {
    out.field = CoefficientField::callback(1, field.m(), [field, x, h](std::span<const double> t) {
      RVector p = x;
      p[h] = t[0];
      return std::vector<CMatrix>{field.evaluate(p)[h]};
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Field files. CSV-compatible text:
//   m,<m>
//   n,<n>
//   kind,constant|grid|tensor
//   shape,<N1>,...,<Nn>            (grid)
//   axis,<i>,<lo>,<hi>             (grid, optional; default [0, 1])
// followed by rows
//   h,i,j,re,im                    (constant)
//   h,i,j,k1,...,kn,re,im          (grid; k 0-based grid indices)
//   h,k,i,j,re,im                  (tensor)
// h, k, i, j are 1-based. '#' starts a comment line. Missing entries are 0.

namespace detail {

struct CsvCursor {
  std::size_t line = 0;
  std::vector<std::string_view> cells;
  std::vector<std::size_t> columns;  // 1-based start column per cell
};

inline void split_csv(std::string_view text, CsvCursor& cur) {
  cur.cells.clear();
  cur.columns.clear();
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',') {
      std::string_view cell = text.substr(start, i - start);
      std::size_t col = start + 1;
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) {
        cell.remove_prefix(1);
        ++col;
      }
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
      cur.cells.push_back(cell);
      cur.columns.push_back(col);
      start = i + 1;
    }
  }
}

inline double parse_double(const CsvCursor& cur, std::size_t c) {
  const std::string_view s = cur.cells[c];
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("malformed number '" + std::string(s) + "'", cur.line,
                     cur.columns[c] + static_cast<std::size_t>(ptr - s.data()));
  return v;
}

inline std::size_t parse_index(const CsvCursor& cur, std::size_t c, std::size_t lo, std::size_t hi, const char* what) {
  const std::string_view s = cur.cells[c];
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("malformed integer '" + std::string(s) + "'", cur.line, cur.columns[c]);
  if (v < lo || v > hi)
    throw Error(ErrorKind::Schema, std::string(what) + " = " + std::to_string(v) + " out of range on line " +
                                       std::to_string(cur.line));
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline CoefficientField read_field(std::istream& in) {
  detail::CsvCursor cur;
  std::optional<std::size_t> m, n;
  std::string kind;
  std::vector<std::size_t> shape;
  std::vector<Axis> axes;
  struct Row {
    std::vector<std::size_t> idx;
    cplx value;
    std::size_t line;
  };
  std::vector<Row> rows;

  std::string line;
  bool body = false;
  while (std::getline(in, line)) {
    ++cur.line;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    detail::split_csv(line, cur);
    const std::string_view key = cur.cells[0];
    if (!body && (key == "m" || key == "n" || key == "kind" || key == "shape" || key == "axis")) {
      if (cur.cells.size() < 2) throw ParseError("header row needs a value", cur.line, line.size() + 1);
      if (key == "m") {
        m = detail::parse_index(cur, 1, 1, 64, "m");
      } else if (key == "n") {
        n = detail::parse_index(cur, 1, 1, 3, "n");
      } else if (key == "kind") {
        kind = std::string(cur.cells[1]);
        if (kind != "constant" && kind != "grid" && kind != "tensor")
          throw ParseError("unknown field kind '" + kind + "'", cur.line, cur.columns[1]);
      } else if (key == "shape") {
        shape.clear();
        for (std::size_t c = 1; c < cur.cells.size(); ++c) shape.push_back(detail::parse_index(cur, c, 3, 1 << 20, "shape"));
      } else {
        if (cur.cells.size() != 4) throw ParseError("axis row needs index, lo, hi", cur.line, 1);
        const std::size_t i = detail::parse_index(cur, 1, 1, 3, "axis");
        if (axes.size() < i) axes.resize(i);
        axes[i - 1].lo = detail::parse_double(cur, 2);
        axes[i - 1].hi = detail::parse_double(cur, 3);
      }
      continue;
    }
    body = true;
    if (!m || !n || kind.empty()) throw Error(ErrorKind::Schema, "field file header needs m, n and kind");
    std::size_t nidx = kind == "constant" ? 3 : kind == "tensor" ? 4 : 3 + *n;
    if (cur.cells.size() != nidx + 2)
      throw ParseError("expected " + std::to_string(nidx + 2) + " fields, found " + std::to_string(cur.cells.size()),
                       cur.line, cur.columns.back());
    Row r;
    r.line = cur.line;
    if (kind == "tensor") {
      r.idx = {detail::parse_index(cur, 0, 1, *n, "h"), detail::parse_index(cur, 1, 1, *n, "k"),
               detail::parse_index(cur, 2, 1, *m, "i"), detail::parse_index(cur, 3, 1, *m, "j")};
    } else {
      r.idx = {detail::parse_index(cur, 0, 1, *n, "h"), detail::parse_index(cur, 1, 1, *m, "i"),
               detail::parse_index(cur, 2, 1, *m, "j")};
      if (kind == "grid") {
        if (shape.size() != *n) throw Error(ErrorKind::Schema, "grid field needs a shape row with n entries");
        for (std::size_t a = 0; a < *n; ++a) r.idx.push_back(detail::parse_index(cur, 3 + a, 0, shape[a] - 1, "grid index"));
      }
    }
    r.value = {detail::parse_double(cur, nidx), detail::parse_double(cur, nidx + 1)};
    rows.push_back(std::move(r));
  }
  if (!m || !n || kind.empty()) throw Error(ErrorKind::Schema, "field file header needs m, n and kind");

  if (kind == "constant") {
    std::vector<CMatrix> per_h(*n, CMatrix(*m));
    for (const auto& r : rows) per_h[r.idx[0] - 1](r.idx[1] - 1, r.idx[2] - 1) = r.value;
    return CoefficientField::constant_per_h(std::move(per_h));
  }
  if (kind == "tensor") {
    BlockTensor t(*n, *m);
    for (const auto& r : rows) t(r.idx[0] - 1, r.idx[1] - 1)(r.idx[2] - 1, r.idx[3] - 1) = r.value;
    return CoefficientField::constant_tensor(std::move(t));
  }
  if (shape.size() != *n) throw Error(ErrorKind::Schema, "grid field needs a shape row with n entries");
  axes.resize(*n);
  for (std::size_t a = 0; a < *n; ++a) axes[a].points = shape[a];
  DomainBox box(axes);
  std::vector<std::vector<CMatrix>> values(box.size(), std::vector<CMatrix>(*n, CMatrix(*m)));
  for (const auto& r : rows) {
    std::vector<std::size_t> gi(r.idx.begin() + 3, r.idx.end());
    values[box.flatten(gi)][r.idx[0] - 1](r.idx[1] - 1, r.idx[2] - 1) = r.value;
  }
  return CoefficientField::grid_per_h(std::move(box), std::move(values));
}

inline CoefficientField load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open field file '" + path + "'");
  return read_field(in);
}

/// Canonical form: header, then every entry in (h, [k,] i, j[, grid]) order.
inline void write_field(std::ostream& out, const CoefficientField& f) {
  using detail::format_double;
  const auto entry = [&](const cplx& v) { return format_double(v.real()) + "," + format_double(v.imag()); };
  out << "m," << f.m() << "\n" << "n," << f.n() << "\n";
  switch (f.kind()) {
    case CoefficientField::Kind::ConstantPerH:
      out << "kind,constant\n";
      for (std::size_t h = 0; h < f.n(); ++h)
        for (std::size_t i = 0; i < f.m(); ++i)
          for (std::size_t j = 0; j < f.m(); ++j)
            out << h + 1 << "," << i + 1 << "," << j + 1 << "," << entry(f.constant_matrices()[h](i, j)) << "\n";
      break;
    case CoefficientField::Kind::ConstantTensor:
      out << "kind,tensor\n";
      for (std::size_t h = 0; h < f.n(); ++h)
        for (std::size_t k = 0; k < f.n(); ++k)
          for (std::size_t i = 0; i < f.m(); ++i)
            for (std::size_t j = 0; j < f.m(); ++j)
              out << h + 1 << "," << k + 1 << "," << i + 1 << "," << j + 1 << "," << entry(f.tensor()(h, k)(i, j))
                  << "\n";
      break;
    case CoefficientField::Kind::GridPerH: {
      const DomainBox& box = *f.grid_box();
      if (!box.bounded()) throw Error(ErrorKind::Precondition, "grid files need a bounded box");
      out << "kind,grid\nshape";
      for (const auto s : box.shape()) out << "," << s;
      out << "\n";
      for (std::size_t a = 0; a < box.n(); ++a)
        out << "axis," << a + 1 << "," << format_double(box.axis(a).lo) << "," << format_double(box.axis(a).hi) << "\n";
      for (std::size_t h = 0; h < f.n(); ++h)
        for (std::size_t i = 0; i < f.m(); ++i)
          for (std::size_t j = 0; j < f.m(); ++j)
            for (std::size_t flat = 0; flat < box.size(); ++flat) {
              out << h + 1 << "," << i + 1 << "," << j + 1;
              for (const auto k : box.unflatten(flat)) out << "," << k;
              out << "," << entry(f.grid_values()[flat][h](i, j)) << "\n";
            }
      break;
    }
    case CoefficientField::Kind::Callback:
      throw Error(ErrorKind::Precondition, "callback fields cannot be saved");
  }
}

inline void save_field(const std::string& path, const CoefficientField& f) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Config, "cannot write field file '" + path + "'");
  write_field(out, f);
}

}  // namespace phidiss
