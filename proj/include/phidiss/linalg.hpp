#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "phidiss/error.hpp"

namespace phidiss {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;
using RVector = std::vector<double>;

/// <a, b> = sum_i a_i conj(b_i)
inline cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::Shape, "inner: size mismatch");
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
  return s;
}

inline double norm(std::span<const cplx> a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void normalize(std::span<double> a) {
  const double n = norm(std::span<const double>(a.data(), a.size()));
  if (n > 0.0)
    for (auto& v : a) v /= n;
}

inline void normalize(std::span<cplx> a) {
  const double n = norm(std::span<const cplx>(a.data(), a.size()));
  if (n > 0.0)
    for (auto& v : a) v /= n;
}

/// (Re z, Im z) stacked; the inverse of `complexify`.
inline RVector realify(std::span<const cplx> z) {
  RVector x(2 * z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    x[i] = z[i].real();
    x[i + z.size()] = z[i].imag();
  }
  return x;
}

inline CVector complexify(std::span<const double> x) {
  const std::size_t m = x.size() / 2;
  CVector z(m);
  for (std::size_t i = 0; i < m; ++i) z[i] = {x[i], x[i + m]};
  return z;
}

/// Dense square matrix, row-major.
template <typename T>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, T fill = T{}) : n_(n), data_(n * n, fill) {}

  static SquareMatrix identity(std::size_t n) {
    SquareMatrix a(n);
    for (std::size_t i = 0; i < n; ++i) a(i, i) = T{1};
    return a;
  }

  static SquareMatrix diagonal(std::span<const T> d) {
    SquareMatrix a(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) a(i, i) = d[i];
    return a;
  }

  std::size_t size() const noexcept { return n_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  std::span<const T> data() const noexcept { return data_; }

  SquareMatrix transpose() const {
    SquareMatrix t(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  std::vector<T> apply(std::span<const T> x) const {
    if (x.size() != n_) throw Error(ErrorKind::Shape, "matrix-vector size mismatch");
    std::vector<T> y(n_, T{});
    for (std::size_t i = 0; i < n_; ++i) {
      T s{};
      for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  SquareMatrix& operator+=(const SquareMatrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  SquareMatrix& operator-=(const SquareMatrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  SquareMatrix& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend SquareMatrix operator+(SquareMatrix a, const SquareMatrix& b) { return a += b; }
  friend SquareMatrix operator-(SquareMatrix a, const SquareMatrix& b) { return a -= b; }
  friend SquareMatrix operator*(SquareMatrix a, T s) { return a *= s; }
  friend SquareMatrix operator*(T s, SquareMatrix a) { return a *= s; }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  void check_same(const SquareMatrix& o) const {
    if (o.n_ != n_) throw Error(ErrorKind::Shape, "matrix size mismatch");
  }

  std::size_t n_ = 0;
  std::vector<T> data_;
};

using CMatrix = SquareMatrix<cplx>;
using RMatrix = SquareMatrix<double>;

inline CMatrix adjoint(const CMatrix& a) {
  CMatrix t(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) t(j, i) = std::conj(a(i, j));
  return t;
}

inline CMatrix to_complex(const RMatrix& a) {
  CMatrix c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) c(i, j) = a(i, j);
  return c;
}

inline double max_abs(const CMatrix& a) {
  double s = 0.0;
  for (const auto& v : a.data()) s = std::max(s, std::abs(v));
  return s;
}

inline bool all_finite(const CMatrix& a) {
  return std::all_of(a.data().begin(), a.data().end(),
                     [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

/// Real 2m x 2m matrix acting on (Re z, Im z) exactly as `a` acts on z.
inline RMatrix realify(const CMatrix& a) {
  const std::size_t m = a.size();
  RMatrix r(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double re = a(i, j).real();
      const double im = a(i, j).imag();
      r(i, j) = re;
      r(i, j + m) = -im;
      r(i + m, j) = im;
      r(i + m, j + m) = re;
    }
  }
  return r;
}

inline RMatrix symmetric_part(const RMatrix& a) {
  RMatrix s(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

/// x^T a y
inline double bilinear(const RMatrix& a, std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += a(i, j) * y[j];
    s += x[i] * row;
  }
  return s;
}

struct SymmetricEigen {
  RVector values;  // ascending
  RMatrix vectors;  // column k pairs with values[k]

  RVector vector(std::size_t k) const {
    RVector v(vectors.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = vectors(i, k);
    return v;
  }
};

/// Cyclic Jacobi rotations for a real symmetric matrix. Only the upper
/// triangle is read.
inline SymmetricEigen jacobi_eigen(const RMatrix& input, int max_sweeps = 100) {
  const std::size_t n = input.size();
  RMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = input(i, j);
  RMatrix v = RMatrix::identity(n);

  double scale = 0.0;
  for (const double x : a.data()) scale = std::max(scale, std::abs(x));

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-30 * scale * scale || off == 0.0) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  SymmetricEigen out{RVector(n), RMatrix(n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

/// Coefficient tensor A^{hk}, h,k = 0..n-1, each block m x m.
class BlockTensor {
 public:
  BlockTensor() = default;
  BlockTensor(std::size_t n, std::size_t m) : n_(n), m_(m), blocks_(n * n, CMatrix(m)) {}

  /// A^{hk} = delta_hk A^h
  static BlockTensor diagonal(std::span<const CMatrix> per_h) {
    if (per_h.empty()) throw Error(ErrorKind::Shape, "BlockTensor::diagonal: no blocks");
    BlockTensor t(per_h.size(), per_h.front().size());
    for (std::size_t h = 0; h < per_h.size(); ++h) {
      if (per_h[h].size() != t.m_) throw Error(ErrorKind::Shape, "BlockTensor::diagonal: inconsistent m");
      t(h, h) = per_h[h];
    }
    return t;
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }

  CMatrix& operator()(std::size_t h, std::size_t k) { return blocks_[h * n_ + k]; }
  const CMatrix& operator()(std::size_t h, std::size_t k) const { return blocks_[h * n_ + k]; }

  /// sum_{hk} A^{hk} q_h q_k
  CMatrix contract(std::span<const double> q) const {
    if (q.size() != n_) throw Error(ErrorKind::Shape, "BlockTensor::contract: q has wrong length");
    CMatrix b(m_);
    for (std::size_t h = 0; h < n_; ++h)
      for (std::size_t k = 0; k < n_; ++k) b += (*this)(h, k) * cplx(q[h] * q[k], 0.0);
    return b;
  }

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<CMatrix> blocks_;
};

}  // namespace phidiss
