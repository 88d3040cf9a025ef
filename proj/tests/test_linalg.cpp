#include <gtest/gtest.h>

#include <random>

#include "phidiss/linalg.hpp"

using namespace phidiss;

TEST(Linalg, InnerConjugatesSecondArgument) {
  CVector a{{1, 2}, {0, 1}};
  CVector b{{0, 1}, {3, 0}};
  // (1+2i)(-i) + (i)(3) = -i + 2 + 3i
  const cplx v = inner(a, b);
  EXPECT_DOUBLE_EQ(v.real(), 2.0);
  EXPECT_DOUBLE_EQ(v.imag(), 2.0);
}

TEST(Linalg, RealifiedMatrixMatchesComplexAction) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  CMatrix a(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) a(i, j) = {g(rng), g(rng)};
  CVector z{{g(rng), g(rng)}, {g(rng), g(rng)}, {g(rng), g(rng)}};
  const CVector az = a.apply(z);
  const RVector rz = realify(a).apply(realify(z));
  const RVector expected = realify(az);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(rz[i], expected[i], 1e-14);
  // Re<Az, z> = x^T R x
  EXPECT_NEAR(inner(az, z).real(), bilinear(realify(a), realify(z), realify(z)), 1e-13);
}

TEST(Linalg, JacobiDiagonalisesRandomSymmetric) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (std::size_t n : {1u, 2u, 5u, 8u}) {
    RMatrix a(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = g(rng);
    const auto eig = jacobi_eigen(a);
    for (std::size_t k = 0; k < n; ++k) {
      const RVector v = eig.vector(k);
      const RVector av = a.apply(v);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(av[i], eig.values[k] * v[i], 1e-12);
      if (k > 0) {
        EXPECT_LE(eig.values[k - 1], eig.values[k]);
      }
    }
  }
}

TEST(Linalg, JacobiKnownSpectrum) {
  RMatrix a(2);
  a(0, 0) = 2;
  a(0, 1) = a(1, 0) = 1;
  a(1, 1) = 2;
  const auto eig = jacobi_eigen(a);
  EXPECT_NEAR(eig.values[0], 1.0, 1e-15);
  EXPECT_NEAR(eig.values[1], 3.0, 1e-15);
}

TEST(Linalg, BlockTensorContraction) {
  std::vector<CMatrix> per_h{CMatrix::identity(2), CMatrix::identity(2) * cplx(3.0)};
  const auto t = BlockTensor::diagonal(per_h);
  const RVector q{1.0, 2.0};
  const CMatrix b = t.contract(q);
  EXPECT_DOUBLE_EQ(b(0, 0).real(), 13.0);
  EXPECT_DOUBLE_EQ(b(0, 1).real(), 0.0);
  EXPECT_THROW(t.contract(RVector{1.0}), Error);
}

TEST(Linalg, ShapeErrors) {
  CVector a(2), b(3);
  try {
    inner(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}
