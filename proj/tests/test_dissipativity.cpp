#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "phidiss/dissipativity.hpp"

using namespace phidiss;

namespace {

const double kLow = 7.0 - 4.0 * std::sqrt(3.0);
const double kHigh = 7.0 + 4.0 * std::sqrt(3.0);

CMatrix diag2(double a, double b) {
  CMatrix d(2);
  d(0, 0) = a;
  d(1, 1) = b;
  return d;
}

CoefficientField constant(std::vector<CMatrix> m) { return CoefficientField::constant_per_h(std::move(m)); }

const DomainBox kLine = DomainBox::cube(1, 0.0, 1.0, 16);

LambdaProfile p_profile(double p) { return lambda_profile(PhiSpec::power(p)); }

CMatrix random_spd(std::mt19937_64& rng, std::size_t m) {
  std::normal_distribution<double> g;
  CMatrix b(m), a(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) b(i, j) = g(rng);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      cplx s = 0;
      for (std::size_t k = 0; k < m; ++k) s += b(i, k) * b(j, k);
      a(i, j) = s + (i == j ? 0.05 : 0.0);
    }
  return a;
}

}  // namespace

TEST(Classify, Bands) {
  EXPECT_EQ(classify_margin(-1e-6, true), Status::NotDissipative);
  EXPECT_EQ(classify_margin(-1e-8, true), Status::Inconclusive);
  EXPECT_EQ(classify_margin(-1e-10, true), Status::Dissipative);
  EXPECT_EQ(classify_margin(5e-8, true), Status::Dissipative);
  EXPECT_EQ(classify_margin(1e-3, true), Status::StrictlyDissipative);
  EXPECT_EQ(classify_margin(1e-3, false), Status::Dissipative);
}

TEST(CheckOde, IdentityIsStrict) {
  const auto v = check_ode(constant({CMatrix::identity(2)}), kLine, p_profile(4));
  EXPECT_EQ(v.status, Status::StrictlyDissipative);
  EXPECT_NEAR(v.margin, 0.75, 1e-8);
  EXPECT_NEAR(v.kappa, 1.0, 1e-8);
  EXPECT_NEAR(v.kappa_prime, (1 - 0.25) * v.kappa, 1e-12);
  EXPECT_EQ(v.certified_points, 16u);
}

TEST(CheckOde, ViolationCarriesWitness) {
  const auto v = check_ode(constant({diag2(1, 16)}), kLine, p_profile(4));
  EXPECT_EQ(v.status, Status::NotDissipative);
  ASSERT_TRUE(v.witness.has_value());
  EXPECT_NEAR(eval_P(diag2(1, 16), -0.5, v.witness->lambda, v.witness->omega), v.margin, 1e-9);
}

TEST(CheckOde, QuadraticCaseIsPositivity) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 30; ++i) {
    CMatrix a(2);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) a(r, c) = {g(rng), g(rng)};
    const double mu = jacobi_eigen(symmetric_part(realify(a))).values[0];
    if (std::abs(mu) < 1e-6) continue;
    const auto v = check_ode(constant({a}), kLine, p_profile(2));
    EXPECT_EQ(passes(v.status), mu >= 0) << mu;
    EXPECT_NEAR(v.margin, mu, 1e-8);
  }
}

TEST(CheckOde, RejectsHigherDimension) {
  EXPECT_THROW(check_ode(constant({CMatrix::identity(2), CMatrix::identity(2)}), DomainBox::cube(2, 0, 1, 3),
                         p_profile(4)),
               Error);
}

TEST(CheckOde, VariableFieldFindsWorstPoint) {
  // diag(1, 1 + 20 x^2) crosses the upper root inside [0, 1]
  const auto f = CoefficientField::callback(1, 2, [](std::span<const double> x) {
    return std::vector<CMatrix>{diag2(1, 1 + 20 * x[0] * x[0])};
  });
  const auto v = check_ode(f, kLine, p_profile(4));
  EXPECT_EQ(v.status, Status::NotDissipative);
  EXPECT_EQ(v.witness->x[0], 1.0);
}

TEST(CheckPde, IdentityPerAxis) {
  for (double p : {3.0, 4.0, 10.0}) {
    const double l2 = std::pow(2 / p - 1, 2);
    const auto v = check_pde_diagonal(constant({CMatrix::identity(2), CMatrix::identity(2)}),
                                      DomainBox::cube(2, 0, 1, 4), p_profile(p));
    EXPECT_EQ(v.status, Status::StrictlyDissipative);
    EXPECT_NEAR(v.margin, 1 - l2, 1e-8);
  }
}

TEST(CheckPde, ViolationInSecondAxis) {
  const auto v =
      check_pde_diagonal(constant({diag2(1, 2), diag2(1, 0.05)}), DomainBox::cube(2, 0, 1, 4), p_profile(4));
  EXPECT_EQ(v.status, Status::NotDissipative);
  EXPECT_EQ(v.witness->h, 1u);
  EXPECT_LT(0.05, kLow);
}

TEST(CheckPde, OneDimensionMatchesOde) {
  const auto f = constant({diag2(1, 9)});
  const auto a = check_ode(f, kLine, p_profile(4));
  const auto b = check_pde_diagonal(f, kLine, p_profile(4));
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.margin, b.margin);
}

TEST(CheckPde, RefusesTensor) {
  BlockTensor t(2, 1);
  t(0, 0)(0, 0) = t(1, 1)(0, 0) = 1;
  EXPECT_THROW(check_pde_diagonal(CoefficientField::constant_tensor(t), DomainBox::cube(2, 0, 1, 3), p_profile(4)),
               Error);
}

TEST(CheckPde, MonotoneInLambda) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const auto f = constant({random_spd(rng, 2), random_spd(rng, 2)});
    const auto box = DomainBox::cube(2, 0, 1, 3);
    bool prev = true;
    for (double p : {2.0, 3.0, 4.0, 10.0}) {
      const bool ok = passes(check_pde_diagonal(f, box, p_profile(p)).status);
      EXPECT_TRUE(prev || !ok);
      prev = ok;
    }
  }
}

TEST(CheckPde, PositivityIsNecessary) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    CMatrix a(2);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) a(r, c) = {g(rng), 0.3 * g(rng)};
    a(0, 0) += 2.0;
    a(1, 1) += 2.0;
    const auto v = check_ode(constant({a}), kLine, p_profile(3));
    if (!passes(v.status)) continue;
    for (int k = 0; k < 100; ++k) {
      CVector l{{g(rng), g(rng)}, {g(rng), g(rng)}};
      EXPECT_GE(inner(a.apply(l), l).real(), -1e-9);
    }
  }
}

TEST(Fast, Examples) {
  const auto prof = p_profile(4);
  const auto edge = check_symmetric_fast(constant({diag2(1, kHigh)}), kLine, prof);
  ASSERT_TRUE(edge.verdict.has_value());
  EXPECT_EQ(edge.verdict->status, Status::Dissipative);
  EXPECT_EQ(check_symmetric_fast(constant({diag2(1, 14)}), kLine, prof).verdict->status, Status::NotDissipative);
  EXPECT_TRUE(passes(check_symmetric_fast(constant({CMatrix::identity(3)}), kLine, prof).verdict->status));
  const auto id = check_symmetric_fast(constant({CMatrix::identity(2)}), kLine, prof);
  EXPECT_NEAR(id.verdict->margin, std::sqrt(3.0), 1e-14);
}

TEST(Fast, FallsBackOnNonSymmetricOrIndefinite) {
  CMatrix a = diag2(1, 2);
  a(0, 1) = cplx(0, 0.5);
  EXPECT_FALSE(check_symmetric_fast(constant({a}), kLine, p_profile(4)).verdict.has_value());
  EXPECT_FALSE(check_symmetric_fast(constant({diag2(-1, 2)}), kLine, p_profile(4)).verdict.has_value());
}

TEST(Fast, AgreesWithGeneralPath) {
  std::mt19937_64 rng(7);
  int compared = 0;
  for (int i = 0; i < 60; ++i) {
    const std::size_t m = 2 + static_cast<std::size_t>(i % 3);
    const auto f = constant({random_spd(rng, m), random_spd(rng, m)});
    const auto box = DomainBox::cube(2, 0, 1, 3);
    const auto prof = p_profile(i % 2 ? 4.0 : 10.0);
    const auto general = check_pde_diagonal(f, box, prof);
    if (std::abs(general.margin) <= 1e-6) continue;
    ++compared;
    const auto fast = check_symmetric_fast(f, box, prof);
    ASSERT_TRUE(fast.verdict.has_value());
    EXPECT_EQ(passes(fast.verdict->status), passes(general.status)) << i;
  }
  EXPECT_GT(compared, 50);
}

TEST(Kappa, IdentityShift) {
  const auto f = constant({CMatrix::identity(2)});
  const auto prof = p_profile(4);
  EXPECT_TRUE(passes(kappa_shift_check(f, kLine, prof, 0.99).status));
  EXPECT_FALSE(passes(kappa_shift_check(f, kLine, prof, 1.01).status));
  EXPECT_NEAR(supremal_kappa(f, kLine, prof), 1.0, 1e-7);
  const auto zero = kappa_shift_check(f, kLine, prof, 0.0);
  const auto base = check_ode(f, kLine, prof);
  EXPECT_EQ(zero.status, base.status);
  EXPECT_EQ(zero.margin, base.margin);
}

TEST(Kappa, BoundaryHasNoShift) {
  const auto f = constant({diag2(1, kHigh)});
  EXPECT_LT(supremal_kappa(f, kLine, p_profile(4)), 1e-8);
  EXPECT_FALSE(passes(kappa_shift_check(f, kLine, p_profile(4), 1e-8).status));
}

TEST(Kappa, MatchesEigenvalueSupremum) {
  // for real symmetric A the supremal shift is ((1+c) mu_1 - (1-c) mu_m) / (2c)
  const double c = std::sqrt(0.75);
  for (double t : {1.0, 3.0, 9.0, 13.0}) {
    const auto f = constant({diag2(1, t)});
    EXPECT_NEAR(supremal_kappa(f, kLine, p_profile(4)), ((1 + c) - (1 - c) * t) / (2 * c), 1e-7) << t;
  }
}

TEST(Kappa, RequiresLambdaCondition) {
  TabulatedGrid g;
  for (int i = 0; i <= 300; ++i) {
    const double s = std::pow(10.0, -7 + i / 40.0);
    if (s > 60) break;
    g.s.push_back(s);
    g.phi.push_back(std::exp(s));
    g.dphi.push_back(std::exp(s));
  }
  const auto prof = lambda_profile(PhiSpec::tabulated(g, 0.0, 1.0));
  try {
    kappa_shift_check(constant({CMatrix::identity(2)}), kLine, prof, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedRegime);
  }
  // without the Lambda condition positivity is only Dissipative
  EXPECT_EQ(check_ode(constant({CMatrix::identity(2)}), kLine, prof).status, Status::Dissipative);
}

TEST(Record, DeterministicText) {
  const auto v = check_ode(constant({diag2(1, 16)}), kLine, p_profile(4));
  const std::string a = verdict_record(v);
  EXPECT_EQ(a, verdict_record(check_ode(constant({diag2(1, 16)}), kLine, p_profile(4))));
  EXPECT_NE(a.find("status = NotDissipative"), std::string::npos);
  EXPECT_NE(a.find("witness.lambda = "), std::string::npos);
  EXPECT_NE(a.find("certified_points = 16"), std::string::npos);
}
