#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nlo/young.hpp"

using nlo::YoungFunction;

namespace {

std::vector<YoungFunction> families() {
  return {YoungFunction::pure_power(2.0), YoungFunction::pure_power(3.0),
          YoungFunction::pure_power(1.5), YoungFunction::power_sum({{0.5, 2.0}, {0.5, 4.0}}),
          YoungFunction::power_sum({{2.0, 1.5}, {3.0, 2.5}}), YoungFunction::log_perturbed(2.0, -0.5),
          YoungFunction::log_perturbed(3.0, 1.0)};
}

}  // namespace

TEST(YoungFunction, PurePowerTwo) {
  auto F = YoungFunction::pure_power(2.0);
  for (double s : {-3.0, -0.5, 0.0, 0.25, 2.0}) {
    EXPECT_EQ(F.Psi(s), s * s);
    EXPECT_EQ(F.psi(s), 2.0 * s);
  }
  EXPECT_EQ(F.p(), 2.0);
  EXPECT_EQ(F.q(), 2.0);
}

TEST(YoungFunction, PowerSumRatio) {
  auto F = YoungFunction::power_sum({{0.5, 2.0}, {0.5, 4.0}});
  EXPECT_DOUBLE_EQ(F.Psi(1.0), 1.0);
  EXPECT_EQ(F.q(), 2.0);
  EXPECT_EQ(F.p(), 4.0);
  for (double s : {0.1, 1.0, 10.0}) {
    const double expected = (2 * s * s + 4 * std::pow(s, 4)) / (s * s + std::pow(s, 4));
    EXPECT_NEAR(s * F.psi(s) / F.Psi(s), expected, 1e-13 * expected);
  }
}

TEST(YoungFunction, PowerSumRescaledToUnitAtOne) {
  auto F = YoungFunction::power_sum({{2.0, 1.5}, {3.0, 2.5}});
  EXPECT_NEAR(F.Psi(1.0), 1.0, 1e-14);
  EXPECT_GT(F.scale(), 0.0);
  EXPECT_LT(F.scale(), 1.0);
}

TEST(YoungFunction, LogPerturbedLowerExponentBySampling) {
  auto F = YoungFunction::log_perturbed(2.0, -0.5);
  EXPECT_NEAR(F.Psi(1.0), 1.0, 1e-13);
  double sampled_min = 1e300;
  for (double s : nlo::detail::log_grid(1e-6, 1e6, 64)) {
    // Logarithmic derivative by central differences, independent of psi().
    const double h = 1e-5 * s;
    const double d = (std::log(F.Psi(s + h)) - std::log(F.Psi(s - h))) / (std::log(s + h) - std::log(s - h));
    sampled_min = std::min(sampled_min, d);
  }
  EXPECT_LE(F.q(), sampled_min + 1e-6);
  EXPECT_NEAR(F.q(), sampled_min, 1e-3);
  EXPECT_EQ(F.p(), 2.0);
}

TEST(YoungFunction, RejectsOutsideClass) {
  EXPECT_THROW(YoungFunction::pure_power(1.0), nlo::InvalidArgument);
  EXPECT_THROW(YoungFunction::pure_power(0.5), nlo::InvalidArgument);
  EXPECT_THROW(YoungFunction::log_perturbed(1.2, -0.5), nlo::InvalidArgument);
  EXPECT_THROW(YoungFunction::log_perturbed(1.5, -0.5), nlo::InvalidArgument);
  EXPECT_THROW(YoungFunction::power_sum({{1.0, 1.0}, {1.0, 3.0}}), nlo::InvalidArgument);
  EXPECT_THROW(YoungFunction::power_sum({{-1.0, 2.0}}), nlo::InvalidArgument);
  try {
    YoungFunction::log_perturbed(1.2, -0.5);
  } catch (const nlo::InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("q > 1"), std::string::npos);
  }
}

TEST(YoungFunction, InvariantsOnSampleGrid) {
  for (const auto& F : families()) {
    SCOPED_TRACE(F.describe());
    EXPECT_EQ(F.Psi(0.0), 0.0);
    EXPECT_NEAR(F.Psi(1.0), 1.0, 1e-13);
    double prev = 0.0;
    for (double s : nlo::detail::log_grid(1e-4, 1e4, 333)) {
      EXPECT_EQ(F.Psi(s), F.Psi(-s));
      EXPECT_EQ(F.psi(-s), -F.psi(s));
      const double r = s * F.psi(s) / F.Psi(s);
      EXPECT_GE(r, F.q() - 1e-9);
      EXPECT_LE(r, F.p() + 1e-9);
      EXPECT_GE(F.psi(s), prev);
      prev = F.psi(s);
      const double a = std::pow(s, F.p()), b = std::pow(s, F.q());
      EXPECT_GE(F.Psi(s), std::min(a, b) * (1 - 1e-12));
      EXPECT_LE(F.Psi(s), std::max(a, b) * (1 + 1e-12));
    }
  }
}

TEST(YoungFunction, DerivativesMatchFiniteDifferences) {
  for (const auto& F : families()) {
    SCOPED_TRACE(F.describe());
    for (double s : {1e-3, 0.03, 0.7, 1.0, 2.5, 40.0}) {
      const double h = 1e-6 * s;
      const double d1 = (F.Psi(s + h) - F.Psi(s - h)) / (2 * h);
      const double d2 = (F.psi(s + h) - F.psi(s - h)) / (2 * h);
      EXPECT_NEAR(F.psi(s), d1, 1e-6 * std::abs(d1));
      EXPECT_NEAR(F.dpsi(s), d2, 1e-6 * std::abs(d2));
    }
  }
}

TEST(YoungFunction, CustomFamilyEstimatesBoundsWithMargin) {
  auto F = YoungFunction::custom([](double s) { return s * s * s; }, [](double s) { return 3 * s * s; },
                                 [](double s) { return 6 * s; }, "cube");
  EXPECT_TRUE(F.bounds_estimated());
  EXPECT_NEAR(F.p(), 3.0 * 1.01, 1e-12);
  EXPECT_NEAR(F.q(), 3.0 / 1.01, 1e-12);
  EXPECT_NEAR(F.Psi(-1.0), 1.0, 1e-14);
}

TEST(GammaBounds, PurePowerIsHomogeneous) {
  auto F = YoungFunction::pure_power(3.0);
  for (double s : {0.1, 0.5, 2.0, 7.0}) {
    auto g = nlo::gamma_bounds(F, s);
    EXPECT_NEAR(g.minus, std::pow(s, 3.0), 1e-12 * std::pow(s, 3.0));
    EXPECT_NEAR(g.plus, std::pow(s, 3.0), 1e-12 * std::pow(s, 3.0));
  }
}

TEST(GammaBounds, IdentityAtOne) {
  for (const auto& F : families()) {
    auto g = nlo::gamma_bounds(F, 1.0);
    EXPECT_EQ(g.minus, 1.0);
    EXPECT_EQ(g.plus, 1.0);
  }
}

TEST(GammaBounds, PowerSumLimits) {
  auto F = YoungFunction::power_sum({{0.5, 2.0}, {0.5, 4.0}});
  auto g = nlo::gamma_bounds(F, 2.0);
  EXPECT_NEAR(g.minus, 4.0, 1e-9);
  EXPECT_NEAR(g.plus, 16.0, 1e-9);
  EXPECT_THROW(nlo::gamma_bounds(F, 0.0), nlo::InvalidArgument);
}

TEST(GammaBounds, SandwichMonotoneAndSubmultiplicative) {
  const std::vector<double> ss{0.05, 0.3, 0.8, 1.5, 3.0, 12.0};
  for (const auto& F : families()) {
    SCOPED_TRACE(F.describe());
    double prev_m = 0.0, prev_p = 0.0;
    for (double s : ss) {
      auto g = nlo::gamma_bounds(F, s);
      const double a = std::pow(s, F.p()), b = std::pow(s, F.q());
      EXPECT_GE(g.minus, std::min(a, b) * (1 - 1e-9));
      EXPECT_LE(g.minus, g.plus);
      EXPECT_LE(g.plus, std::max(a, b) * (1 + 1e-9));
      EXPECT_GE(g.minus, prev_m);
      EXPECT_GE(g.plus, prev_p);
      prev_m = g.minus;
      prev_p = g.plus;
      // The x-grid stops at 1e-6 and 1e6, so suprema attained in a limit are
      // resolved to about 1e-6 relative.
      for (double t : ss) {
        auto gt = nlo::gamma_bounds(F, t);
        auto gst = nlo::gamma_bounds(F, s * t);
        EXPECT_LE(gst.plus, g.plus * gt.plus * (1 + 1e-5));
        EXPECT_GE(gst.minus, g.minus * gt.minus * (1 - 1e-5));
      }
    }
  }
}

TEST(Complementary, SquareIsSelfConjugate) {
  auto C = nlo::complementary(YoungFunction::pure_power(2.0));
  for (double b : {-2.0, 0.3, 1.0, 5.0}) EXPECT_NEAR(C(b), b * b, 1e-12 * (1 + b * b));
  EXPECT_NEAR(C.scale(), 2.0, 1e-12);
}

TEST(Complementary, PowerConjugateExponent) {
  for (double p : {1.5, 3.0, 4.0}) {
    auto C = nlo::complementary(YoungFunction::pure_power(p));
    const double pc = p / (p - 1);
    EXPECT_DOUBLE_EQ(C.p_conj(), pc);
    EXPECT_DOUBLE_EQ(C.q_conj(), pc);
    for (double b : {0.1, 0.9, 1.0, 3.0, 20.0}) EXPECT_NEAR(C(b), std::pow(b, pc), 1e-10 * std::pow(b, pc));
  }
}

TEST(Complementary, LegendreFormMatchesIntegralOfInverse) {
  auto F = YoungFunction::power_sum({{0.5, 2.0}, {0.5, 4.0}});
  auto C = nlo::complementary(F);
  for (double b : {0.2, 1.0, 3.0, 30.0}) {
    const double quad = nlo::detail::integrate([&](double t) { return C.psi_inverse(t); }, 0.0, b, {}, 1e-12);
    EXPECT_NEAR(C.conjugate(b), quad, 1e-9 * quad);
  }
}

TEST(Complementary, YoungInequalityAndEquality) {
  for (const auto& F : families()) {
    SCOPED_TRACE(F.describe());
    auto C = nlo::complementary(F);
    nlo::detail::Rng rng(17);
    for (int i = 0; i < 10000; ++i) {
      const double a = rng.uniform(-10, 10), b = rng.uniform(-10, 10);
      EXPECT_GE(F.Psi(a) + C.conjugate(b) - a * b, -1e-8);
    }
    for (int i = 0; i < 1000; ++i) {
      const double a = rng.uniform(-10, 10);
      const double b = F.psi(std::abs(a)) * (a < 0 ? -1.0 : 1.0);
      const double gap = F.Psi(a) + C.conjugate(b) - a * b;
      EXPECT_NEAR(gap, 0.0, 1e-8 * (1 + std::abs(a * b)));
    }
  }
}

TEST(Complementary, ConjugateExponentBounds) {
  for (const auto& F : families()) {
    SCOPED_TRACE(F.describe());
    auto C = nlo::complementary(F);
    EXPECT_NEAR(C(1.0), 1.0, 1e-12);
    for (double b : nlo::detail::log_grid(1e-3, 1e3, 8)) {
      const double r = b * C.dphi(b) / C(b);
      EXPECT_GE(r, C.p_conj() - 1e-7);
      EXPECT_LE(r, C.q_conj() + 1e-7);
    }
  }
}

TEST(Luxemburg, ZeroAndConstant) {
  auto F = YoungFunction::pure_power(3.0);
  std::vector<double> zero(10, 0.0);
  EXPECT_EQ(nlo::luxemburg_norm(F, zero, 0.1), 0.0);
  // u = c on 6 cells of volume 0.25: measure m = 1.5.
  std::vector<double> u(10, 0.0);
  for (int i = 0; i < 6; ++i) u[static_cast<std::size_t>(i)] = 2.5;
  EXPECT_NEAR(nlo::luxemburg_norm(F, u, 0.25), 2.5 * std::cbrt(1.5), 1e-9 * 2.5);
}

TEST(Luxemburg, ModularSandwich) {
  for (const auto& F : families()) {
    SCOPED_TRACE(F.describe());
    nlo::detail::Rng rng(5);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> u(32);
      const double amp = std::pow(10.0, rng.uniform(-2, 2));
      for (auto& v : u) v = rng.uniform(-amp, amp);
      const double h = 1.0 / 16;
      const double k = nlo::luxemburg_norm(F, u, h);
      double modular = 0;
      for (double v : u) modular += F.Psi(v) * h;
      auto g = nlo::gamma_bounds(F, k);
      EXPECT_GE(modular, g.minus * (1 - 1e-8));
      EXPECT_LE(modular, g.plus * (1 + 1e-8));
    }
  }
}

TEST(Clarkson, TrivialAndSquareCases) {
  auto F = YoungFunction::pure_power(2.0);
  auto r0 = nlo::clarkson_gap(F, 0.7, 0.7);
  EXPECT_EQ(r0.lhs, 0.0);
  ASSERT_TRUE(r0.rhs1.has_value());
  EXPECT_EQ(*r0.rhs1, 0.0);
  auto r = nlo::clarkson_gap(F, 1.0, -1.0);
  EXPECT_DOUBLE_EQ(r.lhs, 8.0);
  EXPECT_DOUBLE_EQ(*r.rhs1, 4.0);
}

TEST(Clarkson, ConditionsForPowers) {
  nlo::ClarksonCalculus c3(YoungFunction::pure_power(3.0));
  EXPECT_TRUE(c3.conditions().raizconvex);
  EXPECT_FALSE(c3.conditions().psi_concave);
  EXPECT_FALSE(c3.conditions().concavemas);
  nlo::ClarksonCalculus c15(YoungFunction::pure_power(1.5));
  EXPECT_FALSE(c15.conditions().raizconvex);
  EXPECT_TRUE(c15.conditions().psi_concave);
  EXPECT_TRUE(c15.conditions().concavemas);
  auto rep = c15.gap(1.0, 2.0);
  EXPECT_FALSE(rep.rhs1.has_value());
  EXPECT_FALSE(rep.notes.empty());
}

TEST(Clarkson, FirstInequalityUnderRaizconvex) {
  for (const auto& F : families()) {
    nlo::ClarksonCalculus cc(F);
    if (!cc.conditions().raizconvex) continue;
    SCOPED_TRACE(F.describe());
    nlo::detail::Rng rng(3);
    for (int i = 0; i < 10000; ++i) {
      const double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5);
      auto rep = cc.gap(a, b);
      EXPECT_GE(rep.lhs - *rep.rhs1, -1e-12 * (1 + rep.lhs));
    }
  }
}

TEST(Clarkson, SecondAndThirdForSubquadraticPower) {
  nlo::ClarksonCalculus cc(YoungFunction::pure_power(1.5));
  ASSERT_TRUE(std::isfinite(cc.c3()));
  EXPECT_GT(cc.c3(), 0.0);
  nlo::detail::Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(-10, 10), b = rng.uniform(-10, 10);
    auto rep = cc.gap(a, b);
    EXPECT_GE(rep.lhs, 0.95 * *rep.rhs3);
    EXPECT_GE(rep.lhs, *rep.rhs2 * (1 - 1e-12));
  }
}
