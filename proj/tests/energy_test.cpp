#include <gtest/gtest.h>

#include <cmath>

#include "nlo/energy.hpp"

using namespace nlo;

namespace {

std::vector<double> dot_values(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> t(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) t[i] = a[i] * b[i];
  return t;
}

// Composite Simpson on [x0,x1]x[y0,y1] with m (even) panels per axis.
template <class F>
double simpson2d(F&& f, double x0, double x1, double y0, double y1, int m) {
  const double hx = (x1 - x0) / m, hy = (y1 - y0) / m;
  double s = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double wi = (i == 0 || i == m) ? 1 : (i % 2 ? 4 : 2);
    for (int j = 0; j <= m; ++j) {
      const double wj = (j == 0 || j == m) ? 1 : (j % 2 ? 4 : 2);
      s += wi * wj * f(x0 + i * hx, y0 + j * hy);
    }
  }
  return s * hx * hy / 9.0;
}

}  // namespace

TEST(Assembly, TwoNodeWeightMatchesClosedForm) {
  auto g = make_interval_grid(0, 4, 4);
  auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(2));
  const double exact = 2.0 * (1.0 / std::sqrt(0.5) - 1.0 / std::sqrt(1.5));
  EXPECT_NEAR(A.pair_weight(0, 1), exact, 1e-10 * exact);
  EXPECT_EQ(A.pair_weight(0, 1), A.pair_weight(1, 0));
}

TEST(Assembly, PlanarCellAverageMatchesSimpson) {
  auto g = make_box_grid(0, 1, 0, 1, 8);
  auto K = Kernel::fractional(1.0, 2);
  auto A = assemble(g, K, YoungFunction::pure_power(2));
  const double h = g->spacing();
  auto J = [&](double x, double y) { return std::pow(x * x + y * y, -1.5); };
  // Node 0 is lattice (0,0); node 1 is (0,1); node 9 is (1,1); node 2 is (0,2).
  const std::vector<std::pair<std::size_t, std::array<int, 2>>> cases{{1, {0, 1}}, {9, {1, 1}}, {2, {0, 2}}};
  for (const auto& [j, d] : cases) {
    const double oracle = simpson2d(J, h * (d[0] - 0.5), h * (d[0] + 0.5), h * (d[1] - 0.5), h * (d[1] + 0.5), 400) * h * h;
    EXPECT_NEAR(A.pair_weight(0, j), oracle, 1e-8 * oracle);
  }
}

TEST(Assembly, WeightsSymmetricPositive) {
  auto g = make_ball_grid({0, 0}, 1, 10);
  auto A = assemble(g, Kernel::log_kernel(1.0, 2, 0.5), YoungFunction::pure_power(2));
  for (std::size_t i = 0; i < g->size(); ++i) {
    EXPECT_GE(A.lambda()[i], lambda_lower_bound(A.kernel(), *g) * (1 - 1e-12));
    for (std::size_t j = 0; j < g->size(); ++j) {
      if (i == j) continue;
      EXPECT_GT(A.pair_weight(i, j), 0.0);
      EXPECT_EQ(A.pair_weight(i, j), A.pair_weight(j, i));
    }
  }
}

TEST(Assembly, InteriorMassPlusExteriorIsTailOutsideOwnCell) {
  // With exact cell averages everywhere, sum_j w_ij / h + Lambda_i is the
  // integral of J outside node i's own cell, i.e. P(h/2) in 1D.
  auto g = make_interval_grid(-1, 1, 20);
  auto K = Kernel::fractional(0.7, 1);
  AssemblyOptions opt;
  opt.near_radius = 1e9;
  auto A = assemble(g, K, YoungFunction::pure_power(2), opt);
  const double oracle = tail_integral_quadrature(K, g->spacing() / 2);
  for (std::size_t i : {0u, 7u, 19u}) EXPECT_NEAR(A.degree(i), oracle, 1e-8 * oracle);
  auto B = assemble(g, K, YoungFunction::pure_power(2));
  for (std::size_t i : {0u, 7u, 19u}) EXPECT_NEAR(B.degree(i), oracle, 1e-2 * oracle);
}

TEST(Assembly, BudgetGuardAndDimensionCheck) {
  AssemblyOptions opt;
  opt.pair_budget = 100;
  EXPECT_THROW(assemble(make_interval_grid(0, 1, 32), Kernel::fractional(0.5, 1), YoungFunction::pure_power(2), opt),
               ResourceLimit);
  EXPECT_THROW(assemble(make_interval_grid(0, 1, 8), Kernel::fractional(0.5, 2), YoungFunction::pure_power(2)),
               InvalidArgument);
}

TEST(Energy, TrivialValues) {
  auto g = make_interval_grid(-1, 1, 16);
  auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(3));
  GridFunction z(g);
  EXPECT_EQ(A.F_value(z), 0.0);
  EXPECT_EQ(A.E_value(z), 0.0);
  GridFunction one(g, std::vector<double>(16, 1.0));
  EXPECT_NEAR(A.F_value(one), 2.0, 1e-14);
  double lam = 0.0;
  for (double l : A.lambda()) lam += l * g->cell_volume();
  EXPECT_NEAR(A.E_value(one), lam, 1e-12 * lam);
  auto Lc = A.apply_operator(one.scaled(2.0));
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(Lc[i], A.young().psi(2.0) * A.lambda()[i], 1e-12 * Lc[i]);
  auto L0 = A.apply_operator(z);
  EXPECT_TRUE(L0.is_zero());
  auto u = random_function(g, 5, 1.0);
  EXPECT_EQ(A.interaction(u, z), 0.0);
  EXPECT_EQ(A.interaction(z, u), 0.0);
}

TEST(Energy, ScalingBoundByGammaPlus) {
  auto g = make_interval_grid(-1, 1, 24);
  auto F = YoungFunction::power_sum({{1, 2}, {1, 4}});
  auto A = assemble(g, Kernel::fractional(0.5, 1), F);
  const double gp = gamma_bounds(F, 2.0).plus;
  for (std::uint64_t s = 1; s <= 50; ++s) {
    auto u = random_function(g, s, 1.5);
    EXPECT_LE(A.F_value(u.scaled(2.0)), gp * A.F_value(u) * (1 + 1e-12));
  }
}

TEST(Energy, InteractionSandwich) {
  auto g = make_interval_grid(-1, 1, 24);
  for (const auto& F : {YoungFunction::pure_power(3), YoungFunction::power_sum({{1, 2}, {1, 4}}),
                        YoungFunction::log_perturbed(2, 1)}) {
    auto A = assemble(g, Kernel::two_exponent(0.6, 1.2, 1), F);
    for (std::uint64_t s = 1; s <= 50; ++s) {
      auto u = random_function(g, s, 3.0);
      const double E = A.E_value(u), Euu = A.interaction(u, u);
      EXPECT_GE(Euu, F.q() * E * (1 - 1e-9)) << F.describe();
      EXPECT_LE(Euu, F.p() * E * (1 + 1e-9)) << F.describe();
    }
  }
}

TEST(Energy, DualityWithOperator) {
  auto g = make_box_grid(0, 1, 0, 1, 8);
  auto A = assemble(g, Kernel::fractional(0.8, 2), YoungFunction::log_perturbed(2.5, -0.5));
  for (std::uint64_t s = 1; s <= 50; ++s) {
    auto u = random_function(g, s, 2.0);
    auto phi = random_function(g, 1000 + s, 1.0);
    const auto Lu = A.apply_operator(u);
    const double direct = A.interaction(u, phi);
    const double dual = detail::pairwise_sum(dot_values(Lu.values, phi.values)) * g->cell_volume();
    EXPECT_NEAR(direct, dual, 1e-12 * (std::abs(direct) + A.E_value(u)));
  }
}

TEST(Energy, GradientMatchesFiniteDifferences) {
  auto g = make_interval_grid(-1, 1, 20);
  auto A = assemble(g, Kernel::fractional(1.0, 1), YoungFunction::power_sum({{1, 2.5}, {1, 3.5}}));
  detail::Rng pick(99);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    auto u = random_function(g, s, 1.0);
    const auto grad = A.gradient_E(u);
    for (int k = 0; k < 5; ++k) {
      const std::size_t i = pick.next() % g->size();
      const double h = 1e-5;
      auto up = u, dn = u;
      up[i] += h;
      dn[i] -= h;
      const double fd = (A.E_value(up) - A.E_value(dn)) / (2 * h);
      EXPECT_NEAR(fd, grad[i], 1e-6 * std::abs(grad[i]));
    }
  }
}

TEST(Energy, DirectionalDerivativeRichardson) {
  auto g = make_interval_grid(-1, 1, 16);
  auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(3));
  auto u = random_function(g, 3, 1.0), phi = random_function(g, 4, 1.0);
  auto d = [&](double t) { return (A.E_value(u + phi.scaled(t)) - A.E_value(u - phi.scaled(t))) / (2 * t); };
  const double rich = (4 * d(1e-5) - d(2e-5)) / 3;
  const double ref = A.interaction(u, phi);
  EXPECT_NEAR(rich, ref, 1e-7 * std::abs(ref));
}

TEST(Energy, GradientOddAndZeroAtOrigin) {
  auto g = make_interval_grid(-1, 1, 12);
  auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::log_perturbed(3, 1));
  auto u = random_function(g, 8, 1.0);
  auto gp = A.gradient_E(u), gm = A.gradient_E(u.scaled(-1.0));
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(gp[i], -gm[i]);
  EXPECT_TRUE(A.gradient_E(GridFunction(g)).is_zero());
}

TEST(Energy, BitIdenticalAcrossThreadCounts) {
  auto g = make_box_grid(0, 1, 0, 1, 20);
  AssemblyOptions one, four;
  one.threads = 1;
  four.threads = 4;
  auto A1 = assemble(g, Kernel::fractional(0.5, 2), YoungFunction::pure_power(3), one);
  auto A4 = assemble(g, Kernel::fractional(0.5, 2), YoungFunction::pure_power(3), four);
  auto u = random_function(g, 17, 1.0), phi = random_function(g, 18, 1.0);
  EXPECT_EQ(A1.E_value(u), A4.E_value(u));
  EXPECT_EQ(A1.interaction(u, phi), A4.interaction(u, phi));
  EXPECT_EQ(A1.apply_operator(u).values, A4.apply_operator(u).values);
  EXPECT_EQ(A1.lambda(), A4.lambda());
}
