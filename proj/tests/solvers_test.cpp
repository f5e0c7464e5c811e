#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "nlo/oracle.hpp"
#include "nlo/solvers.hpp"

using namespace nlo;

namespace {

bool nonincreasing(const std::vector<double>& h) {
  for (std::size_t k = 1; k < h.size(); ++k) {
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(h[k - 1]) + std::abs(h.front()));
    if (h[k] > h[k - 1] + slack) return false;
  }
  return true;
}

// Least energy on the Nehari manifold for Psi = |s|^p, G = |t|^m / m:
// minimize E on {sum |v|^m h^N = 1} by projected descent, then
// eta = max_t t^p E - t^m / m.
double nehari_level(const EnergyAssembly& A, double m) {
  const double p = A.young().p(), hN = A.cell_volume();
  std::vector<double> v = bump(A.grid(), A.grid()->center(), 1.0, 1.0).values;
  auto normalize = [&](std::vector<double>& w) {
    double s = 0.0;
    for (double x : w) s += std::pow(std::abs(x), m);
    s = std::pow(s * hN, 1.0 / m);
    for (double& x : w) x /= s;
  };
  normalize(v);
  double t = 1e-3, E = A.E_value(v);
  for (int it = 0; it < 200000; ++it) {
    auto g = A.apply_operator(v);
    std::vector<double> nrm(v.size());
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      nrm[i] = std::pow(std::abs(v[i]), m - 1.0) * (v[i] > 0 ? 1.0 : -1.0);
      a += g[i] * nrm[i];
      b += nrm[i] * nrm[i];
    }
    double gn = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      g[i] -= a / b * nrm[i];
      gn = std::max(gn, std::abs(g[i]));
    }
    if (gn < 1e-11) break;
    std::vector<double> w(v.size());
    bool ok = false;
    for (int bt = 0; bt < 60 && !ok; ++bt) {
      for (std::size_t i = 0; i < v.size(); ++i) w[i] = v[i] - t * g[i];
      normalize(w);
      const double En = A.E_value(w);
      if (En <= E) {
        v = w;
        E = En;
        ok = true;
        t *= 1.3;
      } else {
        t *= 0.5;
      }
    }
    if (!ok) break;
  }
  const double ts = std::pow(p * E, 1.0 / (m - p));
  return std::pow(ts, p) * E - std::pow(ts, m) / m;
}

GridFunction positive_data(const GridPtr& g, std::uint64_t seed) { return random_function(g, seed, 1.0).abs(); }

}  // namespace

TEST(Dirichlet, QuadraticMatchesDenseSolve1D) {
  auto g = make_interval_grid(-1, 1, 64);
  auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(2));
  GridFunction f(g, std::vector<double>(g->size(), 1.0));
  SolverOptions o;
  o.tol = 1e-10;
  auto rep = solve_dirichlet(A, f, o);
  ASSERT_TRUE(rep.converged) << rep.status;
  auto ref = oracle::dirichlet_solution(A, f);
  EXPECT_LE((rep.solution - ref).max_abs(), 1e-8);
  EXPECT_TRUE(nonincreasing(rep.objective_history));
}

TEST(Dirichlet, QuadraticMatchesDenseSolve2D) {
  auto g = make_box_grid(0, 1, 0, 1, 12);
  auto A = assemble(g, Kernel::fractional(1.0, 2), YoungFunction::pure_power(2));
  auto f = positive_data(g, 3);
  SolverOptions o;
  o.tol = 1e-10;
  auto rep = solve_dirichlet(A, f, o);
  ASSERT_TRUE(rep.converged) << rep.status;
  EXPECT_LE((rep.solution - oracle::dirichlet_solution(A, f)).max_abs(), 1e-8);
}

TEST(Dirichlet, WeakFormResidualAndEnergies) {
  auto g = make_interval_grid(-1, 1, 32);
  auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(3));
  auto f = positive_data(g, 11);
  auto rep = solve_dirichlet(A, f);
  ASSERT_TRUE(rep.converged) << rep.status;
  std::vector<std::size_t> coords{0, 5, 16, 31};
  EXPECT_LE(weak_form_residual(A, rep.solution, f.values, coords), 1e-7);
  EXPECT_DOUBLE_EQ(rep.energy_E, A.E_value(rep.solution));
  EXPECT_TRUE(nonincreasing(rep.objective_history));
}

TEST(Dirichlet, MaximumPrinciple) {
  auto g = make_interval_grid(-1, 1, 32);
  for (double p : {2.0, 3.0}) {
    auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(p));
    for (std::uint64_t s = 1; s <= 5; ++s) {
      auto rep = solve_dirichlet(A, positive_data(g, s));
      EXPECT_TRUE(rep.converged);
      EXPECT_GE(rep.solution.min(), -1e-10);
    }
  }
}

TEST(Dirichlet, RejectsMismatchedData) {
  auto A = assemble(make_interval_grid(-1, 1, 16), Kernel::fractional(0.5, 1), YoungFunction::pure_power(2));
  EXPECT_THROW(solve_dirichlet(A, GridFunction(make_interval_grid(-1, 1, 8))), InvalidArgument);
}

TEST(Eigen, QuadraticMatchesDenseEigenpair) {
  for (auto g : {make_interval_grid(-1, 1, 64), make_box_grid(0, 1, 0, 1, 12)}) {
    auto A = assemble(g, Kernel::fractional(0.5, g->dim()), YoungFunction::pure_power(2));
    SolverOptions o;
    o.tol = 1e-10;
    auto rep = solve_eigen(A, o);
    ASSERT_TRUE(rep.converged) << rep.status;
    auto ref = oracle::principal_eigenpair(A);
    EXPECT_NEAR(rep.extras.at("lambda1"), ref.lambda1, 1e-6 * ref.lambda1);
    EXPECT_NEAR(A.F_value(rep.solution), 1.0, 1e-12);
    EXPECT_LE((rep.solution - ref.eigenfunction).max_abs(), 1e-4 * ref.eigenfunction.max_abs());
    EXPECT_FALSE(rep.has_flag("sign_change"));
  }
}

TEST(Eigen, BoundedBelowByPoincareAndStartInvariant) {
  auto g = make_interval_grid(-1, 1, 32);
  auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(3));
  auto r1 = solve_eigen(A);
  ASSERT_TRUE(r1.converged) << r1.status;
  EXPECT_GE(r1.extras.at("lambda1"), lambda_lower_bound(A.kernel(), *g));
  auto start = positive_data(g, 4).scaled(7.0);
  auto r2 = solve_eigen(A, {}, start);
  ASSERT_TRUE(r2.converged) << r2.status;
  EXPECT_NEAR(r1.extras.at("lambda1"), r2.extras.at("lambda1"), 1e-6 * r1.extras.at("lambda1"));
  EXPECT_GE(r1.solution.min(), 0.0);
  EXPECT_TRUE(nonincreasing(r1.objective_history));
  EXPECT_THROW(solve_eigen(A, {}, GridFunction(g)), InvalidArgument);
}

TEST(Reaction, PowerLawConditionsMatchClosedForm) {
  const auto Y = YoungFunction::pure_power(2);
  // N = 1, alpha = 0.5: sub1 iff m < 2, rho iff 2 < m < 4.
  const std::vector<std::pair<double, std::pair<bool, bool>>> cases{
      {1.5, {true, false}}, {1.8, {true, false}}, {3.0, {false, true}}, {3.5, {false, true}}, {5.0, {false, false}}};
  for (const auto& [m, expect] : cases) {
    auto c = check_reaction_conditions(Y, ReactionSpec::power_law(m), 1, 0.5);
    EXPECT_EQ(c.sub1.pass, expect.first) << m;
    EXPECT_EQ(c.rho.pass, expect.second) << m;
    EXPECT_TRUE(c.consistent) << m;
  }
  EXPECT_THROW(ReactionSpec::power_law(1.0), InvalidArgument);
}

TEST(Sublinear, NontrivialNonnegativeSolution) {
  auto g = make_interval_grid(-20, 20, 64);
  for (double p : {2.0, 3.0}) {
    auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(p));
    for (double m : {p - 0.5, p - 0.2}) {
      auto R = ReactionSpec::power_law(m);
      auto rep = solve_sublinear(A, R);
      EXPECT_TRUE(rep.converged) << p << " " << m << " " << rep.status;
      EXPECT_LT(rep.objective, 0.0);
      EXPECT_GE(rep.solution.min(), 0.0);
      EXPECT_GT(rep.solution.max_abs(), 0.0);
      EXPECT_FALSE(rep.has_flag("condition_sub1_failed"));
      EXPECT_TRUE(nonincreasing(rep.objective_history));
      std::vector<double> rhs(rep.solution.size());
      for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = R.f(rep.solution[i]);
      std::vector<std::size_t> coords{0, 20, 32};
      EXPECT_LE(weak_form_residual(A, rep.solution, rhs, coords), 1e-7);
    }
  }
}

TEST(Sublinear, SuperlinearReactionIsFlagged) {
  auto g = make_interval_grid(-20, 20, 64);
  auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(2));
  auto rep = solve_sublinear(A, ReactionSpec::power_law(2.5));
  EXPECT_TRUE(rep.has_flag("condition_sub1_failed"));
}

TEST(MountainPass, MatchesNehariLevel) {
  auto g = make_interval_grid(-1, 1, 32);
  auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(2));
  for (double m : {3.0, 4.5}) {
    auto rep = mountain_pass_search(A, ReactionSpec::power_law(m));
    ASSERT_TRUE(rep.converged) << m << " " << rep.status;
    const double eta = nehari_level(A, m);
    EXPECT_NEAR(rep.objective, eta, 1e-5 * eta) << m;
    EXPECT_LE(rep.objective, rep.extras.at("initial_ray_max") * (1 + 1e-12));
    EXPECT_GT(rep.solution.max_abs(), 0.0);
  }
}

TEST(MountainPass, SublinearReactionHasNoGeometry) {
  auto g = make_interval_grid(-1, 1, 16);
  auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(2));
  auto rep = mountain_pass_search(A, ReactionSpec::power_law(1.5));
  EXPECT_EQ(rep.status, "no_mountain_geometry");
}

TEST(Uniqueness, QuadraticGapIsTwiceEnergy) {
  auto g = make_interval_grid(-1, 1, 24);
  auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(2));
  for (std::uint64_t s = 1; s <= 10; ++s) {
    auto u1 = random_function(g, s, 1.0), u2 = random_function(g, 100 + s, 1.0);
    auto gap = uniqueness_gap(A, u1, u2);
    ASSERT_TRUE(gap.applicable);
    EXPECT_EQ(gap.condition, "raizconvex");
    EXPECT_NEAR(gap.interaction_gap, 2.0 * gap.energy_gap, 1e-12 * gap.energy_gap);
    EXPECT_LE(gap.energy_gap, gap.bound * (1 + 1e-12));
  }
}

TEST(Uniqueness, BoundsHoldForOtherPowers) {
  auto g = make_interval_grid(-1, 1, 24);
  for (double p : {1.5, 3.0}) {
    auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(p));
    for (std::uint64_t s = 1; s <= 10; ++s) {
      auto gap = uniqueness_gap(A, random_function(g, s, 1.0), random_function(g, 50 + s, 1.0));
      ASSERT_TRUE(gap.applicable) << p;
      EXPECT_EQ(gap.condition, p < 2 ? "concavemas" : "raizconvex");
      EXPECT_LE(gap.energy_gap, gap.bound * (1 + 1e-9)) << p;
    }
  }
}

TEST(Pohozaev, RatioIsAlgebraicForPowers) {
  auto g = make_interval_grid(-1, 1, 24);
  const double alpha = 0.5;
  auto A = assemble(g, Kernel::fractional(alpha, 1), YoungFunction::pure_power(2));
  auto u = random_function(g, 9, 1.0).abs();
  for (double m : {1.5, 3.0, 5.0}) {
    auto rep = pohozaev_check(A, ReactionSpec::power_law(m), u);
    ASSERT_EQ(rep.status, "ok");
    EXPECT_NEAR(rep.delta, alpha, 1e-6);
    EXPECT_NEAR(rep.ratio, m * (1 - rep.delta) / 2.0, 1e-12);
    EXPECT_EQ(rep.holds, rep.ratio <= 1.05);
  }
  EXPECT_EQ(pohozaev_check(A, ReactionSpec::power_law(3), GridFunction(g)).status, "trivial_solution");
  auto B = assemble(g, Kernel::fractional(alpha, 1), YoungFunction::power_sum({{1, 2}, {1, 3}}));
  EXPECT_EQ(pohozaev_check(B, ReactionSpec::power_law(3), u).status, "inapplicable");
}

TEST(Moser, SolutionNormsScaleWithData) {
  auto g = make_interval_grid(-1, 1, 32);
  for (double p : {2.0, 3.0}) {
    auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(p));
    auto rep = moser_integrability_report(A, positive_data(g, 2), 4.0);
    ASSERT_EQ(rep.status, "ok");
    EXPECT_NEAR(rep.fitted_exponent, 1.0 / (p - 1.0), 0.02 / (p - 1.0));
    EXPECT_TRUE(rep.scaling_ok);
    EXPECT_GT(rep.constant, 0.0);
  }
  auto A = assemble(g, Kernel::fractional(0.5, 1), YoungFunction::pure_power(2));
  EXPECT_EQ(moser_integrability_report(A, positive_data(g, 2), 1.5).status, "inapplicable");
}
