#pragma once

// Variational solvers on an EnergyAssembly. All descent loops work in the
// discrete L2 metric: the residual r = Lu - rhs is the gradient divided by
// h^N, and a step is u <- u - t r.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlo/detail/numerics.hpp"
#include "nlo/energy.hpp"
#include "nlo/errors.hpp"
#include "nlo/grid.hpp"
#include "nlo/kernel.hpp"
#include "nlo/young.hpp"

namespace nlo {

struct SolveReport {
  GridFunction solution;
  double objective = 0.0;
  double residual_inf = 0.0;
  int iterations = 0;
  bool converged = false;
  double energy_E = 0.0;
  double integral_F = 0.0;
  /// "converged", "max_iter", "line_search_failure", "diverged",
  /// "no_mountain_geometry", "trivial_solution".
  std::string status;
  std::vector<std::string> flags;
  std::map<std::string, double> extras;
  std::vector<double> objective_history;
  std::vector<std::string> notes;

  bool has_flag(const std::string& f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 20000;
  double armijo = 1e-4;
  int max_backtracks = 60;
  bool record_history = true;
};

/// Reaction f on t >= 0 with antiderivative G, G(0) = 0. Negative
/// arguments use the odd extension of f (even extension of G).
struct ReactionSpec {
  std::function<double(double)> f_pos;
  std::function<double(double)> G_pos;
  std::string label = "custom";
  std::optional<double> power;  ///< m when f(t) = t^{m-1}

  static ReactionSpec power_law(double m) {
    if (!(m > 1.0) || !std::isfinite(m)) throw InvalidArgument("reaction: power exponent m must be > 1");
    ReactionSpec r;
    if (m == 2.0) {
      r.f_pos = [](double t) { return t; };
    } else {
      r.f_pos = [m](double t) { return std::pow(t, m - 1.0); };
    }
    r.G_pos = [m](double t) { return std::pow(t, m) / m; };
    r.label = "power(" + detail::format_double(m) + ")";
    r.power = m;
    return r;
  }
  static ReactionSpec zero() {
    ReactionSpec r;
    r.f_pos = [](double) { return 0.0; };
    r.G_pos = [](double) { return 0.0; };
    r.label = "zero";
    return r;
  }
  static ReactionSpec custom(std::function<double(double)> f, std::function<double(double)> G,
                             std::string label = "custom") {
    if (!f || !G) throw InvalidArgument("reaction: f and G are required");
    ReactionSpec r;
    r.f_pos = std::move(f);
    r.G_pos = std::move(G);
    r.label = std::move(label);
    return r;
  }

  double f(double t) const { return t >= 0.0 ? f_pos(t) : -f_pos(-t); }
  double G(double t) const { return G_pos(std::abs(t)); }
};

struct Sub1Report {
  bool pass = false;
  double mu = 0.0;           ///< exponent used for the clauses
  double mu_zero = 0.0;      ///< log-log slope of f against Psi near 0
  double mu_infinity = 0.0;  ///< same slope at infinity
  double bound = 0.0;        ///< (q - 1) / p
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
};

struct RhoReport {
  bool pass = false;
  bool clause1 = false, clause2 = false, clause3 = false;
  double rho = 0.0;      ///< inf t f(t) / G(t)
  double r = 0.0;        ///< growth exponent of t f(t) against Psi at infinity
  double r_star = 0.0;   ///< N / (N - alpha); inf when alpha >= N
  double c = 0.0;        ///< sup over t > t0 of t f / Psi^r
  double t0 = 1.0;
  double lambda0 = 0.0;  ///< smallest dyadic lambda0 with G(l t) >= l^rho G(t)
};

struct ConditionReport {
  Sub1Report sub1;
  RhoReport rho;
  std::optional<bool> expected_sub1;  ///< closed-form ranges for f = t^{m-1}
  std::optional<bool> expected_rho;
  bool consistent = true;
  std::vector<std::string> notes;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  std::vector<double> t(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) t[i] = a[i] * b[i];
  return pairwise_sum(t);
}

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

inline double loglog_slope(const std::function<double(double)>& y, const std::function<double(double)>& x, double t1,
                           double t2) {
  const double y1 = std::abs(y(t1)), y2 = std::abs(y(t2));
  if (!(y1 > 0.0) || !(y2 > 0.0)) return 0.0;
  return std::log(y2 / y1) / std::log(x(t2) / x(t1));
}

inline constexpr double kApproxWolfe = 0.1;

struct DescentOutcome {
  std::vector<double> x;
  std::vector<double> r;
  double value = 0.0;
  double residual_inf = 0.0;
  double rhs_inf = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string status;
  std::vector<double> history;
};

// Barzilai-Borwein (BB1) steps with Armijo backtracking. residual(x, r)
// writes the L2 gradient into r and returns the max-norm of the right-hand
// side used to scale the tolerance. When the predicted Armijo decrease is
// below roundoff, a step is accepted if the objective stays within a
// roundoff window and the approximate Wolfe test on the directional
// derivative holds.
template <class Value, class Residual>
DescentOutcome bb_descent(std::vector<double> x, Value&& value, Residual&& residual, double t0, double hN,
                          const SolverOptions& opt) {
  DescentOutcome out;
  const std::size_t n = x.size();
  std::vector<double> r(n), rn(n), xn(n);
  double f = value(x);
  double rhs = residual(x, r);
  if (opt.record_history) out.history.push_back(f);
  double t = t0;
  const double t_lo = 1e-6 * t0, t_hi = 1e2 * t0;
  out.status = "max_iter";
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    const double res = norm_inf(r);
    if (res <= opt.tol * (1.0 + rhs)) {
      out.converged = true;
      out.status = "converged";
      break;
    }
    const double rr = dot(r, r);
    const double g2 = rr * hN;
    const double window =
        64.0 * std::numeric_limits<double>::epsilon() * (std::abs(f) + std::abs(out.history.empty() ? f : out.history.front()));
    bool accepted = false;
    double fn = f, tt = t, rhs_n = 0.0;
    for (int bt = 0; bt <= opt.max_backtracks && !accepted; ++bt, tt *= 0.5) {
      bool moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        xn[i] = x[i] - tt * r[i];
        moved = moved || xn[i] != x[i];
      }
      if (!moved) break;
      fn = value(xn);
      if (opt.armijo * tt * g2 > window) {
        if (fn <= f - opt.armijo * tt * g2) {
          accepted = true;
          rhs_n = residual(xn, rn);
        }
      } else if (fn <= f + window) {
        // Decrease below roundoff: use the derivative form of the
        // sufficient-decrease test instead.
        rhs_n = residual(xn, rn);
        if (dot(rn, r) >= -(1.0 - 2.0 * kApproxWolfe) * rr) accepted = true;
      }
    }
    if (!accepted) {
      out.status = "line_search_failure";
      break;
    }
    double ss = 0.0, sy = 0.0;
    {
      std::vector<double> s(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = xn[i] - x[i];
        y[i] = rn[i] - r[i];
      }
      ss = dot(s, s);
      sy = dot(s, y);
    }
    x.swap(xn);
    r.swap(rn);
    f = fn;
    rhs = rhs_n;
    if (opt.record_history) out.history.push_back(f);
    t = sy > 0.0 ? std::clamp(ss / sy, t_lo, t_hi) : t_hi;
    if (!std::isfinite(f) || norm_inf(x) > 1e12) {
      out.status = "diverged";
      ++it;
      break;
    }
  }
  out.iterations = it;
  out.value = f;
  out.residual_inf = norm_inf(r);
  out.rhs_inf = rhs;
  out.x = std::move(x);
  out.r = std::move(r);
  return out;
}

inline double initial_step(const EnergyAssembly& A) {
  return 1.0 / (std::abs(A.young().psi(1.0)) * A.max_degree());
}

inline void fill_energies(const EnergyAssembly& A, SolveReport& rep) {
  rep.energy_E = A.E_value(rep.solution);
  rep.integral_F = A.F_value(rep.solution);
}

// Scale factor k with F(v / k) = 1 (closed form for pure powers).
inline double unit_modular_scale(const EnergyAssembly& A, std::span<const double> v) {
  const auto& Y = A.young();
  if (Y.is_pure_power()) return std::pow(A.F_value(v), 1.0 / Y.p());
  return luxemburg_norm(Y, v, A.cell_volume());
}

}  // namespace detail

/// Discrete identity of each node: max over the listed coordinates of
/// |E(u; e_k) - rhs_k h^N| / h^N, with E(u; e_k) from the pair sums.
inline double weak_form_residual(const EnergyAssembly& A, const GridFunction& u, std::span<const double> rhs,
                                 std::span<const std::size_t> coords) {
  double worst = 0.0;
  GridFunction e(A.grid());
  for (std::size_t k : coords) {
    e[k] = 1.0;
    worst = std::max(worst, std::abs(A.interaction(u, e) - rhs[k] * A.cell_volume()) / A.cell_volume());
    e[k] = 0.0;
  }
  return worst;
}

/// Minimizes E(v) - sum f_i v_i h^N from v = 0.
inline SolveReport solve_dirichlet(const EnergyAssembly& A, const GridFunction& f, const SolverOptions& opt = {}) {
  if (f.size() != A.size()) throw InvalidArgument("solve_dirichlet: data does not match the grid");
  const double hN = A.cell_volume();
  const std::vector<double>& fv = f.values;
  const double f_inf = detail::norm_inf(fv);
  auto value = [&](std::span<const double> v) { return A.E_value(v) - detail::dot(fv, v) * hN; };
  auto residual = [&](std::span<const double> v, std::vector<double>& r) {
    r = A.apply_operator(v);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= fv[i];
    return f_inf;
  };
  auto out = detail::bb_descent(std::vector<double>(A.size(), 0.0), value, residual, detail::initial_step(A), hN, opt);
  SolveReport rep{GridFunction(A.grid(), out.x)};
  rep.objective = out.value;
  rep.residual_inf = out.residual_inf;
  rep.iterations = out.iterations;
  rep.converged = out.converged;
  rep.status = out.status;
  rep.objective_history = std::move(out.history);
  detail::fill_energies(A, rep);
  return rep;
}

/// Sampled check of the reaction hypotheses. N and alpha enter r* only.
inline ConditionReport check_reaction_conditions(const YoungFunction& Y, const ReactionSpec& R, int N,
                                                 std::optional<double> alpha) {
  ConditionReport rep;
  const double p = Y.p(), q = Y.q();
  std::function<double(double)> f = R.f_pos, G = R.G_pos;
  std::function<double(double)> Psi = [&Y](double t) { return Y.Psi(t); };

  // sub1
  Sub1Report& s = rep.sub1;
  s.bound = (q - 1.0) / p;
  s.mu_zero = detail::loglog_slope(f, Psi, 1e-8, 1e-7);
  s.mu_infinity = detail::loglog_slope(f, Psi, 1e6, 1e7);
  s.mu = std::max(s.mu_zero, s.mu_infinity);
  if (!(s.mu > 0.0)) s.mu = 0.5 * s.bound;
  {
    double c3 = std::numeric_limits<double>::infinity(), c2 = 0.0, c1 = 0.0;
    for (double t : detail::log_grid(1e-8, 1e-2, 8)) c3 = std::min(c3, f(t) / std::pow(Psi(t), s.mu));
    for (double t : detail::log_grid(1.0, 1e8, 8)) c2 = std::max(c2, std::abs(f(t)) / std::pow(Psi(t), s.mu));
    for (double t : detail::log_grid(1e-8, 1.0, 8)) c1 = std::max(c1, std::abs(f(t)));
    s.c1 = c1;
    s.c2 = c2;
    s.c3 = c3;
    s.pass = s.mu > 0.0 && s.mu < s.bound - 1e-9 && c3 > 0.0 && std::isfinite(c2);
  }

  // rho: clause 2 measures t f(t) against Psi^r and clause 3 scales G.
  RhoReport& h = rep.rho;
  {
    double rho = std::numeric_limits<double>::infinity();
    for (double t : detail::log_grid(1e-6, 1e6, 8)) {
      const double g = G(t);
      if (g > 0.0) rho = std::min(rho, t * f(t) / g);
      else rho = -std::numeric_limits<double>::infinity();
    }
    h.rho = rho;
    h.clause1 = rho > p + 1e-9;
    std::function<double(double)> tf = [&f](double t) { return t * f(t); };
    h.r = std::max(detail::loglog_slope(tf, Psi, 1e6, 1e7), 1.0 + 1e-9);
    if (!alpha) {
      h.r_star = 0.0;
      rep.notes.emplace_back("rho: kernel has no alpha condition, r* undefined");
    } else {
      h.r_star = *alpha >= N ? std::numeric_limits<double>::infinity() : N / (N - *alpha);
    }
    double c = 0.0;
    for (double t : detail::log_grid(h.t0, 1e8, 8)) c = std::max(c, t * f(t) / std::pow(Psi(t), h.r));
    h.c = c;
    h.clause2 = alpha.has_value() && h.r < h.r_star - 1e-9 && std::isfinite(c);
    h.clause3 = false;
    if (std::isfinite(rho) && rho > 0.0) {
      for (int k = 0; k <= 20 && !h.clause3; ++k) {
        const double l0 = std::ldexp(1.0, k);
        bool ok = true;
        for (double l : detail::log_grid(l0 * 1.0001, l0 * 1e3, 4)) {
          for (double t : detail::log_grid(1e-4, 1e4, 4)) {
            if (G(l * t) < std::pow(l, rho) * G(t) * (1.0 - 1e-12)) {
              ok = false;
              break;
            }
          }
          if (!ok) break;
        }
        if (ok) {
          h.clause3 = true;
          h.lambda0 = l0;
        }
      }
    }
    h.pass = h.clause1 && h.clause2 && h.clause3;
  }

  if (R.power) {
    const double m = *R.power;
    rep.expected_sub1 = m < p;
    if (alpha && *alpha < N)
      rep.expected_rho = p < m && m < N * q / (N - *alpha);
    else if (alpha)
      rep.expected_rho = p < m;
    rep.consistent = (*rep.expected_sub1 == s.pass) && (!rep.expected_rho || *rep.expected_rho == h.pass);
    if (!rep.consistent) rep.notes.emplace_back("sampled clauses disagree with the closed-form power ranges");
  }
  return rep;
}

inline ConditionReport check_reaction_conditions(const EnergyAssembly& A, const ReactionSpec& R) {
  return check_reaction_conditions(A.young(), R, A.grid()->dim(), A.kernel().alpha_condition());
}

/// I(v) = E(v) - sum G(v_i) h^N.
inline double reaction_functional(const EnergyAssembly& A, const ReactionSpec& R, std::span<const double> v) {
  std::vector<double> g(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) g[i] = R.G(v[i]);
  return A.E_value(v) - detail::pairwise_sum(g) * A.cell_volume();
}

namespace detail {

inline double reaction_residual(const EnergyAssembly& A, const ReactionSpec& R, std::span<const double> v,
                                std::vector<double>& r) {
  r = A.apply_operator(v);
  double m = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double fi = R.f(v[i]);
    r[i] -= fi;
    m = std::max(m, std::abs(fi));
  }
  return m;
}

// Positive cosine bump over the domain, scaled to unit Luxemburg norm.
inline GridFunction unit_bump(const EnergyAssembly& A) {
  const auto& g = A.grid();
  const double R = g->dim() == 1 ? 0.5 * (g->upper()[0] - g->lower()[0]) : g->inradius();
  GridFunction b = bump(g, g->center(), R, 1.0);
  if (b.is_zero()) throw NumericalFailure("unit_bump: grid too coarse for an interior bump");
  const double k = luxemburg_norm(A.young(), b.values, A.cell_volume());
  return b.scaled(1.0 / k);
}

}  // namespace detail

/// Minimizes E(v) - sum G(v_i) h^N from a positive bump of unit Luxemburg
/// norm (or the given start).
inline SolveReport solve_sublinear(const EnergyAssembly& A, const ReactionSpec& R, const SolverOptions& opt = {},
                                   std::optional<GridFunction> start = std::nullopt) {
  SolveReport rep{GridFunction(A.grid())};
  const ConditionReport cond = check_reaction_conditions(A, R);
  if (!cond.sub1.pass) {
    rep.flags.emplace_back("condition_sub1_failed");
    rep.notes.emplace_back("reaction fails the sampled sublinear growth condition");
  }
  const double hN = A.cell_volume();
  std::vector<double> x0 = start ? start->values : detail::unit_bump(A).values;
  if (x0.size() != A.size()) throw InvalidArgument("solve_sublinear: start does not match the grid");
  auto value = [&](std::span<const double> v) { return reaction_functional(A, R, v); };
  auto residual = [&](std::span<const double> v, std::vector<double>& r) { return detail::reaction_residual(A, R, v, r); };
  auto out = detail::bb_descent(std::move(x0), value, residual, detail::initial_step(A), hN, opt);
  rep.solution = GridFunction(A.grid(), out.x);
  rep.objective = out.value;
  rep.residual_inf = out.residual_inf;
  rep.iterations = out.iterations;
  rep.converged = out.converged;
  rep.status = out.status;
  rep.objective_history = std::move(out.history);
  if (out.status != "diverged") {
    GridFunction a = rep.solution.abs();
    const double Ia = reaction_functional(A, R, a.values);
    if (Ia <= rep.objective) {
      rep.solution = a;
      rep.objective = Ia;
      std::vector<double> r;
      detail::reaction_residual(A, R, a.values, r);
      rep.residual_inf = detail::norm_inf(r);
    }
  }
  rep.extras["nontrivial_I_negative"] = rep.objective < 0.0 ? 1.0 : 0.0;
  if (out.status == "diverged") {
    rep.flags.emplace_back("diverged");
  } else if (rep.solution.max_abs() <= 1e-8 * (1.0 + detail::norm_inf(rep.solution.values)) || !(rep.objective < 0.0)) {
    rep.flags.emplace_back("trivial_solution");
    if (rep.status == "converged") rep.status = "trivial_solution";
  }
  if (cond.sub1.pass && !(rep.objective < 0.0)) rep.notes.emplace_back("I(u) >= 0 although the growth condition holds");
  detail::fill_energies(A, rep);
  return rep;
}

struct MountainPassOptions {
  int path_points = 33;
  double tol = 1e-6;
  int max_iter = 50000;
  int path_iters = 200;
};

/// Numerical mountain-pass search: a straight path from 0 to an endpoint
/// with I < 0 is deformed by descent steps on its maximizer, then the
/// highest point is refined to a saddle by a min-mode (dimer) iteration.
/// Convergence to a critical point is heuristic.
inline SolveReport mountain_pass_search(const EnergyAssembly& A, const ReactionSpec& R,
                                        std::optional<GridFunction> endpoint = std::nullopt,
                                        const MountainPassOptions& mp = {}) {
  if (mp.path_points < 3) throw InvalidArgument("mountain_pass_search: need at least 3 path points");
  SolveReport rep{GridFunction(A.grid())};
  rep.notes.emplace_back("mountain-pass convergence is heuristic");
  const ConditionReport cond = check_reaction_conditions(A, R);
  if (!cond.rho.pass) rep.flags.emplace_back("condition_rho_failed");
  const std::size_t n = A.size();
  const double hN = A.cell_volume();
  auto I = [&](std::span<const double> v) { return reaction_functional(A, R, v); };

  std::vector<double> vbar;
  if (endpoint) {
    if (endpoint->size() != n) throw InvalidArgument("mountain_pass_search: endpoint does not match the grid");
    vbar = endpoint->values;
    if (!(I(vbar) < 0.0)) {
      rep.status = "no_mountain_geometry";
      rep.notes.emplace_back("endpoint has I >= 0");
      return rep;
    }
  } else {
    const GridFunction b = detail::unit_bump(A);
    double lam = 1.0;
    bool found = false;
    for (int k = 0; k < 60; ++k, lam *= 2.0) {
      vbar = b.scaled(lam).values;
      if (I(vbar) < 0.0) {
        found = true;
        break;
      }
    }
    if (!found) {
      rep.status = "no_mountain_geometry";
      rep.notes.emplace_back("no endpoint with I < 0 along the doubled bump");
      return rep;
    }
    rep.extras["endpoint_scale"] = lam;
  }

  const int M = mp.path_points;
  std::vector<std::vector<double>> path(static_cast<std::size_t>(M), std::vector<double>(n));
  for (int k = 0; k < M; ++k)
    for (std::size_t i = 0; i < n; ++i) path[static_cast<std::size_t>(k)][i] = vbar[i] * k / (M - 1.0);
  std::vector<double> Iv(static_cast<std::size_t>(M));
  for (int k = 0; k < M; ++k) Iv[static_cast<std::size_t>(k)] = I(path[static_cast<std::size_t>(k)]);
  const double initial_max = *std::max_element(Iv.begin(), Iv.end());
  rep.extras["initial_path_max"] = initial_max;
  {
    // Maximum along the continuous straight path, for comparison with the
    // final level.
    const double tmax = detail::golden_max(
        [&](double t) {
          std::vector<double> v(n);
          for (std::size_t i = 0; i < n; ++i) v[i] = t * vbar[i];
          return I(v);
        },
        0.0, 1.0);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = tmax * vbar[i];
    rep.extras["initial_ray_max"] = std::max(initial_max, I(v));
  }
  if (!(Iv[1] > 0.0) || !(initial_max > 0.0)) {
    rep.status = "no_mountain_geometry";
    rep.notes.emplace_back("no barrier I > 0 near 0 on the initial path");
    return rep;
  }

  const double t0 = detail::initial_step(A);
  const double step = 0.5 * t0;
  std::vector<double> r(n), trial(n);
  // Equal-arclength redistribution of the interior points along the
  // piecewise-linear path, so the highest point tracks the path maximum.
  auto reparametrize = [&]() {
    std::vector<double> arc(static_cast<std::size_t>(M), 0.0);
    std::vector<double> d(n);
    for (std::size_t k = 1; k < static_cast<std::size_t>(M); ++k) {
      for (std::size_t i = 0; i < n; ++i) d[i] = path[k][i] - path[k - 1][i];
      arc[k] = arc[k - 1] + std::sqrt(detail::dot(d, d) * hN);
    }
    const double L = arc.back();
    if (!(L > 0.0)) return;
    const auto old = path;
    std::size_t seg = 0;
    for (std::size_t k = 1; k + 1 < static_cast<std::size_t>(M); ++k) {
      const double target = L * static_cast<double>(k) / (M - 1.0);
      while (seg + 2 < static_cast<std::size_t>(M) && arc[seg + 1] < target) ++seg;
      const double w = arc[seg + 1] > arc[seg] ? (target - arc[seg]) / (arc[seg + 1] - arc[seg]) : 0.0;
      for (std::size_t i = 0; i < n; ++i) path[k][i] = (1.0 - w) * old[seg][i] + w * old[seg + 1][i];
      Iv[k] = I(path[k]);
    }
  };
  // Path deformation: steepest-descent steps on the current path maximizer
  // with Armijo backtracking, so the path maximum never increases.
  int path_done = 0;
  double s_path = t0;
  for (; path_done < mp.path_iters; ++path_done) {
    const auto k = static_cast<std::size_t>(std::max_element(Iv.begin() + 1, Iv.end() - 1) - Iv.begin());
    auto& v = path[k];
    detail::reaction_residual(A, R, v, r);
    const double g2 = detail::dot(r, r) * hN;
    if (detail::norm_inf(r) <= mp.tol * (1.0 + detail::norm_inf(v))) break;
    bool moved = false;
    double tt = std::min(2.0 * s_path, t0);
    for (int bt = 0; bt < 40; ++bt, tt *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = v[i] - tt * r[i];
      const double It = I(trial);
      if (It <= Iv[k] - 1e-4 * tt * g2) {
        v = trial;
        Iv[k] = It;
        moved = true;
        s_path = tt;
        break;
      }
    }
    if (!moved) break;
    reparametrize();
  }
  const auto kmax = static_cast<int>(std::max_element(Iv.begin() + 1, Iv.end() - 1) - Iv.begin());
  rep.extras["deformed_path_max"] = Iv[static_cast<std::size_t>(kmax)];
  if (!(Iv[static_cast<std::size_t>(kmax)] > 0.0)) {
    rep.status = "no_mountain_geometry";
    rep.notes.emplace_back("path maximum dropped to the level of the endpoints (degenerate path)");
    return rep;
  }

  // Min-mode refinement: u <- u - s (r - 2 <r, tau> tau), tau rotated
  // toward the lowest-curvature direction via finite-difference
  // Hessian-vector products.
  std::vector<double> u = path[static_cast<std::size_t>(kmax)];
  std::vector<double> tau(n);
  for (std::size_t i = 0; i < n; ++i)
    tau[i] = path[static_cast<std::size_t>(kmax + 1)][i] - path[static_cast<std::size_t>(kmax - 1)][i];
  auto normalize = [&](std::vector<double>& v) {
    const double s = std::sqrt(detail::dot(v, v) * hN);
    if (s > 0.0)
      for (double& x : v) x /= s;
  };
  normalize(tau);
  std::vector<double> rp(n), rm(n), Ht(n), force(n), prev_force(n), prev_u(n), up(n), um(n);
  double s_step = step;
  int it = 0;
  rep.status = "max_iter";
  double rhs = 0.0;
  for (; it < mp.max_iter; ++it) {
    rhs = detail::reaction_residual(A, R, u, r);
    const double res = detail::norm_inf(r);
    if (res <= mp.tol * (1.0 + rhs)) {
      rep.converged = true;
      rep.status = "converged";
      break;
    }
    const double eps = 1e-4 * std::max(1.0, std::sqrt(detail::dot(u, u) * hN));
    for (std::size_t i = 0; i < n; ++i) {
      up[i] = u[i] + eps * tau[i];
      um[i] = u[i] - eps * tau[i];
    }
    detail::reaction_residual(A, R, up, rp);
    detail::reaction_residual(A, R, um, rm);
    for (std::size_t i = 0; i < n; ++i) Ht[i] = (rp[i] - rm[i]) / (2.0 * eps);
    const double kappa = detail::dot(tau, Ht) * hN;
    for (std::size_t i = 0; i < n; ++i) tau[i] -= step * (Ht[i] - kappa * tau[i]);
    normalize(tau);
    const double rt = detail::dot(r, tau) * hN;
    for (std::size_t i = 0; i < n; ++i) force[i] = r[i] - 2.0 * rt * tau[i];
    if (it > 0) {
      std::vector<double> sd(n), yd(n);
      for (std::size_t i = 0; i < n; ++i) {
        sd[i] = u[i] - prev_u[i];
        yd[i] = force[i] - prev_force[i];
      }
      const double sy = detail::dot(sd, yd);
      s_step = sy > 0.0 ? std::clamp(detail::dot(sd, sd) / sy, 1e-3 * t0, 2.0 * t0) : step;
    }
    prev_u = u;
    prev_force = force;
    for (std::size_t i = 0; i < n; ++i) u[i] -= s_step * force[i];
    if (!std::isfinite(detail::norm_inf(u)) || detail::norm_inf(u) > 1e12) {
      rep.status = "diverged";
      break;
    }
  }
  rep.iterations = path_done + it;
  rep.solution = GridFunction(A.grid(), u);
  if (rep.solution.min() < 0.0 && rep.solution.max() <= 0.0) rep.solution = rep.solution.scaled(-1.0);
  rep.objective = I(rep.solution.values);
  rep.residual_inf = detail::norm_inf(r);
  rep.extras["eta"] = rep.objective;
  if (rep.solution.max_abs() == 0.0 || !(rep.objective > 0.0)) rep.flags.emplace_back("degenerate_path");
  detail::fill_energies(A, rep);
  return rep;
}

/// Minimizes E on {F = 1}: steps along -(Lv - lambda psi(v)) with
/// lambda = E(v; v) / sum psi(v_i) v_i h^N, each followed by rescaling to
/// F = 1. Reports the Rayleigh quotient E/F and the multiplier lambda.
inline SolveReport solve_eigen(const EnergyAssembly& A, const SolverOptions& opt = {},
                               std::optional<GridFunction> start = std::nullopt) {
  const auto& Y = A.young();
  const double hN = A.cell_volume();
  const std::size_t n = A.size();
  std::vector<double> v = start ? start->values : detail::unit_bump(A).values;
  if (v.size() != n) throw InvalidArgument("solve_eigen: start does not match the grid");
  if (detail::norm_inf(v) == 0.0) throw InvalidArgument("solve_eigen: start must be nonzero");
  auto retract = [&](std::vector<double>& w) {
    const double k = detail::unit_modular_scale(A, w);
    for (double& x : w) x /= k;
  };
  retract(v);
  std::vector<double> psi_v(n), r(n), Lv;
  double lambda = 0.0;
  auto eval = [&](const std::vector<double>& w, std::vector<double>& res, double& lam) {
    Lv = A.apply_operator(w);
    for (std::size_t i = 0; i < n; ++i) psi_v[i] = Y.psi(w[i]);
    lam = detail::dot(Lv, w) / detail::dot(psi_v, w);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      res[i] = Lv[i] - lam * psi_v[i];
      m = std::max(m, std::abs(lam * psi_v[i]));
    }
    return m;
  };
  auto quotient = [&](std::span<const double> w) { return A.E_value(w) / A.F_value(w); };

  SolveReport rep{GridFunction(A.grid())};
  double Q = quotient(v);
  double rhs = eval(v, r, lambda);
  std::vector<double> ppsi = psi_v;
  if (opt.record_history) rep.objective_history.push_back(Q);
  const double t0 = detail::initial_step(A);
  double t = t0;
  std::vector<double> w(n), rn(n);
  rep.status = "max_iter";
  int it = 0;
  int rises = 0;
  std::vector<double> lambda_trace;
  for (; it < opt.max_iter; ++it) {
    const double res = detail::norm_inf(r);
    if (res <= opt.tol * (1.0 + rhs)) {
      rep.converged = true;
      rep.status = "converged";
      break;
    }
    // Component of r tangent to {F = 1}.
    std::vector<double> pr = r;
    const double a = detail::dot(r, psi_v) / detail::dot(psi_v, psi_v);
    for (std::size_t i = 0; i < n; ++i) pr[i] -= a * psi_v[i];
    const double g2 = detail::dot(pr, pr) * hN;
    const double window = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(Q);
    const double rp = detail::dot(r, pr);
    bool accepted = false;
    double Qn = Q, tt = t, lam_n = lambda, rhs_n = rhs;
    const std::vector<double> psi_keep = psi_v;
    for (int bt = 0; bt <= opt.max_backtracks && !accepted; ++bt, tt *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) w[i] = v[i] - tt * r[i];
      retract(w);
      if (w == v) break;
      Qn = quotient(w);
      if (opt.armijo * tt * g2 > window) {
        if (Qn <= Q - opt.armijo * tt * g2) {
          accepted = true;
          rhs_n = eval(w, rn, lam_n);
        }
      } else if (Qn <= Q + window) {
        rhs_n = eval(w, rn, lam_n);
        if (detail::dot(rn, pr) >= -(1.0 - 2.0 * detail::kApproxWolfe) * rp) accepted = true;
      }
    }
    if (!accepted) {
      psi_v = psi_keep;
      rep.status = "line_search_failure";
      break;
    }
    if (Qn > Q) ++rises;
    lambda_trace.push_back(lam_n);
    std::vector<double> sd(n), yd(n);
    for (std::size_t i = 0; i < n; ++i) {
      sd[i] = w[i] - v[i];
      yd[i] = rn[i] - r[i];
    }
    const double sy = detail::dot(sd, yd);
    t = sy > 0.0 ? std::clamp(detail::dot(sd, sd) / sy, 1e-6 * t0, 1e2 * t0) : 1e2 * t0;
    v.swap(w);
    r.swap(rn);
    Q = Qn;
    lambda = lam_n;
    rhs = rhs_n;
    if (opt.record_history) rep.objective_history.push_back(Q);
  }
  // Oscillation: without convergence, the multiplier kept changing
  // direction over the last 50 accepted steps.
  if (!rep.converged && lambda_trace.size() >= 50) {
    int turns = 0;
    for (std::size_t k = lambda_trace.size() - 48; k < lambda_trace.size(); ++k) {
      const double d1 = lambda_trace[k] - lambda_trace[k - 1], d0 = lambda_trace[k - 1] - lambda_trace[k - 2];
      if (d1 * d0 < 0.0) ++turns;
    }
    if (turns > 24) rep.flags.emplace_back("oscillation");
  }
  rep.extras["quotient_rises"] = rises;
  double sum = 0.0;
  for (double x : v) sum += x;
  if (sum < 0.0)
    for (double& x : v) x = -x;
  rep.solution = GridFunction(A.grid(), v);
  const double vmax = detail::norm_inf(v);
  if (rep.solution.min() < -1e-10 * vmax) rep.flags.emplace_back("sign_change");
  rep.iterations = it;
  rep.objective = Q;
  rep.residual_inf = detail::norm_inf(r);
  rep.extras["lambda1"] = Q;
  rep.extras["multiplier"] = lambda;
  detail::fill_energies(A, rep);
  return rep;
}

struct UniquenessGap {
  bool applicable = false;
  std::string condition;  ///< "raizconvex" or "concavemas"
  double energy_gap = 0.0;       ///< E(u1 - u2)
  double interaction_gap = 0.0;  ///< E(u1; u1 - u2) - E(u2; u1 - u2)
  double bound = 0.0;            ///< upper bound for energy_gap
  std::string note;
};

/// E(u1 - u2) with the upper bound implied by the pairwise Clarkson
/// inequalities: 1 / (4 gamma^-(1/2)) times the interaction gap when
/// s psi'/psi >= 1, or the Hoelder form
/// (gap / c)^{e/2} (E(u1) + E(u2))^{1 - e/2} in the concave power-like case.
inline UniquenessGap uniqueness_gap(const EnergyAssembly& A, const GridFunction& u1, const GridFunction& u2) {
  UniquenessGap g;
  const GridFunction d = u1 - u2;
  g.energy_gap = A.E_value(d);
  g.interaction_gap = A.interaction(u1, d) - A.interaction(u2, d);
  const ClarksonCalculus cc(A.young());
  const auto& c = cc.conditions();
  if (c.raizconvex) {
    g.applicable = true;
    g.condition = "raizconvex";
    const double gm = gamma_bounds(A.young(), 0.5).minus;
    g.bound = g.interaction_gap / (4.0 * gm);
  } else if (c.concavemas) {
    g.applicable = true;
    g.condition = "concavemas";
    const double e = c.concavemas_exponent;
    const double gap = std::max(g.interaction_gap, 0.0);
    g.bound = std::pow(gap / cc.c3(), e / 2.0) * std::pow(A.E_value(u1) + A.E_value(u2), 1.0 - e / 2.0);
  } else {
    g.note = "condition not satisfied";
  }
  return g;
}

struct PohozaevReport {
  std::string status;  ///< "ok", "inapplicable", "trivial_solution"
  double lhs = 0.0;    ///< sum u f(u) h^N
  double rhs = 0.0;    ///< N p / (N - delta) sum G(u) h^N
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double delta = 0.0;
  std::optional<double> m_star;
  bool holds = false;  ///< ratio <= 1.05
  std::string note;
};

inline PohozaevReport pohozaev_check(const EnergyAssembly& A, const ReactionSpec& R, const GridFunction& u,
                                     std::optional<double> delta = std::nullopt) {
  PohozaevReport rep;
  if (!A.young().is_pure_power()) {
    rep.status = "inapplicable";
    rep.note = "Psi is not a pure power";
    return rep;
  }
  const int N = A.grid()->dim();
  if (!delta) {
    const auto sp = scaling_profile(A.kernel(), {1.0, 1.1, 1.5, 2.0});
    if (!sp.finite) {
      rep.status = "inapplicable";
      rep.note = "mu(lambda) is infinite";
      return rep;
    }
    delta = sp.delta;
  }
  rep.delta = *delta;
  if (!(*delta < N)) {
    rep.status = "inapplicable";
    rep.note = "delta >= N";
    return rep;
  }
  const double p = A.young().p();
  std::vector<double> a(u.size()), b(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    a[i] = u[i] * R.f(u[i]);
    b[i] = R.G(u[i]);
  }
  const double hN = A.cell_volume();
  rep.lhs = detail::pairwise_sum(a) * hN;
  rep.rhs = N * p / (N - *delta) * detail::pairwise_sum(b) * hN;
  if (R.power) rep.m_star = N * p / (N - *delta);
  if (u.is_zero() || rep.rhs == 0.0) {
    rep.status = "trivial_solution";
    return rep;
  }
  rep.status = "ok";
  rep.ratio = rep.lhs / rep.rhs;
  rep.holds = rep.ratio <= 1.05;
  return rep;
}

struct MoserReport {
  std::string status;  ///< "ok" or "inapplicable"
  std::string note;
  std::vector<double> scales;
  std::vector<double> norm_m;     ///< ||u_s||_{m(p-1)}
  std::vector<double> norm_sob;   ///< ||u_s||_{m(p-1)N/(N-m alpha)} when m < N/alpha
  std::vector<double> norm_inf;
  double f_norm = 0.0;            ///< ||f||_m
  double expected_exponent = 0.0; ///< 1 / (p - 1)
  double fitted_exponent = 0.0;   ///< least-squares slope of log ||u_s||_{m(p-1)} against log s
  double fitted_exponent_inf = 0.0;
  double constant = 0.0;          ///< max ||u_s||_{m(p-1)} / ||s f||_m^{1/(p-1)}
  bool scaling_ok = false;        ///< both slopes within 10% of 1 / (p - 1)
  std::vector<SolveReport> solves;
};

/// Solves the Dirichlet problem for s f, s in {1, 2, 4, 8}, and fits the
/// growth of the solution norms against s.
inline MoserReport moser_integrability_report(const EnergyAssembly& A, const GridFunction& f, double m,
                                              const SolverOptions& opt = {}) {
  MoserReport rep;
  const auto& Y = A.young();
  const double p = Y.p();
  if (!(m > p / (p - 1.0))) {
    rep.status = "inapplicable";
    rep.note = "m <= p/(p-1)";
    return rep;
  }
  {
    bool power_like = true;
    for (double s : detail::log_grid(1e-3, 1e3, 4)) {
      const double ratio = Y.psi(s) / std::pow(s, p - 1.0);
      if (!(ratio > 0.0) || !std::isfinite(ratio)) power_like = false;
    }
    if (!power_like) {
      rep.status = "inapplicable";
      rep.note = "psi is not power-like";
      return rep;
    }
  }
  const int N = A.grid()->dim();
  const double alpha = A.kernel().alpha_condition().value_or(A.kernel().q_star());
  rep.expected_exponent = 1.0 / (p - 1.0);
  rep.f_norm = lp_norm(f, m);
  const double r1 = m * (p - 1.0);
  const bool sob = m * alpha < N;
  const double r2 = sob ? m * (p - 1.0) * N / (N - m * alpha) : 0.0;
  rep.scales = {1.0, 2.0, 4.0, 8.0};
  for (double s : rep.scales) {
    SolveReport sr = solve_dirichlet(A, f.scaled(s), opt);
    rep.norm_m.push_back(lp_norm(sr.solution, r1));
    if (sob) rep.norm_sob.push_back(lp_norm(sr.solution, r2));
    rep.norm_inf.push_back(sr.solution.max_abs());
    if (rep.f_norm > 0.0)
      rep.constant = std::max(rep.constant, rep.norm_m.back() / std::pow(s * rep.f_norm, rep.expected_exponent));
    rep.solves.push_back(std::move(sr));
  }
  auto slope = [&](const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!(y[i] > 0.0)) return 0.0;
      const double x = std::log(rep.scales[i]), z = std::log(y[i]);
      sx += x;
      sy += z;
      sxx += x * x;
      sxy += x * z;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
  };
  rep.status = "ok";
  if (rep.f_norm == 0.0) {
    rep.note = "zero data";
    return rep;
  }
  rep.fitted_exponent = slope(rep.norm_m);
  rep.fitted_exponent_inf = slope(rep.norm_inf);
  rep.scaling_ok = std::abs(rep.fitted_exponent / rep.expected_exponent - 1.0) <= 0.1 &&
                   std::abs(rep.fitted_exponent_inf / rep.expected_exponent - 1.0) <= 0.1;
  return rep;
}

}  // namespace nlo
