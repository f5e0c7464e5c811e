#pragma once

// Young functions of power-like growth: a convex even Psi with Psi(1) = 1
// whose logarithmic derivative s psi(s) / Psi(s) stays in [q, p], together
// with the characteristic functions gamma+-, the complementary function,
// Luxemburg norms and the Clarkson-type inequalities used for uniqueness.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlo/detail/numerics.hpp"
#include "nlo/errors.hpp"

namespace nlo {

enum class YoungFamily { pure_power, power_sum, log_perturbed, custom };

inline const char* family_name(YoungFamily f) {
  switch (f) {
    case YoungFamily::pure_power: return "power";
    case YoungFamily::power_sum: return "power_sum";
    case YoungFamily::log_perturbed: return "log_perturbed";
    case YoungFamily::custom: return "custom";
  }
  return "unknown";
}

/// One term k |s|^exponent of a power sum.
struct PowerTerm {
  double k;
  double exponent;
};

class YoungFunction {
 public:
  using Map = std::function<double(double)>;

  /// Psi(s) = |s|^p.
  static YoungFunction pure_power(double p) {
    if (!(p > 1.0) || !std::isfinite(p))
      throw InvalidArgument("young: pure power requires exponent p > 1 (q > 1 fails), got p=" +
                            detail::format_double(p));
    YoungFunction y;
    y.family_ = YoungFamily::pure_power;
    y.p_ = y.q_ = y.power_ = p;
    y.terms_ = {{1.0, p}};
    y.finish();
    return y;
  }

  /// Psi(s) = sum k_i |t0 s|^{p_i}, with t0 chosen so that Psi(1) = 1.
  static YoungFunction power_sum(std::vector<PowerTerm> terms) {
    if (terms.empty()) throw InvalidArgument("young: power sum needs at least one term");
    for (const auto& t : terms) {
      if (!(t.k > 0.0) || !std::isfinite(t.k))
        throw InvalidArgument("young: power sum coefficients must be positive");
      if (!(t.exponent > 1.0) || !std::isfinite(t.exponent))
        throw InvalidArgument("young: power sum exponents must exceed 1 (q > 1 fails)");
    }
    auto raw = [&terms](double t) {
      double s = 0.0;
      for (const auto& term : terms) s += term.k * std::pow(t, term.exponent);
      return s;
    };
    double lo = 1.0, hi = 1.0;
    while (raw(lo) > 1.0) lo *= 0.5;
    while (raw(hi) < 1.0) hi *= 2.0;
    const double t0 = (raw(1.0) == 1.0) ? 1.0 : detail::bisect_increasing(raw, 1.0, lo, hi);
    YoungFunction y;
    y.family_ = YoungFamily::power_sum;
    y.scale_ = t0;
    y.terms_.clear();
    double pmax = terms[0].exponent, pmin = terms[0].exponent;
    std::vector<double> folded;
    for (const auto& term : terms) {
      y.terms_.push_back({term.k * std::pow(t0, term.exponent), term.exponent});
      pmax = std::max(pmax, term.exponent);
      pmin = std::min(pmin, term.exponent);
      folded.push_back(y.terms_.back().k);
    }
    // Fold the rounding residue of Psi(1) into the coefficients.
    const double total = detail::pairwise_sum(folded);
    for (auto& term : y.terms_) term.k /= total;
    y.raw_terms_ = std::move(terms);
    y.p_ = pmax;
    y.q_ = pmin;
    y.finish();
    return y;
  }

  /// Psi(s) = (t0|s|)^p log(1 + t0|s|)^r with t0^p log(1 + t0)^r = 1.
  static YoungFunction log_perturbed(double p, double r) {
    if (!std::isfinite(p) || !std::isfinite(r))
      throw InvalidArgument("young: log-perturbed parameters must be finite");
    if (!(std::min(p, p + r) > 1.0))
      throw InvalidArgument(
          "young: log-perturbed requires min(p, p + r) > 1 (q > 1 fails near 0 or infinity), "
          "got p=" + detail::format_double(p) + " r=" + detail::format_double(r));
    auto raw = [p, r](double t) { return std::pow(t, p) * std::pow(std::log1p(t), r); };
    double lo = 1.0, hi = 1.0;
    while (raw(lo) > 1.0) lo *= 0.5;
    while (raw(hi) < 1.0) hi *= 2.0;
    YoungFunction y;
    y.family_ = YoungFamily::log_perturbed;
    y.power_ = p;
    y.log_r_ = r;
    y.scale_ = detail::bisect_increasing(raw, 1.0, lo, hi);
    // s psi / Psi = p + r t / ((1 + t) log(1 + t)) moves monotonically from
    // p + r (t -> 0) to p (t -> infinity), so the limits are the tight bounds.
    y.p_ = std::max(p, p + r);
    y.q_ = std::min(p, p + r);
    y.finish();
    return y;
  }

  /// User-supplied Psi with its derivative (and optionally second derivative).
  /// The argument is rescaled so that Psi(1) = 1; p and q are estimated by
  /// sampling s psi(s) / Psi(s) on [1e-6, 1e6] and widened by 1%.
  static YoungFunction custom(Map Psi, Map psi, Map dpsi = {}, std::string label = "custom") {
    if (!Psi || !psi) throw InvalidArgument("young: custom family needs Psi and psi");
    double lo = 1.0, hi = 1.0;
    for (int i = 0; i < 2000 && Psi(lo) > 1.0; ++i) lo *= 0.5;
    for (int i = 0; i < 2000 && Psi(hi) < 1.0; ++i) hi *= 2.0;
    if (!(Psi(hi) >= 1.0) || !(Psi(lo) <= 1.0))
      throw InvalidArgument("young: custom Psi never reaches 1; it cannot be normalized");
    YoungFunction y;
    y.family_ = YoungFamily::custom;
    y.scale_ = detail::bisect_increasing(Psi, 1.0, lo, hi);
    y.custom_Psi_ = std::move(Psi);
    y.custom_psi_ = std::move(psi);
    y.custom_dpsi_ = std::move(dpsi);
    y.label_ = std::move(label);
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (double s : detail::log_grid(1e-6, 1e6, 64)) {
      const double ratio = s * y.psi(s) / y.Psi(s);
      if (!std::isfinite(ratio)) continue;
      rmin = std::min(rmin, ratio);
      rmax = std::max(rmax, ratio);
    }
    y.q_ = rmin / 1.01;
    y.p_ = rmax * 1.01;
    y.bounds_estimated_ = true;
    if (!(y.q_ > 1.0))
      throw InvalidArgument("young: custom Psi has sampled s psi / Psi too close to 1 (q > 1 fails)");
    y.finish();
    return y;
  }

  double Psi(double s) const {
    const double a = std::abs(s);
    switch (family_) {
      case YoungFamily::pure_power:
        if (power_ == 2.0) return a * a;
        return std::pow(a, power_);
      case YoungFamily::power_sum: {
        double v = 0.0;
        for (const auto& t : terms_) v += t.k * std::pow(a, t.exponent);
        return v;
      }
      case YoungFamily::log_perturbed: {
        if (a == 0.0) return 0.0;
        const double x = scale_ * a;
        return std::pow(x, power_) * std::pow(std::log1p(x), log_r_);
      }
      case YoungFamily::custom:
        return custom_Psi_(scale_ * a);
    }
    return 0.0;
  }

  double psi(double s) const {
    const double a = std::abs(s);
    const double sg = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
    switch (family_) {
      case YoungFamily::pure_power:
        if (power_ == 2.0) return 2.0 * s;
        return sg * power_ * std::pow(a, power_ - 1.0);
      case YoungFamily::power_sum: {
        double v = 0.0;
        for (const auto& t : terms_) v += t.k * t.exponent * std::pow(a, t.exponent - 1.0);
        return sg * v;
      }
      case YoungFamily::log_perturbed: {
        if (a == 0.0) return 0.0;
        const double x = scale_ * a;
        const double L = std::log1p(x);
        const double v = power_ * std::pow(x, power_ - 1.0) * std::pow(L, log_r_) +
                         log_r_ * std::pow(x, power_) * std::pow(L, log_r_ - 1.0) / (1.0 + x);
        return sg * scale_ * v;
      }
      case YoungFamily::custom:
        return sg * scale_ * custom_psi_(scale_ * a);
    }
    return 0.0;
  }

  bool has_dpsi() const { return family_ != YoungFamily::custom || static_cast<bool>(custom_dpsi_); }

  /// psi'(s); at s = 0 returns the limit (0, a finite value, or +inf).
  double dpsi(double s) const {
    const double a = std::abs(s);
    switch (family_) {
      case YoungFamily::pure_power:
        if (power_ == 2.0) return 2.0;
        if (a == 0.0) return power_ > 2.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return power_ * (power_ - 1.0) * std::pow(a, power_ - 2.0);
      case YoungFamily::power_sum: {
        double v = 0.0;
        for (const auto& t : terms_) {
          if (t.exponent == 2.0) {
            v += 2.0 * t.k;
          } else if (a == 0.0) {
            if (t.exponent < 2.0) return std::numeric_limits<double>::infinity();
          } else {
            v += t.k * t.exponent * (t.exponent - 1.0) * std::pow(a, t.exponent - 2.0);
          }
        }
        return v;
      }
      case YoungFamily::log_perturbed: {
        const double e = power_ + log_r_;
        if (a == 0.0) {
          if (e > 2.0) return 0.0;
          if (e < 2.0) return std::numeric_limits<double>::infinity();
          return e * (e - 1.0) * scale_ * scale_;
        }
        const double x = scale_ * a, L = std::log1p(x), p = power_, r = log_r_;
        const double xp = std::pow(x, p), Lr = std::pow(L, r);
        const double dA = p * (p - 1.0) * xp / (x * x) * Lr + p * r * xp / x * Lr / L / (1.0 + x);
        const double dB = r * (p * xp / x * Lr / L / (1.0 + x) +
                               (r - 1.0) * xp * Lr / (L * L) / ((1.0 + x) * (1.0 + x)) -
                               xp * Lr / L / ((1.0 + x) * (1.0 + x)));
        return scale_ * scale_ * (dA + dB);
      }
      case YoungFamily::custom:
        if (!custom_dpsi_) throw InvalidArgument("young: custom family has no psi'");
        return scale_ * scale_ * custom_dpsi_(scale_ * a);
    }
    return 0.0;
  }

  double operator()(double s) const { return Psi(s); }

  /// Upper exponent p of Gamma_{p,q}.
  double p() const { return p_; }
  /// Lower exponent q of Gamma_{p,q}.
  double q() const { return q_; }
  YoungFamily family() const { return family_; }
  bool is_pure_power() const { return family_ == YoungFamily::pure_power; }
  /// True when p and q come from sampling rather than a closed form.
  bool bounds_estimated() const { return bounds_estimated_; }
  /// Argument scale t0 applied before the raw family formula.
  double scale() const { return scale_; }
  /// Normalized terms c_i |s|^{p_i} (power families only).
  const std::vector<PowerTerm>& terms() const { return terms_; }
  double log_exponent() const { return log_r_; }

  /// Growth exponents of Psi at 0 and at infinity, when known in closed form.
  std::optional<std::pair<double, double>> asymptotic_exponents() const {
    switch (family_) {
      case YoungFamily::pure_power: return std::pair{power_, power_};
      case YoungFamily::power_sum: return std::pair{q_, p_};
      case YoungFamily::log_perturbed: return std::pair{power_ + log_r_, power_};
      case YoungFamily::custom: return std::nullopt;
    }
    return std::nullopt;
  }
  double base_exponent() const { return power_; }

  /// Canonical one-line description, stable for digests.
  std::string describe() const {
    using detail::format_double;
    switch (family_) {
      case YoungFamily::pure_power:
        return "power(p=" + format_double(power_) + ")";
      case YoungFamily::power_sum: {
        std::string s = "power_sum(";
        for (std::size_t i = 0; i < raw_terms_.size(); ++i) {
          if (i) s += ",";
          s += format_double(raw_terms_[i].k) + "*|s|^" + format_double(raw_terms_[i].exponent);
        }
        return s + ")";
      }
      case YoungFamily::log_perturbed:
        return "log_perturbed(p=" + format_double(power_) + ",r=" + format_double(log_r_) + ")";
      case YoungFamily::custom:
        return "custom(" + label_ + ")";
    }
    return "unknown";
  }

 private:
  YoungFunction() = default;

  void finish() {
    // Convexity: psi must be nondecreasing; checked on a sample grid.
    double prev = 0.0;
    for (double s : detail::log_grid(1e-6, 1e6, 16)) {
      const double v = psi(s);
      if (!std::isfinite(v) || v < prev * (1.0 - 1e-12))
        throw InvalidArgument("young: psi is not nondecreasing on (0, inf); Psi is not convex");
      prev = v;
    }
  }

  YoungFamily family_ = YoungFamily::pure_power;
  double p_ = 2.0, q_ = 2.0;
  double power_ = 2.0;
  double log_r_ = 0.0;
  double scale_ = 1.0;
  bool bounds_estimated_ = false;
  std::vector<PowerTerm> terms_;
  std::vector<PowerTerm> raw_terms_;
  Map custom_Psi_, custom_psi_, custom_dpsi_;
  std::string label_;
};

/// A pair (inf, sup) of a ratio family.
struct GammaPair {
  double minus;
  double plus;
};

namespace detail {

// Extremal values of x -> ratio(x) over x in [1e-6, 1e6] (64 per decade),
// refined by golden-section search in log x around interior extrema, and
// merged with the limits at 0 and infinity when these are known.
template <class Ratio>
GammaPair ratio_extrema(Ratio&& ratio, std::span<const double> limits) {
  static const std::vector<double> xs = log_grid(1e-6, 1e6, 64);
  std::vector<double> vals(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) vals[i] = ratio(xs[i]);
  const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
  double lo = *mn, hi = *mx;
  auto refine = [&](std::size_t k, double sign) {
    if (k == 0 || k + 1 == xs.size()) return sign * vals[k];
    auto g = [&](double t) { return sign * ratio(std::exp(t)); };
    return golden_max(g, std::log(xs[k - 1]), std::log(xs[k + 1]));
  };
  lo = std::min(lo, -refine(static_cast<std::size_t>(mn - vals.begin()), -1.0));
  hi = std::max(hi, refine(static_cast<std::size_t>(mx - vals.begin()), 1.0));
  for (double v : limits) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

}  // namespace detail

/// gamma-(s) = inf_x Psi(sx)/Psi(x) and gamma+(s) = sup_x Psi(sx)/Psi(x).
inline GammaPair gamma_bounds(const YoungFunction& F, double s) {
  if (!(s > 0.0)) throw InvalidArgument("gamma_bounds: requires s > 0");
  if (s == 1.0) return {1.0, 1.0};
  std::vector<double> limits;
  if (auto e = F.asymptotic_exponents()) limits = {std::pow(s, e->first), std::pow(s, e->second)};
  return detail::ratio_extrema([&](double x) { return F.Psi(s * x) / F.Psi(x); }, limits);
}

/// The same characteristic functions for psi: inf/sup of psi(sx)/psi(x).
inline GammaPair gamma_psi_bounds(const YoungFunction& F, double s) {
  if (!(s > 0.0)) throw InvalidArgument("gamma_psi_bounds: requires s > 0");
  if (s == 1.0) return {1.0, 1.0};
  std::vector<double> limits;
  if (auto e = F.asymptotic_exponents())
    limits = {std::pow(s, e->first - 1.0), std::pow(s, e->second - 1.0)};
  return detail::ratio_extrema([&](double x) { return F.psi(s * x) / F.psi(x); }, limits);
}

/// Complementary Young function. `conjugate` is the exact Legendre
/// transform Phi*(b) = sup_a (ab - Psi(a)) = integral_0^|b| psi^{-1};
/// `operator()` is its argument-normalized form Phi(b) = Phi*(t1 b) with
/// Phi(1) = 1. Young's inequality and its equality case refer to Phi*.
class ComplementaryFunction {
 public:
  explicit ComplementaryFunction(YoungFunction F) : F_(std::move(F)) {
    auto g = [this](double t) { return conjugate(t); };
    double lo = 1.0, hi = 1.0;
    while (g(lo) > 1.0) lo *= 0.5;
    while (g(hi) < 1.0) hi *= 2.0;
    t1_ = detail::bisect_increasing(g, 1.0, lo, hi);
  }

  /// psi^{-1}(|b|) by monotone bisection (80 halvings of a dyadic bracket).
  double psi_inverse(double b) const {
    const double t = std::abs(b);
    if (t == 0.0) return 0.0;
    double hi = 1.0;
    int guard = 0;
    while (F_.psi(hi) < t) {
      hi *= 2.0;
      if (++guard > 2000 || !std::isfinite(hi))
        throw NumericalFailure("complementary: psi is bounded; cannot bracket psi^{-1}(" +
                               detail::format_double(t) + ")");
    }
    while (hi > 1e-300 && F_.psi(0.5 * hi) >= t) hi *= 0.5;
    double lo = 0.5 * hi;
    for (int i = 0; i < 80; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (F_.psi(mid) < t)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  double conjugate(double b) const {
    const double t = std::abs(b);
    if (t == 0.0) return 0.0;
    const double a = psi_inverse(t);
    return t * a - F_.Psi(a);
  }

  double conjugate_derivative(double b) const {
    return b < 0.0 ? -psi_inverse(b) : psi_inverse(b);
  }

  double operator()(double b) const { return conjugate(t1_ * b); }
  double phi(double b) const { return conjugate(t1_ * b); }
  double dphi(double b) const { return t1_ * conjugate_derivative(t1_ * b); }

  /// Argument scale with conjugate(t1) = 1.
  double scale() const { return t1_; }
  /// p' = p/(p-1): lower bound of b Phi'(b)/Phi(b).
  double p_conj() const { return F_.p() / (F_.p() - 1.0); }
  /// q' = q/(q-1): upper bound of b Phi'(b)/Phi(b).
  double q_conj() const { return F_.q() / (F_.q() - 1.0); }
  const YoungFunction& young() const { return F_; }

 private:
  YoungFunction F_;
  double t1_ = 1.0;
};

inline ComplementaryFunction complementary(const YoungFunction& F) { return ComplementaryFunction(F); }

/// inf{k > 0 : modular(k) <= 1} where modular(k) = F(u/k) is nonincreasing
/// in k. Bisection to relative tolerance 1e-10; 0 for the zero function.
template <class Modular>
double luxemburg_norm(Modular&& modular) {
  if (modular(1.0) == 0.0) return 0.0;
  double lo = 1.0, hi = 1.0;
  if (modular(1.0) > 1.0) {
    while (modular(hi) > 1.0) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw NumericalFailure("luxemburg_norm: modular never drops to 1");
    }
  } else {
    while (modular(lo) <= 1.0) {
      hi = lo;
      lo *= 0.5;
      if (lo < 1e-300) return 0.0;
    }
  }
  for (int i = 0; i < 200 && hi - lo > 1e-10 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (modular(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

/// Luxemburg norm of node values with uniform cell volume.
inline double luxemburg_norm(const YoungFunction& F, std::span<const double> values, double cell_volume) {
  std::vector<double> terms(values.size());
  return luxemburg_norm([&](double k) {
    for (std::size_t i = 0; i < values.size(); ++i) terms[i] = F.Psi(values[i] / k);
    return detail::pairwise_sum(terms) * cell_volume;
  });
}

/// Sampled hypotheses of the Clarkson-type inequalities.
struct ClarksonConditions {
  bool raizconvex = false;  ///< s psi'(s) / psi(s) >= 1
  bool psi_concave = false; ///< psi' nonincreasing on (0, inf)
  bool concavemas = false;  ///< c1 |s|^{e-2} <= psi' <= c2 |s|^{e-2}, 1 < e < 2
  double concavemas_exponent = std::numeric_limits<double>::quiet_NaN();
  double c1 = std::numeric_limits<double>::quiet_NaN();
  double c2 = std::numeric_limits<double>::quiet_NaN();
};

struct ClarksonReport {
  double lhs = 0.0;                 ///< (psi(a) - psi(b))(a - b)
  std::optional<double> rhs1;       ///< 4 Psi((a - b)/2)
  std::optional<double> rhs2;       ///< psi'(|a| + |b|)(a - b)^2
  std::optional<double> rhs3;       ///< c Psi(a-b)^{2/e} / (Psi(a) + Psi(b))^{(2-e)/e}
  ClarksonConditions conditions;
  std::vector<std::string> notes;   ///< "condition not satisfied" entries per case
};

/// Precomputed Clarkson data for one Young function: sampled conditions and
/// the constant of the third inequality, calibrated as the infimum of
/// lhs / (unit-constant rhs) over a 200 x 200 polar grid of (a, b)
/// (200 angles by 200 log-spaced radii in [1e-3, 1e3]).
class ClarksonCalculus {
 public:
  explicit ClarksonCalculus(YoungFunction F) : F_(std::move(F)) {
    if (!F_.has_dpsi()) return;
    const auto grid = detail::log_grid(1e-4, 1e4, 16);
    bool raiz = true, concave = true;
    double prev = std::numeric_limits<double>::infinity();
    for (double s : grid) {
      const double d = F_.dpsi(s);
      if (s * d / F_.psi(s) < 1.0 - 1e-12) raiz = false;
      if (d > prev * (1.0 + 1e-12)) concave = false;
      prev = d;
    }
    cond_.raizconvex = raiz;
    cond_.psi_concave = concave;
    for (double e : {F_.p(), F_.q()}) {
      if (!(e > 1.0 && e < 2.0)) continue;
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (double s : grid) {
        const double r = F_.dpsi(s) / std::pow(s, e - 2.0);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      if (lo > 0.0 && hi / lo <= 1e2) {
        cond_.concavemas = true;
        cond_.concavemas_exponent = e;
        cond_.c1 = lo;
        cond_.c2 = hi;
        break;
      }
    }
    if (cond_.concavemas) {
      double c = std::numeric_limits<double>::infinity();
      std::vector<double> rho(200);
      for (int k = 0; k < 200; ++k) rho[static_cast<std::size_t>(k)] = 1e-3 * std::pow(1e6, k / 199.0);
      for (int i = 0; i < 200; ++i) {
        const double th = 2.0 * detail::pi * (i + 0.5) / 200.0;
        for (double r : rho) {
          const double a = r * std::cos(th), b = r * std::sin(th);
          const double l = lhs(a, b), u = rhs3_unit(a, b);
          if (u > 0.0) c = std::min(c, l / u);
        }
      }
      c3_ = c;
    }
  }

  const ClarksonConditions& conditions() const { return cond_; }
  /// Calibrated constant of the third inequality (NaN when not applicable).
  double c3() const { return c3_; }
  const YoungFunction& young() const { return F_; }

  double lhs(double a, double b) const { return (F_.psi(a) - F_.psi(b)) * (a - b); }

  /// Third right side with unit constant.
  double rhs3_unit(double a, double b) const {
    const double e = cond_.concavemas_exponent;
    const double d = F_.Psi(a - b);
    if (d == 0.0) return 0.0;
    return std::pow(d, 2.0 / e) / std::pow(F_.Psi(a) + F_.Psi(b), (2.0 - e) / e);
  }

  ClarksonReport gap(double a, double b) const {
    ClarksonReport rep;
    rep.conditions = cond_;
    rep.lhs = lhs(a, b);
    if (cond_.raizconvex)
      rep.rhs1 = 4.0 * F_.Psi(0.5 * (a - b));
    else
      rep.notes.emplace_back("clarkson1: condition not satisfied (s psi'/psi >= 1)");
    if (cond_.psi_concave) {
      const double t = std::abs(a) + std::abs(b);
      rep.rhs2 = t == 0.0 ? 0.0 : F_.dpsi(t) * (a - b) * (a - b);
    } else {
      rep.notes.emplace_back("clarkson2: condition not satisfied (psi concave on (0, inf))");
    }
    if (cond_.concavemas)
      rep.rhs3 = c3_ * rhs3_unit(a, b);
    else
      rep.notes.emplace_back("clarkson3: condition not satisfied (c1|s|^{p-2} <= psi' <= c2|s|^{p-2}, 1<p<2)");
    return rep;
  }

 private:
  YoungFunction F_;
  ClarksonConditions cond_;
  double c3_ = std::numeric_limits<double>::quiet_NaN();
};

inline ClarksonReport clarkson_gap(const YoungFunction& F, double a, double b) {
  return ClarksonCalculus(F).gap(a, b);
}

}  // namespace nlo
