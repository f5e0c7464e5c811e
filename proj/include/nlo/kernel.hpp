#pragma once

// Radial kernels J(z) = j(|z|) that are not integrable at the origin and
// have an integrable tail, with the derived quantities that enter energy
// estimates: tail integral P(s), exterior interaction Lambda(Omega; x), the
// Poincare constant, and the scaling function mu(lambda) with its slope at 1.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nlo/detail/numerics.hpp"
#include "nlo/errors.hpp"
#include "nlo/grid.hpp"

namespace nlo {

enum class KernelFamily { fractional, two_exponent, log_kernel, piecewise_dyadic, custom };

inline const char* kernel_family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::fractional: return "fractional";
    case KernelFamily::two_exponent: return "two_exponent";
    case KernelFamily::log_kernel: return "log";
    case KernelFamily::piecewise_dyadic: return "piecewise_dyadic";
    case KernelFamily::custom: return "custom";
  }
  return "unknown";
}

/// Profile equals coeff * r^{-exponent} for r >= start.
struct PowerTail {
  double start;
  double coeff;
  double exponent;
};

class Kernel {
 public:
  using Profile = std::function<double(double)>;

  /// j(r) = r^{-N-alpha}.
  static Kernel fractional(double alpha, int dim) {
    check_dim(dim);
    if (!std::isfinite(alpha)) throw InvalidArgument("kernel: alpha must be finite");
    if (alpha < 0.0) throw InvalidArgument("kernel: fractional alpha < 0 is integrable at the origin (J in L1(B1))");
    if (!(alpha > 0.0)) throw InvalidArgument("kernel: fractional alpha = 0 has a tail that is not integrable");
    Kernel k(KernelFamily::fractional, dim);
    k.a1_ = k.a2_ = alpha;
    k.q_star_ = alpha;
    k.alpha_condition_ = alpha;
    k.tail_ = PowerTail{0.0, 1.0, dim + alpha};
    return k;
  }

  /// j(r) = r^{-N-a1} for r < 1 and r^{-N-a2} for r >= 1.
  static Kernel two_exponent(double inner, double outer, int dim) {
    check_dim(dim);
    if (!std::isfinite(inner) || !std::isfinite(outer)) throw InvalidArgument("kernel: exponents must be finite");
    if (inner < 0.0) throw InvalidArgument("kernel: inner exponent < 0 is integrable at the origin (J in L1(B1))");
    if (!(outer > 0.0)) throw InvalidArgument("kernel: outer exponent <= 0 gives a tail that is not integrable");
    Kernel k(KernelFamily::two_exponent, dim);
    k.a1_ = inner;
    k.a2_ = outer;
    k.q_star_ = inner;
    if (inner > 0.0) k.alpha_condition_ = inner;
    k.tail_ = PowerTail{1.0, 1.0, dim + outer};
    k.breaks_ = {1.0};
    return k;
  }

  /// j(r) = r^{-N-mu} |log(r/2)|^beta for r < 1, continued by
  /// (log 2)^beta r^{-N-1} for r >= 1.
  static Kernel log_kernel(double beta, int dim, double mu = 0.0) {
    check_dim(dim);
    if (!std::isfinite(beta) || !std::isfinite(mu)) throw InvalidArgument("kernel: parameters must be finite");
    if (mu < 0.0) throw InvalidArgument("kernel: log kernel with mu < 0 is integrable at the origin (J in L1(B1))");
    if (mu == 0.0 && beta < -1.0)
      throw InvalidArgument("kernel: log kernel with mu = 0 needs beta >= -1; otherwise J is integrable at the origin (J in L1(B1))");
    Kernel k(KernelFamily::log_kernel, dim);
    k.a1_ = mu;
    k.beta_ = beta;
    k.q_star_ = mu;
    if (mu > 0.0 && beta >= 0.0) k.alpha_condition_ = mu;
    k.tail_ = PowerTail{1.0, std::pow(std::log(2.0), beta), dim + 1.0};
    k.breaks_ = {1.0};
    return k;
  }

  /// Alternating dyadic shells: j(r) = r^{-N} when floor(-log2 r) is even
  /// and r^{-N-mu} when it is odd (r <= 1/2); j(r) = r^{-N-mu} for r > 1/2.
  static Kernel piecewise_dyadic(double mu, int dim) {
    check_dim(dim);
    if (!(mu > 0.0) || !std::isfinite(mu))
      throw InvalidArgument("kernel: piecewise dyadic needs mu > 0; otherwise the tail is not integrable");
    Kernel k(KernelFamily::piecewise_dyadic, dim);
    k.a1_ = mu;
    k.q_star_ = mu;
    k.tail_ = PowerTail{0.5, 1.0, dim + mu};
    for (int j = 1; j <= 60; ++j) k.breaks_.push_back(std::ldexp(1.0, -j));
    std::sort(k.breaks_.begin(), k.breaks_.end());
    return k;
  }

  /// Arbitrary positive radial profile with optional breakpoints and power
  /// tail. The singularity order is estimated rather than declared.
  static Kernel custom(Profile j, int dim, std::vector<double> breakpoints = {},
                       std::optional<PowerTail> tail = std::nullopt, std::string label = "custom") {
    check_dim(dim);
    if (!j) throw InvalidArgument("kernel: custom profile missing");
    Kernel k(KernelFamily::custom, dim);
    k.custom_ = std::move(j);
    k.breaks_ = std::move(breakpoints);
    std::sort(k.breaks_.begin(), k.breaks_.end());
    k.tail_ = tail;
    k.label_ = std::move(label);
    if (tail && !(tail->exponent > dim))
      throw InvalidArgument("kernel: custom tail exponent must exceed N; otherwise the tail is not integrable");
    for (double r : detail::log_grid(1e-6, 1e6, 8))
      if (!(k.profile(r) > 0.0)) throw InvalidArgument("kernel: custom profile must be positive (J(z) > 0)");
    return k;
  }

  /// Radial profile j(r), r > 0.
  double profile(double r) const {
    const double N = dim_;
    switch (family_) {
      case KernelFamily::fractional:
        if (dim_ == 1 && a1_ == 1.0) return 1.0 / (r * r);
        return std::pow(r, -N - a1_);
      case KernelFamily::two_exponent:
        return std::pow(r, -N - (r < 1.0 ? a1_ : a2_));
      case KernelFamily::log_kernel:
        if (r < 1.0) return std::pow(r, -N - a1_) * std::pow(std::abs(std::log(0.5 * r)), beta_);
        return tail_->coeff * std::pow(r, -N - 1.0);
      case KernelFamily::piecewise_dyadic: {
        if (r > 0.5) return std::pow(r, -N - a1_);
        const double level = std::floor(-std::log2(r));
        return std::fmod(level, 2.0) == 0.0 ? std::pow(r, -N) : std::pow(r, -N - a1_);
      }
      case KernelFamily::custom:
        return custom_(r);
    }
    return 0.0;
  }

  /// J(z) for z in R^N (second component ignored in 1D).
  double operator()(const Point& z) const {
    return profile(dim_ == 1 ? std::abs(z[0]) : std::hypot(z[0], z[1]));
  }

  int dim() const { return dim_; }
  KernelFamily family() const { return family_; }
  /// Declared singularity order (NaN for custom kernels).
  double q_star() const { return q_star_; }
  /// Exponent alpha with J(z) >= c |z|^{-N-alpha} near 0, if one exists.
  std::optional<double> alpha_condition() const { return alpha_condition_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::optional<PowerTail>& tail() const { return tail_; }
  double inner_exponent() const { return a1_; }
  double outer_exponent() const { return a2_; }
  double log_exponent() const { return beta_; }

  /// Sampled near-origin monotonicity: J(z1) >= c J(z2) for |z1| <= |z2| <= 1.
  /// The constant found on [1e-6, 1] must not collapse relative to [1e-3, 1].
  bool regular_v() const {
    auto constant = [this](double lo) {
      double running_min = std::numeric_limits<double>::infinity(), c = 1.0;
      for (double r : detail::log_grid(lo, 1.0, 64)) {
        running_min = std::min(running_min, profile(r));
        c = std::min(c, running_min / profile(r));
        for (double b : breaks_)
          if (b >= r && b < r * std::pow(10.0, 1.0 / 64)) {
            running_min = std::min(running_min, profile(b));
            c = std::min(c, running_min / profile(b * (1 + 1e-12)));
          }
      }
      return c;
    };
    return constant(1e-6) >= 0.5 * constant(1e-3);
  }

  std::string describe() const {
    using detail::format_double;
    const std::string n = ";N=" + std::to_string(dim_);
    switch (family_) {
      case KernelFamily::fractional: return "fractional(alpha=" + format_double(a1_) + n + ")";
      case KernelFamily::two_exponent:
        return "two_exponent(inner=" + format_double(a1_) + ",outer=" + format_double(a2_) + n + ")";
      case KernelFamily::log_kernel:
        return "log(beta=" + format_double(beta_) + ",mu=" + format_double(a1_) + n + ")";
      case KernelFamily::piecewise_dyadic: return "piecewise_dyadic(mu=" + format_double(a1_) + n + ")";
      case KernelFamily::custom: return "custom(" + label_ + n + ")";
    }
    return "unknown";
  }

 private:
  Kernel(KernelFamily f, int dim) : family_(f), dim_(dim) {}

  static void check_dim(int dim) {
    if (dim != 1 && dim != 2) throw InvalidArgument("kernel: dimension must be 1 or 2");
  }

  KernelFamily family_;
  int dim_;
  double a1_ = 0.0, a2_ = 0.0, beta_ = 0.0;
  double q_star_ = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> alpha_condition_;
  std::optional<PowerTail> tail_;
  std::vector<double> breaks_;
  Profile custom_;
  std::string label_;
};

namespace detail {

// Breakpoints of the profile inside (a, b) plus a geometric ladder a*2^k so
// that quadrature keeps relative accuracy across many decades.
inline std::vector<double> radial_breaks(const Kernel& K, double a, double b) {
  std::vector<double> out;
  for (double x : K.breakpoints())
    if (x > a && x < b) out.push_back(x);
  for (double x = 2.0 * a; x < b; x *= 2.0) out.push_back(x);
  return out;
}

// Integral of j(r) r^{N-1} over [a, b].
inline double radial_integral(const Kernel& K, double a, double b) {
  if (!(b > a)) return 0.0;
  const int N = K.dim();
  auto f = [&](double r) { return K.profile(r) * (N == 1 ? 1.0 : r); };
  const auto br = radial_breaks(K, a, b);
  return integrate(f, a, b, br);
}

}  // namespace detail

/// P(s) = integral over |z| > s of J(z) dz: quadrature up to the start of the
/// power tail, closed form beyond it.
inline double tail_integral(const Kernel& K, double s) {
  if (!(s > 0.0)) throw InvalidArgument("tail_integral: requires s > 0");
  const int N = K.dim();
  const double omega = sphere_measure(N);
  if (const auto& t = K.tail()) {
    const double start = std::max(s, t->start);
    const double analytic = t->coeff * std::pow(start, N - t->exponent) / (t->exponent - N);
    return omega * (detail::radial_integral(K, s, start) + analytic);
  }
  auto f = [&](double r) { return K.profile(r) * (N == 1 ? 1.0 : r); };
  return omega * detail::integrate_to_infinity(f, s, detail::radial_breaks(K, s, std::max(2.0 * s, 1e3)));
}

/// P(s) by direct quadrature of the whole semi-infinite radial integral
/// (no closed-form tail); an independent cross-check of tail_integral.
inline double tail_integral_quadrature(const Kernel& K, double s) {
  const int N = K.dim();
  auto f = [&](double r) { return K.profile(r) * (N == 1 ? 1.0 : r); };
  std::vector<double> br = detail::radial_breaks(K, s, 64.0 * std::max(1.0, s));
  return sphere_measure(N) * detail::integrate_to_infinity(f, s, br);
}

namespace detail {

// Length of the union of closed arcs [c - w, c + w] on the circle, for the
// four arcs centred at 0, pi/2, pi, 3pi/2 with half-widths below pi/2.
inline double arc_union(const std::array<double, 4>& w) {
  double total = 0.0;
  for (double x : w) total += 2.0 * x;
  for (int k = 0; k < 4; ++k) {
    const double a = w[static_cast<std::size_t>(k)], b = w[static_cast<std::size_t>((k + 1) % 4)];
    // Arcs centred pi/2 apart: overlap of [-a, a] and [pi/2 - b, pi/2 + b].
    const double lo = std::max(-a, 0.5 * pi - b), hi = std::min(a, 0.5 * pi + b);
    if (hi > lo) total -= hi - lo;
  }
  return total;
}

}  // namespace detail

/// Lambda(Omega; x) = integral of J(x - y) over y outside the domain.
inline double lambda_exterior(const Kernel& K, const DomainGrid& grid, const Point& x) {
  if (K.dim() != grid.dim()) throw InvalidArgument("lambda_exterior: kernel and grid dimensions differ");
  if (!grid.contains(x)) throw InvalidArgument("lambda_exterior: point is not inside the domain");
  if (grid.dim() == 1) {
    return 0.5 * (tail_integral(K, x[0] - grid.lower()[0]) + tail_integral(K, grid.upper()[0] - x[0]));
  }
  using detail::pi;
  if (grid.shape() == Shape::ball) {
    const Point c = grid.center();
    const double R = grid.radius();
    const double rho = std::hypot(x[0] - c[0], x[1] - c[1]);
    if (rho == 0.0) return tail_integral(K, R);
    auto sigma = [&](double r) {
      const double kappa = (R * R - rho * rho - r * r) / (2.0 * r * rho);
      return 2.0 * std::acos(std::clamp(kappa, -1.0, 1.0));
    };
    auto f = [&](double r) { return K.profile(r) * r * sigma(r); };
    const double a = R - rho, b = R + rho;
    std::vector<double> br = detail::radial_breaks(K, a, b);
    br.push_back(0.5 * (a + b));
    return detail::integrate_sqrt_ends(f, a, b, br) + tail_integral(K, b);
  }
  // Box: distances to the right, top, left and bottom sides.
  const std::array<double, 4> d{grid.upper()[0] - x[0], grid.upper()[1] - x[1], x[0] - grid.lower()[0],
                                x[1] - grid.lower()[1]};
  auto sigma = [&](double r) {
    std::array<double, 4> w{};
    for (std::size_t k = 0; k < 4; ++k) w[k] = d[k] < r ? std::acos(d[k] / r) : 0.0;
    return detail::arc_union(w);
  };
  auto f = [&](double r) { return K.profile(r) * r * sigma(r); };
  std::vector<double> br(d.begin(), d.end());
  double far = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double corner = std::hypot(d[k], d[(k + 1) % 4]);
    br.push_back(corner);
    far = std::max(far, corner);
  }
  const double near = *std::min_element(d.begin(), d.end());
  for (double b : detail::radial_breaks(K, near, far)) br.push_back(b);
  return detail::integrate_sqrt_ends(f, near, far, br) + tail_integral(K, far);
}

/// P((|Omega| / omega_N)^{1/N}): the lower bound for Lambda at every point.
inline double lambda_lower_bound(const Kernel& K, const DomainGrid& grid) {
  const double r = std::pow(grid.measure() / ball_volume(grid.dim()), 1.0 / grid.dim());
  return tail_integral(K, r);
}

/// A = mu_J |{delta < |z| < R}| with delta the inradius, R = 2 delta and
/// mu_J the minimum of J over 0 < |z| <= R (sampled, including both sides of
/// every profile breakpoint).
inline double poincare_constant(const Kernel& K, const DomainGrid& grid) {
  const double delta = grid.inradius();
  const double R = 2.0 * delta;
  double mu = K.profile(R);
  for (double r : detail::log_grid(1e-8 * R, R, 64)) mu = std::min(mu, K.profile(r));
  for (double b : K.breakpoints())
    if (b <= R) mu = std::min({mu, K.profile(b), K.profile(std::min(R, b * (1.0 + 1e-12)))});
  const int N = grid.dim();
  return mu * ball_volume(N) * (std::pow(R, N) - std::pow(delta, N));
}

struct ScalingProfile {
  std::vector<double> lambdas;
  std::vector<double> mu;       ///< mu(lambda); +inf when the sampled sup is unbounded
  double delta = 0.0;           ///< one-sided slope mu'(1+), Richardson-extrapolated
  bool finite = true;           ///< false when mu(lambda) = inf was detected
};

namespace detail {

// lambda^{-N} sup_r j(r/lambda)/j(r) over log-spaced r in [lo, hi], plus the
// radii adjacent to every breakpoint b and lambda b.
inline double scaling_sup(const Kernel& K, double lambda, double lo, double hi) {
  double s = 0.0;
  auto probe = [&](double r) {
    if (r > 0.0) s = std::max(s, K.profile(r / lambda) / K.profile(r));
  };
  for (double r : log_grid(lo, hi, 64)) probe(r);
  for (double b : K.breakpoints()) {
    if (b < lo || b > hi) continue;
    for (double t : {b, lambda * b}) {
      probe(t);
      probe(t * (1.0 + 1e-12));
      probe(t * (1.0 - 1e-12));
    }
  }
  return std::pow(lambda, -K.dim()) * s;
}

inline double scaling_mu(const Kernel& K, double lambda) {
  const double wide = scaling_sup(K, lambda, 1e-6, 1e6);
  const double narrow = scaling_sup(K, lambda, 1e-3, 1e3);
  if (!std::isfinite(wide) || wide > 1.5 * narrow) return std::numeric_limits<double>::infinity();
  return wide;
}

}  // namespace detail

/// mu(lambda) = lambda^{-N} sup J(z/lambda)/J(z) on the supplied lambdas and
/// delta = mu'(1+) from difference quotients at h = 0.01, 0.02, 0.04.
inline ScalingProfile scaling_profile(const Kernel& K, const std::vector<double>& lambdas) {
  ScalingProfile sp;
  for (double l : lambdas) {
    if (!(l >= 1.0)) throw InvalidArgument("scaling_profile: lambda must be >= 1");
    sp.lambdas.push_back(l);
    const double m = l == 1.0 ? 1.0 : detail::scaling_mu(K, l);
    sp.mu.push_back(m);
    if (!std::isfinite(m)) sp.finite = false;
  }
  double D[3];
  const double hs[3] = {0.01, 0.02, 0.04};
  for (int i = 0; i < 3; ++i) {
    const double m = detail::scaling_mu(K, 1.0 + hs[i]);
    if (!std::isfinite(m)) {
      sp.finite = false;
      sp.delta = std::numeric_limits<double>::infinity();
      return sp;
    }
    D[i] = (m - 1.0) / hs[i];
  }
  const double r1 = 2.0 * D[0] - D[1];
  const double r2 = 2.0 * D[1] - D[2];
  sp.delta = (4.0 * r1 - r2) / 3.0;
  return sp;
}

/// Heuristic singularity order: the local exponent log(r^N j(r)) / log(1/r)
/// read off at the three deepest decades where the profile is finite,
/// maximised and rounded to the nearest 0.01. Returns nullopt
/// ("indeterminate") when no finite sample exists or the value exceeds N + 2.
inline std::optional<double> estimate_singularity_order(const Kernel& K) {
  const int N = K.dim();
  std::vector<int> deep;
  for (int k = 1; k <= 320; ++k) {
    const double r = std::pow(10.0, -k);
    if (r == 0.0) break;
    const double j = K.profile(r);
    if (std::isfinite(j) && j > 0.0) deep.push_back(k);
  }
  if (deep.empty()) return std::nullopt;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = deep.size() >= 3 ? deep.size() - 3 : 0; i < deep.size(); ++i) {
    const double r = std::pow(10.0, -deep[i]);
    best = std::max(best, (std::log(K.profile(r)) + N * std::log(r)) / std::log(1.0 / r));
  }
  const double rounded = std::max(0.0, std::round(best * 100.0) / 100.0);
  if (rounded > N + 2) return std::nullopt;
  return rounded;
}

}  // namespace nlo
