#pragma once

// Small numerical building blocks shared by every module: deterministic
// summation, a reproducible random stream, row-partitioned parallel loops
// and adaptive quadrature on finite and semi-infinite intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace nlo::detail {

inline constexpr double pi = 3.14159265358979323846;

/// Pairwise (tree) summation with a fixed reduction order.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Reproducible stream: std::mt19937_64 (fully specified by the standard)
/// with an explicit 53-bit mantissa mapping, so draws are identical on
/// every conforming implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Worker count from NLO_THREADS (default 1).
inline int default_threads() {
  if (const char* env = std::getenv("NLO_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// handled by exactly one worker, so callers writing to slot i get results
/// independent of the worker count.
template <class Body>
void parallel_rows(std::size_t n, int threads, Body&& body) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n == 0 ? 1 : n);
  if (workers <= 1 || n < 256) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(std::size_t{0}, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

// Boost's adaptive driver compares an error estimate taken on [-1, 1]
// against a tolerance in the original scale, which never terminates on
// short intervals (Boost 1.74). Only its fixed 31-point rule is used here;
// the bisection driver below scales the error estimate itself.
template <class F>
double gk_adaptive(F& f, double a, double b, double abs_tol, int depth) {
  double err = 0.0, l1 = 0.0;
  const double r = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err, &l1);
  const double scale = 0.5 * (b - a);
  err *= scale;
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(l1);
  if (depth <= 0 || err <= abs_tol || err <= floor) return r;
  const double mid = 0.5 * (a + b);
  return gk_adaptive(f, a, mid, 0.5 * abs_tol, depth - 1) + gk_adaptive(f, mid, b, 0.5 * abs_tol, depth - 1);
}

template <class F>
double gk_integrate(F& f, double a, double b, double rel_tol, int depth = 24) {
  double err = 0.0, l1 = 0.0;
  const double r0 = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err, &l1);
  const double ref = std::max(std::abs(r0), std::abs(l1));
  return gk_adaptive(f, a, b, rel_tol * ref, depth);
}

/// Adaptive Gauss-Kronrod on [a, b], splitting at the given interior
/// breakpoints (points outside (a, b) are ignored).
template <class F>
double integrate(F&& f, double a, double b, std::span<const double> breaks = {},
                 double rel_tol = 1e-11) {
  if (!(b > a)) return 0.0;
  std::vector<double> pts{a};
  for (double x : breaks)
    if (x > a && x < b) pts.push_back(x);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<double> parts;
  parts.reserve(pts.size());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    parts.push_back(gk_integrate(f, pts[i], pts[i + 1], rel_tol));
  }
  return pairwise_sum(parts);
}

/// Like integrate(), but each segment [p, p + L] is mapped by
/// r = p + L (1 - cos t) / 2, which removes square-root behaviour at the
/// segment ends (arc-length factors of exterior integrals).
template <class F>
double integrate_sqrt_ends(F&& f, double a, double b, std::span<const double> breaks = {},
                           double rel_tol = 1e-11) {
  if (!(b > a)) return 0.0;
  std::vector<double> pts{a};
  for (double x : breaks)
    if (x > a && x < b) pts.push_back(x);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<double> parts;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double p = pts[i], L = pts[i + 1] - pts[i];
    auto g = [&](double t) { return f(p + 0.5 * L * (1.0 - std::cos(t))) * 0.5 * L * std::sin(t); };
    parts.push_back(gk_integrate(g, 0.0, pi, rel_tol));
  }
  return pairwise_sum(parts);
}

/// Integral of f over [a, inf): Gauss-Kronrod up to the last breakpoint,
/// then a double-exponential (exp-sinh) rule on the unbounded remainder.
template <class F>
double integrate_to_infinity(F&& f, double a, std::span<const double> breaks = {},
                             double rel_tol = 1e-11) {
  double last = a;
  for (double x : breaks)
    if (x > last) last = x;
  const double head = integrate(f, a, last, breaks, rel_tol);
  boost::math::quadrature::exp_sinh<double> rule;
  const double tail =
      rule.integrate(f, last, std::numeric_limits<double>::infinity(), std::sqrt(rel_tol));
  return head + tail;
}

/// Log-spaced points lo * 10^(k / per_decade) up to and including hi.
inline std::vector<double> log_grid(double lo, double hi, int per_decade) {
  const int count = static_cast<int>(std::lround(std::log10(hi / lo) * per_decade));
  std::vector<double> out(static_cast<std::size_t>(count) + 1);
  for (int k = 0; k <= count; ++k)
    out[static_cast<std::size_t>(k)] = lo * std::pow(10.0, static_cast<double>(k) / per_decade);
  out.back() = hi;
  return out;
}

/// Finds t in [lo, hi] with g(t) = target for nondecreasing g, by bisection.
template <class G>
double bisect_increasing(G&& g, double target, double lo, double hi, int iters = 200,
                         double rel_tol = 1e-15) {
  for (int i = 0; i < iters && hi - lo > rel_tol * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Golden-section search for a maximum of f on [a, b].
template <class F>
double golden_max(F&& f, double a, double b, int iters = 80) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters && (b - a) > 1e-15 * (std::abs(a) + std::abs(b) + 1e-300); ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return std::max(fc, fd);
}

/// FNV-1a 64-bit digest, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

/// Shortest round-trip text for a double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace nlo::detail
