#pragma once

// Uniform cell-centered grids on bounded domains (interval, box, ball) and
// real grid functions that vanish outside the domain.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nlo/detail/numerics.hpp"
#include "nlo/errors.hpp"

namespace nlo {

enum class Shape { interval, box, ball };

inline const char* shape_name(Shape s) {
  switch (s) {
    case Shape::interval: return "interval";
    case Shape::box: return "box";
    case Shape::ball: return "ball";
  }
  return "unknown";
}

using Point = std::array<double, 2>;

/// Lebesgue measure of the unit ball in R^N.
inline double ball_volume(int dim) { return dim == 1 ? 2.0 : detail::pi; }
/// Surface measure of the unit sphere in R^N.
inline double sphere_measure(int dim) { return dim == 1 ? 2.0 : 2.0 * detail::pi; }

class DomainGrid {
 public:
  /// Interval (a, b) split into n cells.
  static DomainGrid interval(double a, double b, int n) {
    if (!(b > a)) throw InvalidArgument("grid: interval requires a < b (zero measure)");
    check_n(n);
    DomainGrid g;
    g.shape_ = Shape::interval;
    g.dim_ = 1;
    g.n_ = n;
    g.lo_ = {a, 0.0};
    g.hi_ = {b, 0.0};
    g.h_ = (b - a) / n;
    g.nx_ = n;
    g.ny_ = 1;
    for (int i = 0; i < n; ++i) g.add(i, 0, {a + (i + 0.5) * g.h_, 0.0});
    return g;
  }

  /// Box (a1, b1) x (a2, b2) with n square cells along the first axis; the
  /// second side must be an integer multiple of the spacing.
  static DomainGrid box(double a1, double b1, double a2, double b2, int n) {
    if (!(b1 > a1) || !(b2 > a2)) throw InvalidArgument("grid: box requires a_i < b_i (zero measure)");
    check_n(n);
    const double h = (b1 - a1) / n;
    const double m_real = (b2 - a2) / h;
    const long m = std::lround(m_real);
    if (std::abs(m_real - static_cast<double>(m)) > 1e-9 * m_real || m < 1)
      throw InvalidArgument("grid: box side ratio must give an integer cell count on the second axis");
    DomainGrid g;
    g.shape_ = Shape::box;
    g.dim_ = 2;
    g.n_ = n;
    g.lo_ = {a1, a2};
    g.hi_ = {b1, b2};
    g.h_ = h;
    g.nx_ = n;
    g.ny_ = static_cast<int>(m);
    for (int i = 0; i < g.nx_; ++i)
      for (int j = 0; j < g.ny_; ++j) g.add(i, j, {a1 + (i + 0.5) * h, a2 + (j + 0.5) * h});
    return g;
  }

  /// Disk of the given center and radius; the bounding square is split into
  /// n x n cells and the cells whose centers lie strictly inside are kept.
  static DomainGrid ball(Point center, double radius, int n) {
    if (!(radius > 0.0)) throw InvalidArgument("grid: ball requires radius > 0 (zero measure)");
    check_n(n);
    DomainGrid g;
    g.shape_ = Shape::ball;
    g.dim_ = 2;
    g.n_ = n;
    g.center_ = center;
    g.radius_ = radius;
    g.lo_ = {center[0] - radius, center[1] - radius};
    g.hi_ = {center[0] + radius, center[1] + radius};
    g.h_ = 2.0 * radius / n;
    g.nx_ = g.ny_ = n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Point x{g.lo_[0] + (i + 0.5) * g.h_, g.lo_[1] + (j + 0.5) * g.h_};
        if (std::hypot(x[0] - center[0], x[1] - center[1]) < radius) g.add(i, j, x);
      }
    if (g.nodes_.empty()) throw InvalidArgument("grid: ball has no interior cell centers");
    return g;
  }

  int dim() const { return dim_; }
  Shape shape() const { return shape_; }
  int n_per_axis() const { return n_; }
  double spacing() const { return h_; }
  double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }
  std::size_t size() const { return nodes_.size(); }
  const Point& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<Point>& nodes() const { return nodes_; }
  /// Integer lattice index (ix, iy) of node i; iy = 0 in 1D.
  const std::array<int, 2>& lattice(std::size_t i) const { return lattice_[i]; }
  /// Lattice extent along each axis (cells of the bounding box).
  std::array<int, 2> extent() const { return {nx_, ny_}; }
  const Point& lower() const { return lo_; }
  const Point& upper() const { return hi_; }
  Point center() const {
    if (shape_ == Shape::ball) return center_;
    return {0.5 * (lo_[0] + hi_[0]), dim_ == 1 ? 0.0 : 0.5 * (lo_[1] + hi_[1])};
  }
  double radius() const { return radius_; }

  /// Exact measure of the continuous domain.
  double measure() const {
    switch (shape_) {
      case Shape::interval: return hi_[0] - lo_[0];
      case Shape::box: return (hi_[0] - lo_[0]) * (hi_[1] - lo_[1]);
      case Shape::ball: return detail::pi * radius_ * radius_;
    }
    return 0.0;
  }

  /// sup over the domain of the distance to the complement.
  double inradius() const {
    switch (shape_) {
      case Shape::interval: return 0.5 * (hi_[0] - lo_[0]);
      case Shape::box: return 0.5 * std::min(hi_[0] - lo_[0], hi_[1] - lo_[1]);
      case Shape::ball: return radius_;
    }
    return 0.0;
  }

  bool contains(const Point& x) const {
    switch (shape_) {
      case Shape::interval: return x[0] > lo_[0] && x[0] < hi_[0];
      case Shape::box: return x[0] > lo_[0] && x[0] < hi_[0] && x[1] > lo_[1] && x[1] < hi_[1];
      case Shape::ball: return std::hypot(x[0] - center_[0], x[1] - center_[1]) < radius_;
    }
    return false;
  }

  /// Canonical description used in digests and reports.
  std::string describe() const {
    using detail::format_double;
    switch (shape_) {
      case Shape::interval:
        return "interval(" + format_double(lo_[0]) + "," + format_double(hi_[0]) + ";n=" + std::to_string(n_) + ")";
      case Shape::box:
        return "box(" + format_double(lo_[0]) + "," + format_double(hi_[0]) + "," + format_double(lo_[1]) + "," +
               format_double(hi_[1]) + ";n=" + std::to_string(n_) + ")";
      case Shape::ball:
        return "ball(" + format_double(center_[0]) + "," + format_double(center_[1]) + "," +
               format_double(radius_) + ";n=" + std::to_string(n_) + ")";
    }
    return "unknown";
  }

 private:
  DomainGrid() = default;

  static void check_n(int n) {
    if (n < 4) throw InvalidArgument("grid: n_per_axis must be >= 4");
  }

  void add(int i, int j, Point x) {
    nodes_.push_back(x);
    lattice_.push_back({i, j});
  }

  Shape shape_ = Shape::interval;
  int dim_ = 1;
  int n_ = 0;
  double h_ = 0.0;
  int nx_ = 0, ny_ = 0;
  Point lo_{}, hi_{};
  Point center_{};
  double radius_ = 0.0;
  std::vector<Point> nodes_;
  std::vector<std::array<int, 2>> lattice_;
};

using GridPtr = std::shared_ptr<const DomainGrid>;

inline GridPtr make_interval_grid(double a, double b, int n) {
  return std::make_shared<const DomainGrid>(DomainGrid::interval(a, b, n));
}
inline GridPtr make_box_grid(double a1, double b1, double a2, double b2, int n) {
  return std::make_shared<const DomainGrid>(DomainGrid::box(a1, b1, a2, b2, n));
}
inline GridPtr make_ball_grid(Point center, double radius, int n) {
  return std::make_shared<const DomainGrid>(DomainGrid::ball(center, radius, n));
}

/// Node values on a grid; the function is zero outside the domain.
struct GridFunction {
  GridPtr grid;
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(GridPtr g) : grid(std::move(g)), values(grid->size(), 0.0) {}
  GridFunction(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->size()) throw InvalidArgument("grid function: value count does not match node count");
    for (double x : values)
      if (!std::isfinite(x)) throw InvalidArgument("grid function: values must be finite");
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  GridFunction scaled(double c) const {
    GridFunction r = *this;
    for (auto& v : r.values) v *= c;
    return r;
  }
  GridFunction abs() const {
    GridFunction r = *this;
    for (auto& v : r.values) v = std::abs(v);
    return r;
  }
  GridFunction positive_part() const {
    GridFunction r = *this;
    for (auto& v : r.values) v = std::max(v, 0.0);
    return r;
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  double min() const { return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end()); }
  double max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
  bool is_zero() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
  }
};

inline GridFunction operator+(const GridFunction& a, const GridFunction& b) {
  GridFunction r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r.values[i] += b.values[i];
  return r;
}
inline GridFunction operator-(const GridFunction& a, const GridFunction& b) {
  GridFunction r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r.values[i] -= b.values[i];
  return r;
}

/// (sum |u_i|^r h^N)^{1/r}.
inline double lp_norm(const GridFunction& u, double r) {
  std::vector<double> t(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) t[i] = std::pow(std::abs(u.values[i]), r);
  return std::pow(detail::pairwise_sum(t) * u.grid->cell_volume(), 1.0 / r);
}

/// Cosine bump height * (1 + cos(pi |x - c| / radius)) / 2 inside the radius.
inline GridFunction bump(const GridPtr& grid, Point center, double radius, double height) {
  if (!(radius > 0.0)) throw InvalidArgument("bump: radius must be positive");
  GridFunction u(grid);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const Point& x = grid->node(i);
    const double d = grid->dim() == 1 ? std::abs(x[0] - center[0]) : std::hypot(x[0] - center[0], x[1] - center[1]);
    if (d < radius) u.values[i] = height * 0.5 * (1.0 + std::cos(detail::pi * d / radius));
  }
  return u;
}

/// Independent uniform values in [-amplitude, amplitude], node by node.
inline GridFunction random_function(const GridPtr& grid, std::uint64_t seed, double amplitude) {
  detail::Rng rng(seed);
  GridFunction u(grid);
  for (auto& v : u.values) v = rng.uniform(-amplitude, amplitude);
  return u;
}

/// Discrete decreasing rearrangement: |values| sorted in descending order
/// and placed on nodes ranked by distance to the domain center (ties by
/// node index).
inline GridFunction decreasing_rearrangement(const GridFunction& u) {
  const auto& g = *u.grid;
  const Point c = g.center();
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> dist(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point& x = g.node(i);
    dist[i] = g.dim() == 1 ? std::abs(x[0] - c[0]) : std::hypot(x[0] - c[0], x[1] - c[1]);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  std::vector<double> mags(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) mags[i] = std::abs(u.values[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  GridFunction r(u.grid);
  for (std::size_t k = 0; k < order.size(); ++k) r.values[order[k]] = mags[k];
  return r;
}

/// CSV with header "x,value" (1D) or "x,y,value" (2D), one row per node.
inline void write_csv(std::ostream& os, const GridFunction& u) {
  const auto& g = *u.grid;
  os << (g.dim() == 1 ? "x,value\n" : "x,y,value\n");
  for (std::size_t i = 0; i < g.size(); ++i) {
    os << detail::format_double(g.node(i)[0]) << ',';
    if (g.dim() == 2) os << detail::format_double(g.node(i)[1]) << ',';
    os << detail::format_double(u.values[i]) << '\n';
  }
}

}  // namespace nlo
