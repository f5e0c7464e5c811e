#pragma once

// Discrete nonlocal energies on a DomainGrid with zero exterior values.
//
// With node values u_i, cell volume h^N and pair weights w_ij,
//   F(u)      = sum_i Psi(u_i) h^N
//   E(u)      = sum_{i<j} Psi(u_i - u_j) w_ij + sum_i Psi(u_i) Lambda_i h^N
//   E(u; phi) = sum_{i<j} psi(u_i - u_j)(phi_i - phi_j) w_ij + sum_i psi(u_i) phi_i Lambda_i h^N
//   (Lu)_i    = sum_{j!=i} psi(u_i - u_j) w_ij / h^N + psi(u_i) Lambda_i
// Every sum uses a fixed reduction tree (one slot per row, then a pairwise
// tree over rows), so results do not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nlo/detail/numerics.hpp"
#include "nlo/errors.hpp"
#include "nlo/grid.hpp"
#include "nlo/kernel.hpp"
#include "nlo/young.hpp"

namespace nlo {

struct AssemblyOptions {
  double pair_budget = 1e8;
  /// Offsets with lattice length below this use exact cell averages.
  double near_radius = 3.0;
  int threads = detail::default_threads();
  double cell_rel_tol = 1e-11;
};

namespace detail {

/// Mean of J over the cell h * (d + [-1/2, 1/2]^N).
inline double cell_average(const Kernel& K, double h, int dx, int dy, double rel_tol) {
  const auto& br = K.breakpoints();
  if (K.dim() == 1) {
    const double a = h * (std::abs(dx) - 0.5), b = h * (std::abs(dx) + 0.5);
    return integrate([&](double r) { return K.profile(r); }, a, b, br, rel_tol) / h;
  }
  const double x0 = h * (dx - 0.5), x1 = h * (dx + 0.5);
  const double y0 = h * (dy - 0.5), y1 = h * (dy + 0.5);
  auto inner = [&](double y) {
    std::vector<double> xb;
    for (double b : br) {
      if (b <= std::abs(y)) continue;
      const double s = std::sqrt(b * b - y * y);
      xb.push_back(s);
      xb.push_back(-s);
    }
    xb.push_back(0.0);
    return integrate([&](double x) { return K.profile(std::hypot(x, y)); }, x0, x1, xb, rel_tol);
  };
  std::vector<double> yb(br.begin(), br.end());
  for (double b : br) yb.push_back(-b);
  yb.push_back(0.0);
  return integrate(inner, y0, y1, yb, 10.0 * rel_tol) / (h * h);
}

}  // namespace detail

class EnergyAssembly {
 public:
  EnergyAssembly(GridPtr grid, Kernel kernel, YoungFunction young, AssemblyOptions opt = {})
      : grid_(std::move(grid)), kernel_(std::move(kernel)), young_(std::move(young)), opt_(opt) {
    if (!grid_) throw InvalidArgument("assemble: null grid");
    if (grid_->dim() != kernel_.dim())
      throw InvalidArgument("assemble: kernel dimension " + std::to_string(kernel_.dim()) +
                            " does not match grid dimension " + std::to_string(grid_->dim()));
    const double n = static_cast<double>(grid_->size());
    const double pairs = 0.5 * n * (n - 1.0);
    if (pairs > opt_.pair_budget) {
      std::ostringstream os;
      os << "assemble: " << detail::format_double(pairs) << " node pairs exceed the budget of "
         << detail::format_double(opt_.pair_budget);
      throw ResourceLimit(os.str());
    }
    build_weights();
    build_lambda();
  }

  const GridPtr& grid() const { return grid_; }
  const Kernel& kernel() const { return kernel_; }
  const YoungFunction& young() const { return young_; }
  const AssemblyOptions& options() const { return opt_; }
  std::size_t size() const { return grid_->size(); }
  double cell_volume() const { return grid_->cell_volume(); }
  void set_threads(int t) { opt_.threads = std::max(1, t); }
  int threads() const { return opt_.threads; }

  /// w_ij for i != j (0 on the diagonal).
  double pair_weight(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    return table_[offset_index(i, j)];
  }
  /// Lambda_i = Lambda(Omega; x_i).
  const std::vector<double>& lambda() const { return lambda_; }
  /// sum_j w_ij / h^N + Lambda_i.
  double degree(std::size_t i) const { return degree_[i]; }
  double max_degree() const { return *std::max_element(degree_.begin(), degree_.end()); }

  double F_value(std::span<const double> u) const {
    check(u);
    std::vector<double> t(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) t[i] = young_.Psi(u[i]);
    return detail::pairwise_sum(t) * cell_volume();
  }

  double E_value(std::span<const double> u) const {
    check(u);
    const double hN = cell_volume();
    return row_reduce([&](std::size_t i, std::vector<double>& buf) {
      buf.clear();
      const double ui = u[i];
      for (std::size_t j = i + 1; j < u.size(); ++j) buf.push_back(young_.Psi(ui - u[j]) * table_[offset_index(i, j)]);
      buf.push_back(young_.Psi(ui) * lambda_[i] * hN);
      return detail::pairwise_sum(buf);
    });
  }

  double interaction(std::span<const double> u, std::span<const double> phi) const {
    check(u);
    check(phi);
    const double hN = cell_volume();
    return row_reduce([&](std::size_t i, std::vector<double>& buf) {
      buf.clear();
      const double ui = u[i], pi = phi[i];
      for (std::size_t j = i + 1; j < u.size(); ++j)
        buf.push_back(young_.psi(ui - u[j]) * (pi - phi[j]) * table_[offset_index(i, j)]);
      buf.push_back(young_.psi(ui) * pi * lambda_[i] * hN);
      return detail::pairwise_sum(buf);
    });
  }

  std::vector<double> apply_operator(std::span<const double> u) const {
    check(u);
    const double inv = 1.0 / cell_volume();
    std::vector<double> out(u.size());
    detail::parallel_rows(u.size(), opt_.threads, [&](std::size_t b, std::size_t e) {
      std::vector<double> buf;
      buf.reserve(u.size());
      for (std::size_t i = b; i < e; ++i) {
        buf.clear();
        const double ui = u[i];
        for (std::size_t j = 0; j < u.size(); ++j)
          if (j != i) buf.push_back(young_.psi(ui - u[j]) * table_[offset_index(i, j)]);
        out[i] = detail::pairwise_sum(buf) * inv + young_.psi(ui) * lambda_[i];
      }
    });
    return out;
  }

  /// Exact gradient of E_value: (Lu)_i h^N.
  std::vector<double> gradient_E(std::span<const double> u) const {
    std::vector<double> g = apply_operator(u);
    for (double& x : g) x *= cell_volume();
    return g;
  }

  double F_value(const GridFunction& u) const { return F_value(std::span<const double>(u.values)); }
  double E_value(const GridFunction& u) const { return E_value(std::span<const double>(u.values)); }
  double interaction(const GridFunction& u, const GridFunction& phi) const {
    return interaction(std::span<const double>(u.values), std::span<const double>(phi.values));
  }
  GridFunction apply_operator(const GridFunction& u) const {
    return GridFunction(grid_, apply_operator(std::span<const double>(u.values)));
  }
  GridFunction gradient_E(const GridFunction& u) const {
    return GridFunction(grid_, gradient_E(std::span<const double>(u.values)));
  }

  std::string describe() const {
    return "{" + grid_->describe() + " " + kernel_.describe() + " " + young_.describe() + "}";
  }

 private:
  std::size_t offset_index(std::size_t i, std::size_t j) const {
    const auto& a = grid_->lattice(i);
    const auto& b = grid_->lattice(j);
    const int dx = b[0] - a[0] + mx_, dy = b[1] - a[1] + my_;
    return static_cast<std::size_t>(dx) * static_cast<std::size_t>(2 * my_ + 1) + static_cast<std::size_t>(dy);
  }

  void check(std::span<const double> u) const {
    if (u.size() != grid_->size())
      throw InvalidArgument("energy: function has " + std::to_string(u.size()) + " values, grid has " +
                            std::to_string(grid_->size()));
  }

  template <class Row>
  double row_reduce(Row&& row) const {
    std::vector<double> slots(grid_->size());
    detail::parallel_rows(slots.size(), opt_.threads, [&](std::size_t b, std::size_t e) {
      std::vector<double> buf;
      buf.reserve(slots.size() + 1);
      for (std::size_t i = b; i < e; ++i) slots[i] = row(i, buf);
    });
    return detail::pairwise_sum(slots);
  }

  void build_weights() {
    const auto ext = grid_->extent();
    mx_ = ext[0] - 1;
    my_ = grid_->dim() == 1 ? 0 : ext[1] - 1;
    const double h = grid_->spacing();
    const int N = grid_->dim();
    const double h2N = std::pow(h, 2 * N);
    table_.assign(static_cast<std::size_t>(2 * mx_ + 1) * static_cast<std::size_t>(2 * my_ + 1), 0.0);
    for (int dx = 0; dx <= mx_; ++dx) {
      for (int dy = 0; dy <= my_; ++dy) {
        if (dx == 0 && dy == 0) continue;
        const double len = std::hypot(dx, dy);
        double w;
        if (len < opt_.near_radius)
          w = detail::cell_average(kernel_, h, dx, dy, opt_.cell_rel_tol) * h2N;
        else
          w = kernel_.profile(h * len) * h2N;
        for (int sx : {-1, 1})
          for (int sy : {-1, 1}) {
            const std::size_t k = static_cast<std::size_t>(sx * dx + mx_) * static_cast<std::size_t>(2 * my_ + 1) +
                                  static_cast<std::size_t>(sy * dy + my_);
            table_[k] = w;
          }
      }
    }
    for (double w : table_)
      if (!std::isfinite(w)) throw NumericalFailure("assemble: non-finite pair weight");
  }

  void build_lambda() {
    const std::size_t n = grid_->size();
    lambda_.assign(n, 0.0);
    detail::parallel_rows(n, opt_.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) lambda_[i] = lambda_exterior(kernel_, *grid_, grid_->node(i));
    });
    degree_.assign(n, 0.0);
    const double inv = 1.0 / cell_volume();
    std::vector<double> buf;
    for (std::size_t i = 0; i < n; ++i) {
      buf.clear();
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) buf.push_back(table_[offset_index(i, j)]);
      degree_[i] = detail::pairwise_sum(buf) * inv + lambda_[i];
    }
  }

  GridPtr grid_;
  Kernel kernel_;
  YoungFunction young_;
  AssemblyOptions opt_;
  int mx_ = 0, my_ = 0;
  std::vector<double> table_;
  std::vector<double> lambda_;
  std::vector<double> degree_;
};

inline EnergyAssembly assemble(GridPtr grid, Kernel kernel, YoungFunction young, AssemblyOptions opt = {}) {
  return EnergyAssembly(std::move(grid), std::move(kernel), std::move(young), opt);
}

inline double F_value(const EnergyAssembly& A, const GridFunction& u) { return A.F_value(u); }
inline double E_value(const EnergyAssembly& A, const GridFunction& u) { return A.E_value(u); }
inline double interaction(const EnergyAssembly& A, const GridFunction& u, const GridFunction& phi) {
  return A.interaction(u, phi);
}
inline GridFunction apply_operator(const EnergyAssembly& A, const GridFunction& u) { return A.apply_operator(u); }
inline GridFunction gradient_E(const EnergyAssembly& A, const GridFunction& u) { return A.gradient_E(u); }

}  // namespace nlo
