#pragma once

// Dense reference computations for the quadratic case Psi(s) = s^2, where
// E(u) = u^T K u with K_ii = sum_j w_ij + Lambda_i h^N and K_ij = -w_ij.
// Used by tests and the "oracle" CLI subcommand only.

#include <Eigen/Dense>

#include "nlo/energy.hpp"
#include "nlo/errors.hpp"

namespace nlo::oracle {

inline Eigen::MatrixXd quadratic_matrix(const EnergyAssembly& A) {
  const auto& Y = A.young();
  if (!(Y.is_pure_power() && Y.p() == 2.0)) throw InvalidArgument("oracle: dense oracles need Psi(s) = s^2");
  const std::size_t n = A.size();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double diag = A.lambda()[i] * A.cell_volume();
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = A.pair_weight(i, j);
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -w;
      diag += w;
    }
    K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag;
  }
  return K;
}

/// Solution of 2 K u = f h^N.
inline GridFunction dirichlet_solution(const EnergyAssembly& A, const GridFunction& f) {
  const Eigen::MatrixXd K = quadratic_matrix(A);
  Eigen::VectorXd b(static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) b(static_cast<Eigen::Index>(i)) = f[i] * A.cell_volume();
  const Eigen::VectorXd u = (2.0 * K).llt().solve(b);
  return GridFunction(A.grid(), std::vector<double>(u.data(), u.data() + u.size()));
}

struct EigenPair {
  double lambda1 = 0.0;
  GridFunction eigenfunction;  ///< normalized to sum u_i^2 h^N = 1, nonnegative sum
};

/// Smallest eigenvalue of K divided by h^N, i.e. min E(v) / F(v).
inline EigenPair principal_eigenpair(const EnergyAssembly& A) {
  const Eigen::MatrixXd K = quadratic_matrix(A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  if (es.info() != Eigen::Success) throw NumericalFailure("oracle: eigendecomposition failed");
  Eigen::VectorXd v = es.eigenvectors().col(0);
  if (v.sum() < 0) v = -v;
  v /= std::sqrt(v.squaredNorm() * A.cell_volume());
  return {es.eigenvalues()(0) / A.cell_volume(), GridFunction(A.grid(), std::vector<double>(v.data(), v.data() + v.size()))};
}

}  // namespace nlo::oracle
