#pragma once

// Eigenpairs of the p = 2 problem for quadratic norms: the symmetric
// 5-point operator  -(w1 d11 + w2 d22)  with lumped mass h^2 I.

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <random>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/fem.hpp"

namespace finsler {

struct LinearEigenpairs {
  std::vector<double> values;          ///< ascending
  std::vector<Eigen::VectorXd> vectors; ///< M-orthonormal: h^2 x^T x = 1
  int iterations = 0;
  double residual = 0.0;               ///< max relative residual of the returned pairs
};

struct LinearOptions {
  int max_iter = 2000;
  double tol = 1e-11;
  int guard = 3;  ///< extra block columns beyond the requested count
  unsigned seed = 12345u;
};

/// Lowest `count` eigenpairs by block inverse iteration with Rayleigh-Ritz
/// projection. The block is re-orthonormalized in the mass inner product
/// after every solve, which deflates converged directions from the rest.
inline LinearEigenpairs linear_eigenpairs(const Triangulation& mesh, const Norm& norm, int count,
                                          const LinearOptions& opts = {}) {
  if (!norm.is_quadratic())
    throw InvalidNormError("linear p = 2 oracle requires a quadratic norm");
  const int n = mesh.node_count();
  if (count < 1 || count > n) throw ConfigError("requested eigenpair count out of range");
  const int m = std::min(n, count + opts.guard);
  const double h2 = mesh.h() * mesh.h();

  const Eigen::SparseMatrix<double> k = stiffness(mesh, norm);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(k);
  if (chol.info() != Eigen::Success) throw ConvergenceError("stiffness factorization failed", 0, 0.0);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd x(n, m);
  for (int c = 0; c < m; ++c)
    for (int r = 0; r < n; ++r) x(r, c) = c == 0 ? 1.0 : unif(rng);

  LinearEigenpairs out;
  Eigen::VectorXd theta;
  for (int it = 1; it <= opts.max_iter; ++it) {
    Eigen::MatrixXd y = chol.solve(x);
    // Rayleigh-Ritz on span(y): (y^T K y) v = theta h^2 (y^T y) v.
    const Eigen::MatrixXd ky = k * y;
    Eigen::MatrixXd a = y.transpose() * ky;
    Eigen::MatrixXd b = h2 * (y.transpose() * y);
    a = 0.5 * (a + a.transpose()).eval();
    b = 0.5 * (b + b.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(a, b);
    theta = ritz.eigenvalues();
    x = y * ritz.eigenvectors();
    const Eigen::MatrixXd kx = ky * ritz.eigenvectors();

    double worst = 0.0;
    for (int c = 0; c < count; ++c) {
      const Eigen::VectorXd r = kx.col(c) - theta[c] * h2 * x.col(c);
      worst = std::max(worst, r.norm() / (theta[c] * h2 * x.col(c).norm()));
    }
    out.iterations = it;
    out.residual = worst;
    if (worst <= opts.tol) break;
    if (it == opts.max_iter)
      throw ConvergenceError("linear eigensolver did not converge", it, worst);
  }

  for (int c = 0; c < count; ++c) {
    Eigen::VectorXd v = x.col(c);
    v /= std::sqrt(h2 * v.squaredNorm());
    if (v.sum() < 0.0) v = -v;
    out.values.push_back(theta[c]);
    out.vectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace finsler
