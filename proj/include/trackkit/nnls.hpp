#pragma once

#include <cmath>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/matrix.hpp"

namespace trackkit {

// Lawson-Hanson active-set solver for min ||A x - b||_2 with x >= 0.
// KKT residuals at exit: gradient <= tol on the zero set, == 0 on the
// positive set.
inline Vector nnls(const Matrix& A, const Vector& b, double tol = 1e-10,
                   std::size_t max_outer = 0) {
  const std::size_t m = A.rows, n = A.cols;
  if (b.size() != m) throw SolverError("nnls: dimension mismatch");
  if (max_outer == 0) max_outer = 3 * n + 30;

  Vector x(n, 0.0);
  std::vector<char> passive(n, 0);

  auto residual_gradient = [&]() {
    Vector r(m);
    Vector Ax = matvec(A, x);
    for (std::size_t i = 0; i < m; ++i) r[i] = b[i] - Ax[i];
    return matvec_t(A, r);  // w = A'(b - Ax)
  };

  // Least squares restricted to the passive set, zeros elsewhere.
  auto solve_passive = [&](const std::vector<char>& p) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < n; ++j)
      if (p[j]) idx.push_back(j);
    Vector z(n, 0.0);
    if (idx.empty()) return z;
    Matrix Ap(m, idx.size());
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < idx.size(); ++k) Ap(i, k) = A(i, idx[k]);
    Vector zp;
    try {
      zp = ols(Ap, b);
    } catch (const SolverError&) {
      // Rank-deficient passive set: fall back to a tiny ridge.
      Matrix G = gram(Ap);
      for (std::size_t k = 0; k < idx.size(); ++k) G(k, k) += 1e-12;
      zp = solve_linear(std::move(G), matvec_t(Ap, b));
    }
    for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = zp[k];
    return z;
  };

  for (std::size_t outer = 0; outer < max_outer; ++outer) {
    Vector w = residual_gradient();
    std::size_t best = n;
    double best_w = tol;
    for (std::size_t j = 0; j < n; ++j) {
      if (!passive[j] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best == n) break;  // KKT satisfied
    passive[best] = 1;

    Vector z = solve_passive(passive);
    // Inner loop: back off along x -> z until z is feasible on the passive set.
    std::size_t inner_guard = 10 * n + 10;
    while (inner_guard-- > 0) {
      bool feasible = true;
      for (std::size_t j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= 0.0) {
          feasible = false;
          break;
        }
      }
      if (feasible) break;
      double alpha = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= 0.0) {
          double a = x[j] / (x[j] - z[j]);
          alpha = std::min(alpha, a);
        }
      }
      for (std::size_t j = 0; j < n; ++j)
        if (passive[j]) x[j] += alpha * (z[j] - x[j]);
      for (std::size_t j = 0; j < n; ++j) {
        if (passive[j] && x[j] <= 1e-14) {
          x[j] = 0.0;
          passive[j] = 0;
        }
      }
      z = solve_passive(passive);
    }
    for (std::size_t j = 0; j < n; ++j) x[j] = passive[j] ? z[j] : 0.0;
  }
  return x;
}

}  // namespace trackkit
