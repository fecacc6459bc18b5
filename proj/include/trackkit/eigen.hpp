#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/matrix.hpp"

namespace trackkit {

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // column k is the eigenvector for values[k], orthonormal
};

// Cyclic Jacobi rotations for a symmetric matrix. Sweeps until the
// off-diagonal Frobenius norm falls below the library eigen tolerance.
inline EigenDecomposition sym_eigen(const Matrix& M) {
  const std::size_t n = M.rows;
  if (M.cols != n) throw SolverError("sym_eigen: matrix not square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(M(i, j) - M(j, i)) > tol::symmetry * std::max(1.0, std::abs(M(i, j))))
        throw SolverError("sym_eigen: matrix not symmetric");

  Matrix A = M;
  Matrix V(n, n);
  for (std::size_t i = 0; i < n; ++i) V(i, i) = 1.0;

  auto offdiag_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * A(i, j) * A(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && offdiag_norm() > tol::eigen_offdiag; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = A(p, q);
        if (std::abs(apq) < 1e-300) continue;
        double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return A(a, a) > A(b, b); });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = A(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = V(i, order[k]);
  }
  return out;
}

}  // namespace trackkit
