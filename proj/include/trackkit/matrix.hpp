#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "trackkit/common.hpp"

namespace trackkit {

using Vector = std::vector<double>;

// Dense row-major matrix. Deliberately minimal: the solvers in this library
// only need element access, products and a pivoted linear solve.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::size_t size() const { return data.size(); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Vector row(std::size_t i) const {
    return Vector(data.begin() + static_cast<std::ptrdiff_t>(i * cols),
                  data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
  }

  Vector col(std::size_t j) const {
    Vector out(rows);
    for (std::size_t i = 0; i < rows; ++i) out[i] = (*this)(i, j);
    return out;
  }
};

inline double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vector& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// y = A x
inline Vector matvec(const Matrix& A, const Vector& x) {
  Vector y(A.rows, 0.0);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double s = 0.0;
    const double* arow = &A.data[i * A.cols];
    for (std::size_t j = 0; j < A.cols; ++j) s += arow[j] * x[j];
    y[i] = s;
  }
  return y;
}

// y = A^T x
inline Vector matvec_t(const Matrix& A, const Vector& x) {
  Vector y(A.cols, 0.0);
  for (std::size_t i = 0; i < A.rows; ++i) {
    const double* arow = &A.data[i * A.cols];
    for (std::size_t j = 0; j < A.cols; ++j) y[j] += arow[j] * x[i];
  }
  return y;
}

// A^T A
inline Matrix gram(const Matrix& A) {
  Matrix G(A.cols, A.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    const double* arow = &A.data[i * A.cols];
    for (std::size_t j = 0; j < A.cols; ++j) {
      for (std::size_t k = j; k < A.cols; ++k) G(j, k) += arow[j] * arow[k];
    }
  }
  for (std::size_t j = 0; j < A.cols; ++j)
    for (std::size_t k = 0; k < j; ++k) G(j, k) = G(k, j);
  return G;
}

// Solves M x = b by Gaussian elimination with partial pivoting.
// M is destroyed. Throws SolverError on (numerically) singular systems.
inline Vector solve_linear(Matrix M, Vector b) {
  const std::size_t n = M.rows;
  if (M.cols != n || b.size() != n) throw SolverError("solve_linear: dimension mismatch");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(M(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(M(i, k)) > best) {
        best = std::abs(M(i, k));
        piv = i;
      }
    }
    if (best < 1e-13) throw SolverError("solve_linear: singular system");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(M(k, j), M(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      double f = M(i, k) / M(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) M(i, j) -= f * M(k, j);
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= M(i, j) * x[j];
    x[i] = s / M(i, i);
  }
  return x;
}

// Ordinary least squares via normal equations: argmin ||y - A beta||_2.
inline Vector ols(const Matrix& A, const Vector& y) {
  if (A.rows != y.size()) throw SolverError("ols: dimension mismatch");
  return solve_linear(gram(A), matvec_t(A, y));
}

inline double mean(const Vector& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample standard deviation (n-1 denominator).
inline double sample_sd(const Vector& v) {
  if (v.size() < 2) return 0.0;
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double pearson(const Vector& x, const Vector& y) {
  double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace trackkit
