#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/eigen.hpp"
#include "trackkit/matrix.hpp"
#include "trackkit/portfolio.hpp"
#include "trackkit/tracking.hpp"

namespace trackkit {

struct FactorDecomposition {
  Matrix factors;   // T x k principal-component scores
  Matrix loadings;  // n x k per-asset OLS coefficients on the factors
  Vector r2;        // per-asset coefficient of determination
};

// PCA on the centered panel: scores are X V for the top-k eigenvectors of
// X'X, then each asset is regressed on the scores (with intercept).
inline FactorDecomposition factor_decompose(const Matrix& panel, std::size_t k) {
  const std::size_t T = panel.rows, n = panel.cols;
  if (k == 0 || k >= std::min(T, n)) throw ConfigError("factor_decompose: bad factor count");
  Matrix X(T, n);
  for (std::size_t j = 0; j < n; ++j) {
    double m = 0.0;
    for (std::size_t t = 0; t < T; ++t) m += panel(t, j);
    m /= static_cast<double>(T);
    for (std::size_t t = 0; t < T; ++t) X(t, j) = panel(t, j) - m;
  }
  EigenDecomposition eig = sym_eigen(gram(X));

  FactorDecomposition out;
  out.factors = Matrix(T, k);
  for (std::size_t f = 0; f < k; ++f)
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += X(t, j) * eig.vectors(j, f);
      out.factors(t, f) = s;
    }

  out.loadings = Matrix(n, k);
  out.r2.assign(n, 0.0);
  Matrix D(T, k + 1);  // design: intercept + factors
  for (std::size_t t = 0; t < T; ++t) {
    D(t, 0) = 1.0;
    for (std::size_t f = 0; f < k; ++f) D(t, 1 + f) = out.factors(t, f);
  }
  for (std::size_t j = 0; j < n; ++j) {
    Vector y = panel.col(j);
    Vector coef = ols(D, y);
    for (std::size_t f = 0; f < k; ++f) out.loadings(j, f) = coef[1 + f];
    Vector fit = matvec(D, coef);
    double ssr = 0.0, sst = 0.0, my = mean(y);
    for (std::size_t t = 0; t < T; ++t) {
      ssr += (y[t] - fit[t]) * (y[t] - fit[t]);
      sst += (y[t] - my) * (y[t] - my);
    }
    out.r2[j] = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 0.0;
  }
  return out;
}

// Ranks assets by factor R^2 (ties toward the lower index), then fits the
// final weights by MSE on simple returns of the selected set.
inline Portfolio factor_track(const Matrix& log_prices, const TrackingProblem& p,
                              std::size_t k = 5) {
  FactorDecomposition dec = factor_decompose(log_prices, k);
  const std::size_t n = p.n();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dec.r2[a] > dec.r2[b]; });
  order.resize(std::min(p.K, n));
  std::sort(order.begin(), order.end());
  SupportSolve s = solve_mse_on(p, order);
  return finalize_portfolio(s.weights, s.objective, "FBM");
}

}  // namespace trackkit
