#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/lp.hpp"
#include "trackkit/matrix.hpp"
#include "trackkit/nnls.hpp"
#include "trackkit/portfolio.hpp"
#include "trackkit/rng.hpp"
#include "trackkit/selection.hpp"

namespace trackkit {

struct AdfResult {
  double statistic = 0.0;
  std::size_t lags_used = 0;
  bool reject_unit_root = false;  // at the 5% level
  double pvalue = 1.0;
};

namespace detail {

// MacKinnon (2010) response-surface critical values, constant-only case:
// cv = b0 + b1/T + b2/T^2 + b3/T^3 at the 1/5/10% levels.
inline double adf_critical(double level, double T) {
  static const double surf[3][4] = {
      {-3.43035, -6.5393, -16.786, -79.433},  // 1%
      {-2.86154, -2.8903, -4.234, -40.04},    // 5%
      {-2.56677, -1.5384, -2.809, 0.0},       // 10%
  };
  int row = level == 0.01 ? 0 : (level == 0.05 ? 1 : 2);
  const double* b = surf[row];
  return b[0] + b[1] / T + b[2] / (T * T) + b[3] / (T * T * T);
}

// P-value by interpolating log(p) linearly in the statistic across the
// tabulated 1/5/10% points; clamped outside the table.
inline double adf_pvalue(double stat, double T) {
  const double levels[3] = {0.01, 0.05, 0.10};
  double cv[3];
  for (int i = 0; i < 3; ++i) cv[i] = adf_critical(levels[i], T);
  if (stat <= cv[0]) return 0.01 * std::exp((stat - cv[0]) * 2.0 / (cv[2] - cv[0]));
  if (stat >= cv[2]) {
    double p = 0.10 * std::exp((stat - cv[2]) * (std::log(0.10) - std::log(0.05)) /
                               (cv[1] - cv[2]));
    return std::min(p, 0.999);
  }
  int seg = stat < cv[1] ? 0 : 1;
  double f = (stat - cv[seg]) / (cv[seg + 1] - cv[seg]);
  return std::exp(std::log(levels[seg]) + f * (std::log(levels[seg + 1]) - std::log(levels[seg])));
}

}  // namespace detail

// Constant-only ADF regression: dy_t on (1, y_{t-1}, dy_{t-1..p}), with the
// lag order picked by AIC over 0..max_lag on a common sample.
inline AdfResult adf_test(const Vector& y, std::size_t max_lag = 1) {
  const std::size_t T = y.size();
  if (T < max_lag + 3) throw DataError("adf_test: series too short");
  {
    double lo = *std::min_element(y.begin(), y.end());
    double hi = *std::max_element(y.begin(), y.end());
    if (hi - lo < 1e-14) throw DataError("adf_test: series has no variation");
  }
  Vector dy(T - 1);
  for (std::size_t t = 0; t + 1 < T; ++t) dy[t] = y[t + 1] - y[t];

  // common effective sample so AIC values are comparable across lag orders
  const std::size_t start = max_lag;            // index into dy
  const std::size_t n_obs = dy.size() - start;  // rows of every candidate
  if (n_obs < max_lag + 4) throw DataError("adf_test: series too short for lag order");

  double best_aic = kInf;
  std::size_t best_lag = 0;
  double best_stat = 0.0;
  for (std::size_t p = 0; p <= max_lag; ++p) {
    const std::size_t k = 2 + p;
    Matrix X(n_obs, k);
    Vector b(n_obs);
    for (std::size_t i = 0; i < n_obs; ++i) {
      std::size_t t = start + i;  // dy index of the response
      b[i] = dy[t];
      X(i, 0) = 1.0;
      X(i, 1) = y[t];  // y_{t-1} relative to the response dy[t] = y[t+1]-y[t]
      for (std::size_t l = 1; l <= p; ++l) X(i, 1 + l) = dy[t - l];
    }
    Vector coef;
    try {
      coef = ols(X, b);
    } catch (const SolverError&) {
      throw DataError("adf_test: degenerate regression");
    }
    Vector fit = matvec(X, coef);
    double ssr = 0.0;
    for (std::size_t i = 0; i < n_obs; ++i) ssr += (b[i] - fit[i]) * (b[i] - fit[i]);
    double aic = static_cast<double>(n_obs) * std::log(std::max(ssr, 1e-300) /
                                                       static_cast<double>(n_obs)) +
                 2.0 * static_cast<double>(k);
    if (aic < best_aic) {
      best_aic = aic;
      best_lag = p;
      // t-ratio of the y_{t-1} coefficient
      double s2 = ssr / static_cast<double>(n_obs - k);
      Matrix G = gram(X);
      // (X'X)^{-1}[1][1] via solving G z = e1
      Vector e(k, 0.0);
      e[1] = 1.0;
      Vector z = solve_linear(G, e);
      double se = std::sqrt(std::max(s2 * z[1], 1e-300));
      best_stat = coef[1] / se;
    }
  }

  AdfResult out;
  out.statistic = best_stat;
  out.lags_used = best_lag;
  double Tn = static_cast<double>(n_obs);
  out.reject_unit_root = best_stat < detail::adf_critical(0.05, Tn);
  out.pvalue = detail::adf_pvalue(best_stat, Tn);
  return out;
}

struct CointFit {
  double beta0 = 0.0;
  Vector beta;  // one per support asset
  Vector residuals;
  double ssr = 0.0;
  std::vector<std::size_t> support;
};

namespace detail {

// OLS of the log-index on an intercept plus the chosen log-price columns.
inline CointFit coint_fit_ols(const Matrix& log_prices, const Vector& log_index,
                              const std::vector<std::size_t>& support) {
  const std::size_t T = log_prices.rows, k = support.size();
  Matrix X(T, k + 1);
  for (std::size_t t = 0; t < T; ++t) {
    X(t, 0) = 1.0;
    for (std::size_t j = 0; j < k; ++j) X(t, 1 + j) = log_prices(t, support[j]);
  }
  Vector coef = ols(X, log_index);
  CointFit fit;
  fit.beta0 = coef[0];
  fit.beta.assign(coef.begin() + 1, coef.end());
  fit.support = support;
  fit.residuals.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    double pred = fit.beta0;
    for (std::size_t j = 0; j < k; ++j) pred += fit.beta[j] * log_prices(t, support[j]);
    fit.residuals[t] = log_index[t] - pred;
    fit.ssr += fit.residuals[t] * fit.residuals[t];
  }
  return fit;
}

// Same regression with beta >= 0; the free intercept is concentrated out by
// centering.
inline CointFit coint_fit_nnls(const Matrix& log_prices, const Vector& log_index,
                               const std::vector<std::size_t>& support) {
  const std::size_t T = log_prices.rows, k = support.size();
  Vector col_mean(k, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < k; ++j) col_mean[j] += log_prices(t, support[j]);
  for (double& m : col_mean) m /= static_cast<double>(T);
  double y_mean = mean(log_index);
  Matrix Xc(T, k);
  Vector yc(T);
  for (std::size_t t = 0; t < T; ++t) {
    yc[t] = log_index[t] - y_mean;
    for (std::size_t j = 0; j < k; ++j) Xc(t, j) = log_prices(t, support[j]) - col_mean[j];
  }
  CointFit fit;
  fit.beta = nnls(Xc, yc);
  fit.support = support;
  fit.beta0 = y_mean;
  for (std::size_t j = 0; j < k; ++j) fit.beta0 -= fit.beta[j] * col_mean[j];
  fit.residuals.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    double pred = fit.beta0;
    for (std::size_t j = 0; j < k; ++j) pred += fit.beta[j] * log_prices(t, support[j]);
    fit.residuals[t] = log_index[t] - pred;
    fit.ssr += fit.residuals[t] * fit.residuals[t];
  }
  return fit;
}

// Coefficients -> portfolio weights, negatives clipped before normalizing.
inline Portfolio coint_weights(const CointFit& fit, std::size_t n, std::string tag,
                               std::string note) {
  Vector w(n, 0.0);
  double sum = 0.0;
  for (std::size_t j = 0; j < fit.support.size(); ++j) {
    double b = std::max(0.0, fit.beta[j]);
    w[fit.support[j]] = b;
    sum += b;
  }
  if (sum <= 0.0) {
    for (std::size_t i : fit.support) w[i] = 1.0 / static_cast<double>(fit.support.size());
    note = note.empty() ? "uniform-fallback" : note + ";uniform-fallback";
  } else {
    for (double& v : w) v /= sum;
  }
  return finalize_portfolio(std::move(w), fit.ssr, std::move(tag), std::move(note));
}

}  // namespace detail

// Random-subset search: keep subsets whose residuals pass the ADF test, then
// take the smallest SSR among them.
inline Portfolio coint_simulate(const Matrix& log_prices, const Vector& log_index, std::size_t K,
                                std::size_t iters, std::uint64_t seed,
                                const Deadline& deadline = {}) {
  const std::size_t n = log_prices.cols;
  if (K == 0 || K > n) throw ConfigError("coint_simulate: bad K");
  Rng rng(seed);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);

  bool have_pass = false, have_any = false;
  CointFit best_pass, best_any;
  for (std::size_t it = 0; it < iters; ++it) {
    if (deadline.expired() && have_any) break;
    // partial Fisher-Yates draw of K distinct assets
    for (std::size_t j = 0; j < K; ++j) {
      std::size_t pick = j + rng.uniform_int(n - j);
      std::swap(pool[j], pool[pick]);
    }
    std::vector<std::size_t> sub(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(K));
    std::sort(sub.begin(), sub.end());
    CointFit fit;
    try {
      fit = detail::coint_fit_ols(log_prices, log_index, sub);
    } catch (const SolverError&) {
      continue;  // collinear draw
    }
    if (!have_any || fit.ssr < best_any.ssr) {
      best_any = fit;
      have_any = true;
    }
    bool reject;
    try {
      reject = adf_test(fit.residuals).reject_unit_root;
    } catch (const DataError&) {
      reject = false;
    }
    if (reject && (!have_pass || fit.ssr < best_pass.ssr)) {
      best_pass = fit;
      have_pass = true;
    }
  }
  if (!have_any) throw SolverError("coint_simulate: every sampled regression was degenerate");
  if (have_pass) return detail::coint_weights(best_pass, n, "Coint-Sim", "");
  return detail::coint_weights(best_any, n, "Coint-Sim", "no-cointegration");
}

// Convex variant: nonnegative least squares on log-prices with the support
// chosen by the selection strategy.
inline Portfolio coint_convex(const Matrix& log_prices, const Vector& log_index, std::size_t K,
                              const SelectionStrategy& strategy, const Deadline& deadline = {}) {
  const std::size_t n = log_prices.cols;
  auto restricted = [&](const std::vector<std::size_t>& sup) -> SupportSolve {
    CointFit fit = detail::coint_fit_nnls(log_prices, log_index, sup);
    Vector w(n, 0.0);
    double sum = 0.0;
    for (double b : fit.beta) sum += b;
    if (sum > 0.0)
      for (std::size_t j = 0; j < sup.size(); ++j) w[sup[j]] = fit.beta[j] / sum;
    else
      for (std::size_t i : sup) w[i] = 1.0 / static_cast<double>(sup.size());
    return {std::move(w), fit.ssr};
  };
  Portfolio p = select_support(n, K, strategy, restricted, "Cvx-CoInt", deadline);
  return p;
}

}  // namespace trackkit
