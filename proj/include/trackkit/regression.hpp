#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/lp.hpp"
#include "trackkit/matrix.hpp"
#include "trackkit/portfolio.hpp"
#include "trackkit/selection.hpp"

namespace trackkit {

// Per-asset lines r_i = alpha_i + beta_i * I fitted by OLS or quantile
// regression.
struct RegressionLine {
  Vector alpha, beta;
  std::string tau = "mean";  // "mean" or the quantile level as text
};

inline RegressionLine fit_lines_ols(const Matrix& R, const Vector& I) {
  const std::size_t n = R.cols, T = R.rows;
  RegressionLine out;
  out.alpha.resize(n);
  out.beta.resize(n);
  double mi = mean(I);
  double sxx = 0.0;
  for (double v : I) sxx += (v - mi) * (v - mi);
  for (std::size_t j = 0; j < n; ++j) {
    double my = 0.0;
    for (std::size_t t = 0; t < T; ++t) my += R(t, j);
    my /= static_cast<double>(T);
    double sxy = 0.0;
    for (std::size_t t = 0; t < T; ++t) sxy += (I[t] - mi) * (R(t, j) - my);
    double beta = sxx > 0.0 ? sxy / sxx : 0.0;
    out.beta[j] = beta;
    out.alpha[j] = my - beta * mi;
    if (!std::isfinite(out.alpha[j]) || !std::isfinite(out.beta[j]))
      throw DataError("fit_lines_ols: non-finite coefficients for asset " + std::to_string(j));
  }
  return out;
}

// Quantile line via the u+/u- split LP: minimize
// tau * sum u+ + (1-tau) * sum u-  with  r_t - a - b I_t = u+_t - u-_t.
inline RegressionLine fit_lines_quantile(const Matrix& R, const Vector& I, double tau = 0.5) {
  if (tau <= 0.0 || tau >= 1.0) throw ConfigError("fit_lines_quantile: tau must be in (0,1)");
  const std::size_t n = R.cols, T = R.rows;
  RegressionLine out;
  out.alpha.resize(n);
  out.beta.resize(n);
  out.tau = std::to_string(tau);
  for (std::size_t j = 0; j < n; ++j) {
    // vars: a+ a- b+ b- (free coefficients split), u+ (T), u- (T)
    LinearProgram lp = LinearProgram::with_vars(4 + 2 * T);
    for (std::size_t t = 0; t < T; ++t) {
      lp.objective[4 + t] = tau;
      lp.objective[4 + T + t] = 1.0 - tau;
    }
    lp.eq_lhs = Matrix(T, lp.num_vars());
    lp.eq_rhs.assign(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      lp.eq_lhs(t, 0) = 1.0;
      lp.eq_lhs(t, 1) = -1.0;
      lp.eq_lhs(t, 2) = I[t];
      lp.eq_lhs(t, 3) = -I[t];
      lp.eq_lhs(t, 4 + t) = 1.0;
      lp.eq_lhs(t, 4 + T + t) = -1.0;
      lp.eq_rhs[t] = R(t, j);
    }
    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal)
      throw SolverError("fit_lines_quantile: LP failed for asset " + std::to_string(j));
    out.alpha[j] = sol.x[0] - sol.x[1];
    out.beta[j] = sol.x[2] - sol.x[3];
  }
  return out;
}

namespace detail {

// Stage 1: minimize d = |sum w_i alpha_i| over the support.
inline SupportSolve regression_stage1(const RegressionLine& lines,
                                      const std::vector<std::size_t>& support) {
  const std::size_t k = support.size();
  // vars: w (k), d
  LinearProgram lp = LinearProgram::with_vars(k + 1);
  for (std::size_t j = 0; j < k; ++j) lp.hi[j] = 1.0;
  lp.objective[k] = 1.0;
  lp.eq_lhs = Matrix(1, k + 1);
  for (std::size_t j = 0; j < k; ++j) lp.eq_lhs(0, j) = 1.0;
  lp.eq_rhs = {1.0};
  lp.ub_lhs = Matrix(2, k + 1);
  lp.ub_rhs.assign(2, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    lp.ub_lhs(0, j) = lines.alpha[support[j]];
    lp.ub_lhs(1, j) = -lines.alpha[support[j]];
  }
  lp.ub_lhs(0, k) = -1.0;
  lp.ub_lhs(1, k) = -1.0;
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) throw SolverError("regression stage 1: LP failed");
  Vector w(lines.alpha.size(), 0.0);
  for (std::size_t j = 0; j < k; ++j) w[support[j]] = sol.x[j];
  return {std::move(w), sol.objective};
}

// Stage 2: fix the stage-1 intercept and minimize e = |sum w_i beta_i - 1|.
inline SupportSolve regression_stage2(const RegressionLine& lines,
                                      const std::vector<std::size_t>& support,
                                      double alpha_opt) {
  const std::size_t k = support.size();
  // vars: w (k), e
  LinearProgram lp = LinearProgram::with_vars(k + 1);
  for (std::size_t j = 0; j < k; ++j) lp.hi[j] = 1.0;
  lp.objective[k] = 1.0;
  lp.eq_lhs = Matrix(2, k + 1);
  lp.eq_rhs = {1.0, alpha_opt};
  for (std::size_t j = 0; j < k; ++j) {
    lp.eq_lhs(0, j) = 1.0;
    lp.eq_lhs(1, j) = lines.alpha[support[j]];
  }
  lp.ub_lhs = Matrix(2, k + 1);
  lp.ub_rhs = {1.0, -1.0};
  for (std::size_t j = 0; j < k; ++j) {
    lp.ub_lhs(0, j) = lines.beta[support[j]];
    lp.ub_lhs(1, j) = -lines.beta[support[j]];
  }
  lp.ub_lhs(0, k) = -1.0;
  lp.ub_lhs(1, k) = -1.0;
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) throw SolverError("regression stage 2: LP failed");
  Vector w(lines.alpha.size(), 0.0);
  for (std::size_t j = 0; j < k; ++j) w[support[j]] = sol.x[j];
  return {std::move(w), sol.objective};
}

inline Portfolio regression_two_stage(const RegressionLine& lines, std::size_t K,
                                      const SelectionStrategy& strategy, const std::string& tag,
                                      const Deadline& deadline) {
  const std::size_t n = lines.alpha.size();
  Portfolio stage1 = select_support(
      n, K, strategy,
      [&](const std::vector<std::size_t>& sup) { return regression_stage1(lines, sup); }, tag,
      deadline);
  // The support is frozen here; stage 2 reweights within it.
  double alpha_opt = 0.0;
  for (std::size_t i = 0; i < n; ++i) alpha_opt += stage1.weights[i] * lines.alpha[i];
  SupportSolve s2 = regression_stage2(lines, stage1.support, alpha_opt);
  Portfolio out = finalize_portfolio(s2.weights, s2.objective, tag, stage1.note);
  return out;
}

}  // namespace detail

inline Portfolio lsr_two_stage(const RegressionLine& lines, std::size_t K,
                               const SelectionStrategy& strategy, const Deadline& deadline = {}) {
  return detail::regression_two_stage(lines, K, strategy, "LSR", deadline);
}

inline Portfolio qr_two_stage(const RegressionLine& lines, std::size_t K,
                              const SelectionStrategy& strategy, const Deadline& deadline = {}) {
  return detail::regression_two_stage(lines, K, strategy, "QR", deadline);
}

}  // namespace trackkit
