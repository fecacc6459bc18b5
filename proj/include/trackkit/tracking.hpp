#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/lp.hpp"
#include "trackkit/matrix.hpp"
#include "trackkit/nnls.hpp"
#include "trackkit/portfolio.hpp"
#include "trackkit/qp.hpp"
#include "trackkit/selection.hpp"

namespace trackkit {

// ---------------------------------------------------------------------------
// Training-objective evaluators. These are the reporting formulas; each
// solve_* routine must return an objective these reproduce.
// ---------------------------------------------------------------------------

inline double mse_objective(const TrackingProblem& p, const Vector& w) {
  Vector rw = p.portfolio_returns(w);
  double s = 0.0;
  for (std::size_t t = 0; t < p.T(); ++t) s += (p.I[t] - rw[t]) * (p.I[t] - rw[t]);
  return s / static_cast<double>(p.T());
}

inline double ses_objective(const TrackingProblem& p, const Vector& w) {
  Vector rw = p.portfolio_returns(w);
  double s = 0.0;
  for (std::size_t t = 0; t < p.T(); ++t) s += p.I[t] - rw[t];
  return s * s / static_cast<double>(p.T());
}

inline double mad_objective(const TrackingProblem& p, const Vector& w) {
  Vector rw = p.portfolio_returns(w);
  double s = 0.0;
  for (std::size_t t = 0; t < p.T(); ++t) s += std::abs(rw[t] - p.I[t]);
  return s / static_cast<double>(p.T());
}

inline double madd_objective(const TrackingProblem& p, const Vector& w) {
  Vector rw = p.portfolio_returns(w);
  double s = 0.0;
  for (std::size_t t = 0; t < p.T(); ++t) s += std::max(0.0, p.I[t] - rw[t]);
  return s / static_cast<double>(p.T());
}

inline double minmax_objective(const TrackingProblem& p, const Vector& w) {
  Vector rw = p.portfolio_returns(w);
  double m = 0.0;
  for (std::size_t t = 0; t < p.T(); ++t) m = std::max(m, std::abs(rw[t] - p.I[t]));
  return m;
}

inline double dminmax_objective(const TrackingProblem& p, const Vector& w) {
  Vector rw = p.portfolio_returns(w);
  double m = 0.0;
  for (std::size_t t = 0; t < p.T(); ++t) m = std::max(m, p.I[t] - rw[t]);
  return m;
}

// Sample covariance (T-1 denominator) of the training returns.
inline Matrix sample_covariance(const Matrix& R) {
  const std::size_t T = R.rows, n = R.cols;
  Vector mu(n, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < n; ++j) mu[j] += R(t, j);
  for (double& m : mu) m /= static_cast<double>(T);
  Matrix C(n, n);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      double dj = R(t, j) - mu[j];
      for (std::size_t k = j; k < n; ++k) C(j, k) += dj * (R(t, k) - mu[k]);
    }
  }
  double denom = static_cast<double>(T > 1 ? T - 1 : 1);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j; k < n; ++k) {
      C(j, k) /= denom;
      C(k, j) = C(j, k);
    }
  return C;
}

inline double tev_objective(const Matrix& Sigma, const Vector& w, const Vector& b) {
  const std::size_t n = w.size();
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = w[i] - b[i];
  return dot(x, matvec(Sigma, x));
}

struct TmcvarParams {
  Vector alphas{0.9, 0.75, 0.5, 0.1, 0.01};  // shared by both tails
  Vector lambdas;                            // per tail; empty => uniform 1/m
  double delta = 0.5;

  Vector tail_lambdas() const {
    if (!lambdas.empty()) return lambdas;
    return Vector(alphas.size(), 1.0 / static_cast<double>(alphas.size()));
  }
};

// CVaR_alpha of the empirical sample x (losses; higher is worse), via the
// Rockafellar-Uryasev form minimized exactly over the threshold.
inline double empirical_cvar(Vector x, double alpha) {
  const double T = static_cast<double>(x.size());
  std::sort(x.begin(), x.end());
  double best = kInf;
  for (double beta : x) {
    double s = 0.0;
    for (double v : x) s += std::max(0.0, v - beta);
    best = std::min(best, beta + s / ((1.0 - alpha) * T));
  }
  return best;
}

inline double tmcvar_objective(const TrackingProblem& p, const Vector& w,
                               const TmcvarParams& params) {
  Vector rw = p.portfolio_returns(w);
  Vector x(p.T()), neg_x(p.T());  // x_t = I_t - R_wt
  for (std::size_t t = 0; t < p.T(); ++t) {
    x[t] = p.I[t] - rw[t];
    neg_x[t] = -x[t];
  }
  Vector lam = params.tail_lambdas();
  double up = 0.0, down = 0.0;
  for (std::size_t k = 0; k < params.alphas.size(); ++k) {
    up += lam[k] * empirical_cvar(x, params.alphas[k]);
    down += lam[k] * empirical_cvar(neg_x, params.alphas[k]);
  }
  return params.delta * up + (1.0 - params.delta) * down;
}

// ---------------------------------------------------------------------------
// Restricted solves (continuous problem on a fixed support)
// ---------------------------------------------------------------------------

namespace detail {

inline Matrix submatrix_cols(const Matrix& R, const std::vector<std::size_t>& cols) {
  Matrix S(R.rows, cols.size());
  for (std::size_t i = 0; i < R.rows; ++i)
    for (std::size_t k = 0; k < cols.size(); ++k) S(i, k) = R(i, cols[k]);
  return S;
}

inline Vector embed(const Vector& ws, const std::vector<std::size_t>& support, std::size_t n) {
  Vector w(n, 0.0);
  for (std::size_t k = 0; k < support.size(); ++k) w[support[k]] = ws[k];
  return w;
}

inline Vector subvec(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector s(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) s[k] = v[idx[k]];
  return s;
}

// Shared LP scaffolding: variables start with the |S| support weights under
// the holding bounds plus the budget row.
inline LinearProgram tracking_lp_base(const TrackingProblem& p,
                                      const std::vector<std::size_t>& support,
                                      std::size_t extra_vars) {
  const std::size_t k = support.size();
  LinearProgram lp = LinearProgram::with_vars(k + extra_vars);
  for (std::size_t j = 0; j < k; ++j) {
    lp.lo[j] = p.lo[support[j]];
    lp.hi[j] = p.hi[support[j]];
  }
  lp.eq_lhs = Matrix(1, k + extra_vars);
  for (std::size_t j = 0; j < k; ++j) lp.eq_lhs(0, j) = 1.0;
  lp.eq_rhs = {1.0};
  return lp;
}

inline SupportSolve check_lp(const LpSolution& sol, const std::string& model,
                             const std::vector<std::size_t>& support, std::size_t n,
                             double objective) {
  if (sol.status != LpStatus::Optimal)
    throw SolverError(model + ": LP did not reach optimality (status " +
                      std::to_string(static_cast<int>(sol.status)) + ")");
  Vector ws(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(support.size()));
  return {embed(ws, support, n), objective};
}

}  // namespace detail

// MSE restricted to a support: quadratic program on the simplex-box set.
inline SupportSolve solve_mse_on(const TrackingProblem& p,
                                 const std::vector<std::size_t>& support) {
  Matrix Rs = detail::submatrix_cols(p.R, support);
  const double T = static_cast<double>(p.T());
  Matrix Q = gram(Rs);
  for (double& v : Q.data) v *= 2.0 / T;
  Vector q = matvec_t(Rs, p.I);
  for (double& v : q) v *= -2.0 / T;
  QuadraticProgram qp;
  qp.Q = std::move(Q);
  qp.q = std::move(q);
  qp.lo = detail::subvec(p.lo, support);
  qp.hi = detail::subvec(p.hi, support);
  QpResult r = solve_qp(qp, 1e-10);
  Vector w = detail::embed(r.w, support, p.n());
  return {w, mse_objective(p, w)};
}

inline SupportSolve solve_ses_on(const TrackingProblem& p,
                                 const std::vector<std::size_t>& support) {
  const double T = static_cast<double>(p.T());
  const std::size_t k = support.size();
  // SES = (1/T)(a - b.w)^2 with a = sum I, b_j = column sums: rank-one QP.
  double a = 0.0;
  for (double v : p.I) a += v;
  Vector b(k, 0.0);
  for (std::size_t t = 0; t < p.T(); ++t)
    for (std::size_t j = 0; j < k; ++j) b[j] += p.R(t, support[j]);
  QuadraticProgram qp;
  qp.Q = Matrix(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) qp.Q(i, j) = 2.0 * b[i] * b[j] / T;
  qp.q.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) qp.q[j] = -2.0 * a * b[j] / T;
  qp.lo = detail::subvec(p.lo, support);
  qp.hi = detail::subvec(p.hi, support);
  QpResult r = solve_qp(qp, 1e-10);
  Vector w = detail::embed(r.w, support, p.n());
  return {w, ses_objective(p, w)};
}

inline SupportSolve solve_mad_on(const TrackingProblem& p,
                                 const std::vector<std::size_t>& support) {
  const std::size_t k = support.size(), T = p.T();
  // vars: w (k), y+ (T), y- (T)
  LinearProgram lp = detail::tracking_lp_base(p, support, 2 * T);
  for (std::size_t t = 0; t < T; ++t) {
    lp.objective[k + t] = 1.0 / static_cast<double>(T);
    lp.objective[k + T + t] = 1.0 / static_cast<double>(T);
  }
  Matrix eq(1 + T, lp.num_vars());
  for (std::size_t j = 0; j < lp.num_vars(); ++j) eq(0, j) = lp.eq_lhs(0, j);
  Vector eq_rhs(1 + T);
  eq_rhs[0] = 1.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < k; ++j) eq(1 + t, j) = p.R(t, support[j]);
    eq(1 + t, k + t) = -1.0;      // y+
    eq(1 + t, k + T + t) = 1.0;   // y-
    eq_rhs[1 + t] = p.I[t];
  }
  lp.eq_lhs = std::move(eq);
  lp.eq_rhs = std::move(eq_rhs);
  LpSolution sol = solve_lp(lp);
  SupportSolve s = detail::check_lp(sol, "MAD", support, p.n(), 0.0);
  s.objective = mad_objective(p, s.weights);
  return s;
}

inline SupportSolve solve_madd_on(const TrackingProblem& p,
                                  const std::vector<std::size_t>& support) {
  const std::size_t k = support.size(), T = p.T();
  // vars: w (k), y- (T);  constraint R w + y- >= I
  LinearProgram lp = detail::tracking_lp_base(p, support, T);
  for (std::size_t t = 0; t < T; ++t) lp.objective[k + t] = 1.0 / static_cast<double>(T);
  lp.ub_lhs = Matrix(T, lp.num_vars());
  lp.ub_rhs.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < k; ++j) lp.ub_lhs(t, j) = -p.R(t, support[j]);
    lp.ub_lhs(t, k + t) = -1.0;
    lp.ub_rhs[t] = -p.I[t];
  }
  LpSolution sol = solve_lp(lp);
  SupportSolve s = detail::check_lp(sol, "MADD", support, p.n(), 0.0);
  s.objective = madd_objective(p, s.weights);
  return s;
}

inline SupportSolve solve_minmax_on(const TrackingProblem& p,
                                    const std::vector<std::size_t>& support,
                                    bool downside_only) {
  const std::size_t k = support.size(), T = p.T();
  // vars: w (k), xi (1)
  LinearProgram lp = detail::tracking_lp_base(p, support, 1);
  lp.objective[k] = 1.0;
  const std::size_t n_rows = downside_only ? T : 2 * T;
  lp.ub_lhs = Matrix(n_rows, lp.num_vars());
  lp.ub_rhs.assign(n_rows, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    // R w + xi >= I  (downside bound)
    for (std::size_t j = 0; j < k; ++j) lp.ub_lhs(t, j) = -p.R(t, support[j]);
    lp.ub_lhs(t, k) = -1.0;
    lp.ub_rhs[t] = -p.I[t];
    if (!downside_only) {
      // R w - xi <= I
      for (std::size_t j = 0; j < k; ++j) lp.ub_lhs(T + t, j) = p.R(t, support[j]);
      lp.ub_lhs(T + t, k) = -1.0;
      lp.ub_rhs[T + t] = p.I[t];
    }
  }
  LpSolution sol = solve_lp(lp);
  SupportSolve s = detail::check_lp(sol, downside_only ? "DMinMax" : "MinMax", support, p.n(), 0.0);
  s.objective = downside_only ? dminmax_objective(p, s.weights) : minmax_objective(p, s.weights);
  return s;
}

inline SupportSolve solve_tev_on(const TrackingProblem& p, const Matrix& Sigma, const Vector& b,
                                 const std::vector<std::size_t>& support) {
  const std::size_t k = support.size();
  // (w-b)' Sigma (w-b) over w supported on S: Q = 2 Sigma[S,S],
  // q = -2 (Sigma b)[S]; off-support benchmark mass enters as a constant.
  Vector Sb = matvec(Sigma, b);
  QuadraticProgram qp;
  qp.Q = Matrix(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) qp.Q(i, j) = 2.0 * Sigma(support[i], support[j]);
  qp.q.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) qp.q[i] = -2.0 * Sb[support[i]];
  qp.lo = detail::subvec(p.lo, support);
  qp.hi = detail::subvec(p.hi, support);
  QpResult r = solve_qp(qp, 1e-10);
  Vector w = detail::embed(r.w, support, p.n());
  return {w, tev_objective(Sigma, w, b)};
}

inline SupportSolve solve_tmcvar_on(const TrackingProblem& p, const TmcvarParams& params,
                                    const std::vector<std::size_t>& support) {
  const std::size_t k = support.size(), T = p.T(), m = params.alphas.size();
  Vector lam = params.tail_lambdas();
  // vars: w (k), betaU (m), betaD (m), uU (T*m), uD (T*m)
  const std::size_t ofs_bu = k, ofs_bd = k + m, ofs_uu = k + 2 * m, ofs_ud = k + 2 * m + T * m;
  LinearProgram lp = detail::tracking_lp_base(p, support, 2 * m + 2 * T * m);
  for (std::size_t kk = 0; kk < m; ++kk) {
    lp.lo[ofs_bu + kk] = -kInf;  // VaR thresholds are free
    lp.lo[ofs_bd + kk] = -kInf;
    lp.objective[ofs_bu + kk] = params.delta * lam[kk];
    lp.objective[ofs_bd + kk] = (1.0 - params.delta) * lam[kk];
    double cu = params.delta * lam[kk] / ((1.0 - params.alphas[kk]) * static_cast<double>(T));
    double cd =
        (1.0 - params.delta) * lam[kk] / ((1.0 - params.alphas[kk]) * static_cast<double>(T));
    for (std::size_t t = 0; t < T; ++t) {
      lp.objective[ofs_uu + kk * T + t] = cu;
      lp.objective[ofs_ud + kk * T + t] = cd;
    }
  }
  // uU_tk >= (I_t - R_wt) - betaU_k ;  uD_tk >= (R_wt - I_t) - betaD_k
  lp.ub_lhs = Matrix(2 * T * m, lp.num_vars());
  lp.ub_rhs.assign(2 * T * m, 0.0);
  for (std::size_t kk = 0; kk < m; ++kk) {
    for (std::size_t t = 0; t < T; ++t) {
      std::size_t r1 = kk * T + t;
      for (std::size_t j = 0; j < k; ++j) lp.ub_lhs(r1, j) = -p.R(t, support[j]);
      lp.ub_lhs(r1, ofs_bu + kk) = -1.0;
      lp.ub_lhs(r1, ofs_uu + kk * T + t) = -1.0;
      lp.ub_rhs[r1] = -p.I[t];

      std::size_t r2 = T * m + kk * T + t;
      for (std::size_t j = 0; j < k; ++j) lp.ub_lhs(r2, j) = p.R(t, support[j]);
      lp.ub_lhs(r2, ofs_bd + kk) = -1.0;
      lp.ub_lhs(r2, ofs_ud + kk * T + t) = -1.0;
      lp.ub_rhs[r2] = p.I[t];
    }
  }
  LpSolution sol = solve_lp(lp);
  SupportSolve s = detail::check_lp(sol, "TMCVaR", support, p.n(), 0.0);
  s.objective = tmcvar_objective(p, s.weights, params);
  return s;
}

// ---------------------------------------------------------------------------
// Model-level entry points (support selection wrapped around the restricted
// solves)
// ---------------------------------------------------------------------------

inline Portfolio solve_mse(const TrackingProblem& p, const SelectionStrategy& s,
                           const Deadline& deadline = {}) {
  return select_support(
      p.n(), p.K, s, [&](const std::vector<std::size_t>& sup) { return solve_mse_on(p, sup); },
      "MSE", deadline);
}

inline Portfolio solve_ses(const TrackingProblem& p, const SelectionStrategy& s,
                           const Deadline& deadline = {}) {
  return select_support(
      p.n(), p.K, s, [&](const std::vector<std::size_t>& sup) { return solve_ses_on(p, sup); },
      "SES", deadline);
}

inline Portfolio solve_mad(const TrackingProblem& p, const SelectionStrategy& s,
                           const Deadline& deadline = {}) {
  return select_support(
      p.n(), p.K, s, [&](const std::vector<std::size_t>& sup) { return solve_mad_on(p, sup); },
      "MAD", deadline);
}

inline Portfolio solve_madd(const TrackingProblem& p, const SelectionStrategy& s,
                            const Deadline& deadline = {}) {
  return select_support(
      p.n(), p.K, s, [&](const std::vector<std::size_t>& sup) { return solve_madd_on(p, sup); },
      "MADD", deadline);
}

inline Portfolio solve_minmax(const TrackingProblem& p, const SelectionStrategy& s,
                              const Deadline& deadline = {}) {
  return select_support(
      p.n(), p.K, s,
      [&](const std::vector<std::size_t>& sup) { return solve_minmax_on(p, sup, false); },
      "MinMax", deadline);
}

inline Portfolio solve_dminmax(const TrackingProblem& p, const SelectionStrategy& s,
                               const Deadline& deadline = {}) {
  return select_support(
      p.n(), p.K, s,
      [&](const std::vector<std::size_t>& sup) { return solve_minmax_on(p, sup, true); },
      "DMinMax", deadline);
}

// Benchmark weights for TEV: NNLS of the index returns on the asset returns,
// normalized onto the simplex. A degenerate all-zero fit falls back to
// uniform.
inline Portfolio estimate_benchmark_weights(const TrackingProblem& p) {
  Vector beta = nnls(p.R, p.I);
  double sum = 0.0;
  for (double v : beta) sum += v;
  if (sum <= 0.0)
    return finalize_portfolio(uniform_weights(p.n()), 0.0, "benchmark", "uniform-fallback");
  for (double& v : beta) v /= sum;
  return finalize_portfolio(std::move(beta), 0.0, "benchmark");
}

inline Portfolio solve_tev(const TrackingProblem& p, const Vector& benchmark,
                           const SelectionStrategy& s, const Deadline& deadline = {}) {
  Matrix Sigma = sample_covariance(p.R);
  return select_support(
      p.n(), p.K, s,
      [&](const std::vector<std::size_t>& sup) { return solve_tev_on(p, Sigma, benchmark, sup); },
      "TEV", deadline);
}

inline Portfolio solve_tmcvar(const TrackingProblem& p, const TmcvarParams& params,
                              const SelectionStrategy& s, const Deadline& deadline = {}) {
  Vector lam = params.tail_lambdas();
  double su = 0.0;
  for (double v : lam) su += v;
  if (std::abs(su - 1.0) > 1e-9) throw ConfigError("TMCVaR: tail weights must sum to 1");
  for (double a : params.alphas)
    if (a <= 0.0 || a >= 1.0) throw ConfigError("TMCVaR: alphas must lie in (0,1)");
  return select_support(
      p.n(), p.K, s,
      [&](const std::vector<std::size_t>& sup) { return solve_tmcvar_on(p, params, sup); },
      "TMCVaR", deadline);
}

}  // namespace trackkit
