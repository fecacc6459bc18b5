#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/lp.hpp"
#include "trackkit/matrix.hpp"
#include "trackkit/nnls.hpp"
#include "trackkit/portfolio.hpp"

namespace trackkit {

struct PenaltyPathPoint {
  double lambda1 = 0.0;
  std::size_t support_size = 0;
};

struct SparseSelection {
  std::vector<std::size_t> support;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<PenaltyPathPoint> path;  // every lambda evaluated, in order
};

namespace detail {

// Projected gradient for (1/T)||I - Rw||^2 + l1 sum w + l2 sum w^2, w >= 0.
// The l1 term is linear on the nonnegative orthant so it folds into the
// gradient.
inline Vector nn_penalized_fit(const Matrix& R, const Vector& I, double l1, double l2) {
  const std::size_t T = R.rows, n = R.cols;
  Matrix G = gram(R);  // R'R
  Vector c = matvec_t(R, I);
  // Lipschitz bound for the smooth gradient: (2/T) * ||G||_inf + 2 l2
  double row_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::abs(G(i, j));
    row_max = std::max(row_max, s);
  }
  double L = 2.0 * row_max / static_cast<double>(T) + 2.0 * l2 + 1e-12;
  double step = 1.0 / L;

  Vector w(n, 0.0);
  Vector grad(n);
  for (int it = 0; it < 20000; ++it) {
    Vector Gw = matvec(G, w);
    double delta = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      grad[j] = 2.0 * (Gw[j] - c[j]) / static_cast<double>(T) + l1 + 2.0 * l2 * w[j];
      double next = std::max(0.0, w[j] - step * grad[j]);
      delta = std::max(delta, std::abs(next - w[j]));
      w[j] = next;
    }
    if (delta < 1e-12) break;
  }
  return w;
}

inline std::vector<std::size_t> active_set(const Vector& w) {
  std::vector<std::size_t> s;
  for (std::size_t j = 0; j < w.size(); ++j)
    if (w[j] > tol::support_zero) s.push_back(j);
  return s;
}

}  // namespace detail

// Bisects the l1 penalty until the active set is as large as possible while
// not exceeding K assets.
inline SparseSelection nnl_select(const Matrix& R, const Vector& I, std::size_t K,
                                  double lambda2 = 0.0, double lambda_max = 100.0) {
  if (K >= R.cols) throw ConfigError("nnl_select: requires K < n");
  SparseSelection out;
  out.lambda2 = lambda2;

  auto probe = [&](double l1) {
    Vector w = detail::nn_penalized_fit(R, I, l1, lambda2);
    std::vector<std::size_t> s = detail::active_set(w);
    out.path.push_back({l1, s.size()});
    return s;
  };

  std::vector<std::size_t> at_zero = probe(0.0);
  if (at_zero.size() <= K) {
    out.support = std::move(at_zero);
    out.lambda1 = 0.0;
    return out;
  }
  double hi = lambda_max;
  std::vector<std::size_t> at_hi = probe(hi);
  while (at_hi.size() > K) {
    hi *= 2.0;
    if (hi > 1e12) throw SolverError("nnl_select: penalty search failed to bracket");
    at_hi = probe(hi);
  }
  double lo = 0.0;
  std::vector<std::size_t> best = std::move(at_hi);
  double best_l1 = hi;
  for (int it = 0; it < 60 && hi - lo > 1e-10 * std::max(1.0, hi); ++it) {
    double mid = 0.5 * (lo + hi);
    std::vector<std::size_t> s = probe(mid);
    if (s.size() <= K) {
      hi = mid;
      // smaller feasible lambda keeps more assets
      if (s.size() >= best.size()) {
        best = std::move(s);
        best_l1 = mid;
      }
    } else {
      lo = mid;
    }
  }
  out.support = std::move(best);
  out.lambda1 = best_l1;
  if (out.support.empty()) throw SolverError("nnl_select: empty support after bisection");
  return out;
}

// Stage-2 reweighting shared by the sparse models: NNLS on the chosen
// columns, normalized onto the simplex.
inline Portfolio refit_nnls_weights(const Matrix& R, const Vector& I,
                                    const std::vector<std::size_t>& support,
                                    const std::string& model_tag) {
  if (support.empty()) throw SolverError(model_tag + ": empty support");
  Matrix Rs(R.rows, support.size());
  for (std::size_t t = 0; t < R.rows; ++t)
    for (std::size_t k = 0; k < support.size(); ++k) Rs(t, k) = R(t, support[k]);
  Vector beta = nnls(Rs, I);
  double sum = 0.0;
  for (double v : beta) sum += v;
  Vector w(R.cols, 0.0);
  std::string note;
  if (sum <= 0.0) {
    for (std::size_t i : support) w[i] = 1.0 / static_cast<double>(support.size());
    note = "uniform-fallback";
  } else {
    for (std::size_t k = 0; k < support.size(); ++k) w[support[k]] = beta[k] / sum;
  }
  // report in-sample MSE of the normalized weights
  Vector rw = matvec(R, w);
  double mse = 0.0;
  for (std::size_t t = 0; t < R.rows; ++t) mse += (I[t] - rw[t]) * (I[t] - rw[t]);
  mse /= static_cast<double>(R.rows);
  return finalize_portfolio(std::move(w), mse, model_tag, std::move(note));
}

// Grid over the l2 penalty, bisection over the l1 penalty, scored by
// in-sample MSE after the NNLS refit.
inline SparseSelection nnen_select(const Matrix& R, const Vector& I, std::size_t K,
                                   const Vector& lambda2_grid = {0.0, 0.01, 0.1, 1.0}) {
  if (lambda2_grid.empty()) throw ConfigError("nnen_select: empty lambda2 grid");
  SparseSelection best;
  double best_mse = kInf;
  for (double l2 : lambda2_grid) {
    SparseSelection cand = nnl_select(R, I, K, l2);
    Portfolio p = refit_nnls_weights(R, I, cand.support, "NNEN");
    if (p.objective < best_mse - 1e-15) {
      best_mse = p.objective;
      best = std::move(cand);
    }
  }
  return best;
}

inline Portfolio nnl_track(const Matrix& R, const Vector& I, std::size_t K) {
  SparseSelection sel = nnl_select(R, I, K);
  return refit_nnls_weights(R, I, sel.support, "NNL");
}

inline Portfolio nnen_track(const Matrix& R, const Vector& I, std::size_t K,
                            const Vector& lambda2_grid = {0.0, 0.01, 0.1, 1.0}) {
  SparseSelection sel = nnen_select(R, I, K, lambda2_grid);
  return refit_nnls_weights(R, I, sel.support, "NNEN");
}

}  // namespace trackkit
