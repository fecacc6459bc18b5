#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/matrix.hpp"

namespace trackkit {

// One training window's inputs: R is T x n of simple returns, I the index
// return series, K the cardinality bound, [lo, hi] the per-asset holding
// bounds active on selected assets (defaults 0 and 1).
struct TrackingProblem {
  Matrix R;
  Vector I;
  std::size_t K = 0;
  Vector lo, hi;

  std::size_t T() const { return R.rows; }
  std::size_t n() const { return R.cols; }

  static TrackingProblem make(Matrix R, Vector I, std::size_t K) {
    TrackingProblem p;
    p.lo.assign(R.cols, 0.0);
    p.hi.assign(R.cols, 1.0);
    p.R = std::move(R);
    p.I = std::move(I);
    p.K = K;
    return p;
  }

  // Portfolio return series R w over the training rows.
  Vector portfolio_returns(const Vector& w) const { return matvec(R, w); }
};

struct Portfolio {
  Vector weights;                    // length n, nonnegative, sums to 1
  std::vector<std::size_t> support;  // indices with weight above threshold
  double objective = 0.0;            // achieved training objective
  std::string model;
  bool warning = false;
  std::string note;  // "no-cointegration", "uniform-fallback", "timeout", ...
};

// Zeroes sub-threshold weights, renormalizes to the simplex and records the
// support set.
inline Portfolio finalize_portfolio(Vector weights, double objective, std::string model,
                                    std::string note = "") {
  Portfolio p;
  double sum = 0.0;
  for (double& w : weights) {
    if (w < tol::support_zero) w = 0.0;
    sum += w;
  }
  if (sum <= 0.0) throw SolverError("finalize_portfolio: all weights zero for " + model);
  for (double& w : weights) w /= sum;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (weights[i] > tol::support_zero) p.support.push_back(i);
  p.weights = std::move(weights);
  p.objective = objective;
  p.model = std::move(model);
  p.note = std::move(note);
  p.warning = !p.note.empty();
  return p;
}

inline Vector uniform_weights(std::size_t n) {
  return Vector(n, 1.0 / static_cast<double>(n));
}

inline std::vector<std::size_t> full_support(std::size_t n) {
  std::vector<std::size_t> s(n);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

// Uniform over a subset, zeros elsewhere.
inline Vector uniform_on(std::size_t n, const std::vector<std::size_t>& support) {
  Vector w(n, 0.0);
  for (std::size_t i : support) w[i] = 1.0 / static_cast<double>(support.size());
  return w;
}

}  // namespace trackkit
