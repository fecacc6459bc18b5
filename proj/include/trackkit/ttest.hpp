#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/matrix.hpp"

namespace trackkit {

namespace detail {

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
inline double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h;
}

inline double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// P(T_df <= t) for Student's t.
inline double t_cdf(double t, double df) {
  if (df <= 0.0) throw ConfigError("t_cdf: df must be positive");
  if (t == 0.0) return 0.5;
  double x = df / (df + t * t);
  double tail = 0.5 * detail::reg_inc_beta(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

struct TTestMatrix {
  std::vector<std::string> models;
  Matrix pvalues;
  std::vector<std::vector<char>> degenerate;  // all-zero difference pairs
  std::size_t df = 0;
};

// One-sided paired t-tests on per-window tracking errors. Entry (i, j) is
// the p-value against the alternative that model i tracks better (smaller
// TE) than model j.
inline TTestMatrix paired_t_matrix(const std::vector<Vector>& te_by_model,
                                   const std::vector<std::string>& names) {
  const std::size_t M = te_by_model.size();
  if (names.size() != M) throw ConfigError("paired_t_matrix: name count mismatch");
  if (M == 0) return {};
  const std::size_t N = te_by_model[0].size();
  if (N < 2) throw DataError("paired_t_matrix: need at least two windows");
  for (const Vector& v : te_by_model)
    if (v.size() != N) throw DataError("paired_t_matrix: ragged window counts");

  TTestMatrix out;
  out.models = names;
  out.pvalues = Matrix(M, M);
  out.degenerate.assign(M, std::vector<char>(M, 0));
  out.df = N - 1;
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < M; ++j) {
      Vector d(N);
      for (std::size_t k = 0; k < N; ++k) d[k] = te_by_model[i][k] - te_by_model[j][k];
      double md = mean(d);
      double sd = sample_sd(d);
      if (sd <= 0.0) {
        if (md == 0.0) {
          out.pvalues(i, j) = 0.5;
          out.degenerate[i][j] = 1;
        } else {
          out.pvalues(i, j) = md < 0.0 ? 0.0 : 1.0;
        }
        continue;
      }
      double t = md / (sd / std::sqrt(static_cast<double>(N)));
      out.pvalues(i, j) = t_cdf(t, static_cast<double>(N - 1));
    }
  }
  return out;
}

}  // namespace trackkit
