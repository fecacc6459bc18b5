#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/matrix.hpp"

namespace trackkit {

// Sample sd of the active return, per the H-1 formula.
inline double tracking_error(const Vector& rp, const Vector& rb) {
  if (rp.size() != rb.size() || rp.size() < 2)
    throw DataError("tracking_error: need two equal-length series");
  Vector d(rp.size());
  for (std::size_t t = 0; t < rp.size(); ++t) d[t] = rp[t] - rb[t];
  return sample_sd(d);
}

inline double correlation(const Vector& rp, const Vector& rb) { return pearson(rp, rb); }

struct ReturnStats {
  double mean = 0.0, min = 0.0, max = 0.0;
};

inline ReturnStats return_stats(const Vector& rp) {
  if (rp.empty()) throw DataError("return_stats: empty series");
  ReturnStats s;
  s.mean = mean(rp);
  s.min = *std::min_element(rp.begin(), rp.end());
  s.max = *std::max_element(rp.begin(), rp.end());
  return s;
}

inline double volatility(const Vector& rp) { return sample_sd(rp); }

// Mean |drawdown| along the compounded wealth path.
inline double avg_drawdown(const Vector& rp) {
  if (rp.empty()) throw DataError("avg_drawdown: empty series");
  double wealth = 1.0, peak = 1.0, total = 0.0;
  for (double r : rp) {
    wealth *= 1.0 + r;
    peak = std::max(peak, wealth);
    total += (peak - wealth) / peak;
  }
  return total / static_cast<double>(rp.size());
}

// The four ratios are defined only when their excess return is positive.
inline std::optional<double> sharpe(const Vector& rp, double rf) {
  double ex = mean(rp) - rf;
  double sd = sample_sd(rp);
  if (ex <= 0.0 || sd <= 0.0) return std::nullopt;
  return ex / sd;
}

inline std::optional<double> sortino(const Vector& rp, double rf) {
  double ex = mean(rp) - rf;
  if (ex <= 0.0) return std::nullopt;
  Vector neg;
  for (double r : rp)
    if (r < 0.0) neg.push_back(r);
  if (neg.size() < 2) return std::nullopt;
  double sd = sample_sd(neg);
  if (sd <= 0.0) return std::nullopt;
  return ex / sd;
}

inline std::optional<double> treynor(const Vector& rp, const Vector& rb, double rf) {
  double ex = mean(rp) - rf;
  if (ex <= 0.0) return std::nullopt;
  double mb = mean(rb), mp = mean(rp);
  double cov = 0.0, var_b = 0.0;
  for (std::size_t t = 0; t < rp.size(); ++t) {
    cov += (rp[t] - mp) * (rb[t] - mb);
    var_b += (rb[t] - mb) * (rb[t] - mb);
  }
  if (var_b <= 0.0) return std::nullopt;
  double beta = cov / var_b;
  if (beta == 0.0) return std::nullopt;
  return ex / beta;
}

inline std::optional<double> information_ratio(const Vector& rp, const Vector& rb) {
  double active = mean(rp) - mean(rb);
  if (active <= 0.0) return std::nullopt;
  double te = tracking_error(rp, rb);
  if (te <= 0.0) return std::nullopt;
  return active / te;
}

// TR = (1/(N-1)) sum_k ||w_{k+1} - w_k||_1 across rebalances.
inline std::optional<double> turnover(const std::vector<Vector>& weights_by_window) {
  const std::size_t N = weights_by_window.size();
  if (N < 2) return std::nullopt;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < N; ++k) {
    const Vector& a = weights_by_window[k];
    const Vector& b = weights_by_window[k + 1];
    if (a.size() != b.size()) throw DataError("turnover: inconsistent weight lengths");
    for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(b[i] - a[i]);
  }
  return total / static_cast<double>(N - 1);
}

struct MetricReport {
  double te = 0.0;
  double correlation = 0.0;
  double avg_return = 0.0, min_return = 0.0, max_return = 0.0;
  double volatility = 0.0;
  double avg_drawdown = 0.0;
  std::optional<double> sharpe, sortino, treynor, information_ratio;
};

inline MetricReport compute_metrics(const Vector& rp, const Vector& rb, double rf = 0.0) {
  MetricReport m;
  m.te = tracking_error(rp, rb);
  m.correlation = correlation(rp, rb);
  ReturnStats rs = return_stats(rp);
  m.avg_return = rs.mean;
  m.min_return = rs.min;
  m.max_return = rs.max;
  m.volatility = volatility(rp);
  m.avg_drawdown = avg_drawdown(rp);
  m.sharpe = sharpe(rp, rf);
  m.sortino = sortino(rp, rf);
  m.treynor = treynor(rp, rb, rf);
  m.information_ratio = information_ratio(rp, rb);
  return m;
}

}  // namespace trackkit
