#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/matrix.hpp"
#include "trackkit/portfolio.hpp"
#include "trackkit/rng.hpp"
#include "trackkit/tracking.hpp"

namespace trackkit {

// Correlation distance sqrt(2(1-c)). A zero-variance series has no defined
// correlation; it is treated as uncorrelated (distance sqrt(2)) and flagged.
inline double corr_distance(const Vector& x, const Vector& y, bool* degenerate = nullptr) {
  double sx = sample_sd(x), sy = sample_sd(y);
  if (sx <= 0.0 || sy <= 0.0) {
    if (degenerate) *degenerate = true;
    return std::sqrt(2.0);
  }
  if (degenerate) *degenerate = false;
  double c = pearson(x, y);
  return std::sqrt(std::max(0.0, 2.0 * (1.0 - c)));
}

// Alternative price-level distance: min over the two relative-difference
// directions, each minimized over the scale a by golden-section search.
inline double price_diff_distance(const Vector& x, const Vector& y) {
  const std::size_t T = x.size();
  auto cost = [&](double a, bool first) {
    double s = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      double denom = first ? x[t] : a * y[t];
      if (std::abs(denom) < 1e-300) return kInf;
      double d = (x[t] - a * y[t]) / denom;
      s += d * d;
    }
    return s / static_cast<double>(T);
  };
  auto minimize = [&](bool first) {
    double lo = 1e-6, hi = 1e6, gr = 0.5 * (std::sqrt(5.0) - 1.0);
    // search log-scale for robustness
    double llo = std::log(lo), lhi = std::log(hi);
    double a = lhi - gr * (lhi - llo), b = llo + gr * (lhi - llo);
    double fa = cost(std::exp(a), first), fb = cost(std::exp(b), first);
    for (int it = 0; it < 200; ++it) {
      if (fa < fb) {
        lhi = b;
        b = a;
        fb = fa;
        a = lhi - gr * (lhi - llo);
        fa = cost(std::exp(a), first);
      } else {
        llo = a;
        a = b;
        fa = fb;
        b = llo + gr * (lhi - llo);
        fb = cost(std::exp(b), first);
      }
    }
    return std::min(fa, fb);
  };
  return std::min(minimize(true), minimize(false));
}

inline Matrix corr_distance_matrix(const Matrix& R) {
  const std::size_t n = R.cols;
  Matrix D(n, n);
  std::vector<Vector> cols(n);
  for (std::size_t j = 0; j < n; ++j) cols[j] = R.col(j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      D(i, j) = corr_distance(cols[i], cols[j]);
      D(j, i) = D(i, j);
    }
  return D;
}

struct ClusterAssignment {
  std::vector<std::size_t> labels;  // contiguous ids from 0, ordered by smallest member
  Vector merge_heights;
  std::size_t n_clusters = 0;
};

// Naive agglomerative complete linkage; ties go to the lexicographically
// smallest pair of cluster representatives.
inline ClusterAssignment hcluster_complete(const Matrix& D, std::size_t K_clusters) {
  const std::size_t n = D.rows;
  if (K_clusters == 0 || K_clusters > n) throw ConfigError("hcluster_complete: bad cluster count");
  std::vector<std::vector<std::size_t>> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};

  ClusterAssignment out;
  auto linkage = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double m = 0.0;
    for (std::size_t i : a)
      for (std::size_t j : b) m = std::max(m, D(i, j));
    return m;
  };

  while (clusters.size() > K_clusters) {
    std::size_t bi = 0, bj = 1;
    double best = kInf;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double d = linkage(clusters[i], clusters[j]);
        if (d < best - 1e-15) {
          best = d;
          bi = i;
          bj = j;
        }
        // exact ties keep the earlier (i, j); clusters stay sorted by their
        // smallest member so this is the lexicographic rule
      }
    }
    out.merge_heights.push_back(best);
    std::vector<std::size_t> merged = clusters[bi];
    merged.insert(merged.end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(merged.begin(), merged.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    clusters[bi] = std::move(merged);
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
  }

  out.labels.assign(n, 0);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (std::size_t i : clusters[c]) out.labels[i] = c;
  out.n_clusters = clusters.size();
  return out;
}

namespace detail {

inline std::vector<std::vector<std::size_t>> cluster_members(const ClusterAssignment& a) {
  std::vector<std::vector<std::size_t>> m(a.n_clusters);
  for (std::size_t i = 0; i < a.labels.size(); ++i) m[a.labels[i]].push_back(i);
  return m;
}

}  // namespace detail

// One uniform draw per cluster.
inline std::vector<std::size_t> clust1_select(const ClusterAssignment& assign,
                                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> support;
  for (const auto& members : detail::cluster_members(assign))
    support.push_back(members[rng.uniform_int(members.size())]);
  std::sort(support.begin(), support.end());
  return support;
}

// Proportional quotas by the largest-remainder rule (floor, then hand out the
// shortfall by descending fractional part; ties favor the smaller quota, then
// the smaller cluster id), draws without replacement.
inline std::vector<std::size_t> clust2_select(const ClusterAssignment& assign, std::size_t K,
                                              std::uint64_t seed) {
  auto members = detail::cluster_members(assign);
  const std::size_t n = assign.labels.size(), C = members.size();
  if (K > n) throw ConfigError("clust2_select: K exceeds universe");
  std::vector<std::size_t> quota(C);
  std::vector<double> frac(C);
  std::size_t total = 0;
  for (std::size_t c = 0; c < C; ++c) {
    double exact = static_cast<double>(K) * static_cast<double>(members[c].size()) /
                   static_cast<double>(n);
    quota[c] = std::min(members[c].size(), static_cast<std::size_t>(std::floor(exact)));
    frac[c] = exact - std::floor(exact);
    total += quota[c];
  }
  std::vector<std::size_t> order(C);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    if (quota[a] != quota[b]) return quota[a] < quota[b];
    return a < b;
  });
  std::size_t k = 0;
  while (total < K) {
    std::size_t c = order[k % C];
    if (quota[c] < members[c].size()) {
      ++quota[c];
      ++total;
    }
    ++k;
    if (k > 4 * C * (K + 1)) throw SolverError("clust2_select: quota assignment stalled");
  }

  Rng rng(seed);
  std::vector<std::size_t> support;
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<std::size_t> pool = members[c];
    for (std::size_t j = 0; j < quota[c]; ++j) {
      std::size_t pick = j + rng.uniform_int(pool.size() - j);
      std::swap(pool[j], pool[pick]);
      support.push_back(pool[j]);
    }
  }
  std::sort(support.begin(), support.end());
  return support;
}

// Selection followed by MSE reweighting of the chosen assets.
inline Portfolio clust1_track(const TrackingProblem& p, std::uint64_t seed) {
  ClusterAssignment assign = hcluster_complete(corr_distance_matrix(p.R), std::min(p.K, p.n()));
  std::vector<std::size_t> support = clust1_select(assign, seed);
  SupportSolve s = solve_mse_on(p, support);
  return finalize_portfolio(s.weights, s.objective, "Clust1");
}

inline Portfolio clust2_track(const TrackingProblem& p, std::uint64_t seed,
                              std::size_t n_clusters = 0) {
  if (n_clusters == 0) n_clusters = (p.K + 1) / 2;
  n_clusters = std::min(n_clusters, p.n());
  ClusterAssignment assign = hcluster_complete(corr_distance_matrix(p.R), n_clusters);
  std::vector<std::size_t> support = clust2_select(assign, std::min(p.K, p.n()), seed);
  SupportSolve s = solve_mse_on(p, support);
  return finalize_portfolio(s.weights, s.objective, "Clust2");
}

}  // namespace trackkit
