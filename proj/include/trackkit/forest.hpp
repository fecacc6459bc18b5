#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/lp.hpp"
#include "trackkit/matrix.hpp"
#include "trackkit/portfolio.hpp"
#include "trackkit/rng.hpp"
#include "trackkit/sparse.hpp"

namespace trackkit {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<std::size_t> oob;  // rows left out of this tree's bootstrap
};

struct Forest {
  std::vector<Tree> trees;
  bool classification = false;
  std::size_t n_features = 0;
};

namespace detail {

inline double tree_predict(const Tree& tree, const Matrix& R, std::size_t row) {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
    node = R(row, static_cast<std::size_t>(nd.feature)) <= nd.threshold ? nd.left : nd.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].value;
}

struct SplitSearch {
  const Matrix& R;
  const Vector& y;
  bool classification;
  std::size_t min_leaf;

  double leaf_value(const std::vector<std::size_t>& rows) const {
    if (classification) {
      std::size_t ones = 0;
      for (std::size_t r : rows) ones += y[r] > 0.5 ? 1 : 0;
      // majority vote, ties to class 0
      return 2 * ones > rows.size() ? 1.0 : 0.0;
    }
    double s = 0.0;
    for (std::size_t r : rows) s += y[r];
    return s / static_cast<double>(rows.size());
  }

  // Gini impurity (weighted, classification) or SSE (regression) of a child.
  double impurity(std::size_t count, double sum, double sumsq) const {
    if (count == 0) return 0.0;
    double nc = static_cast<double>(count);
    if (classification) {
      double p = sum / nc;
      return nc * 2.0 * p * (1.0 - p);
    }
    return sumsq - sum * sum / nc;
  }

  bool pure(const std::vector<std::size_t>& rows) const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (y[rows[i]] != y[rows[0]]) return false;
    return true;
  }

  // Best (threshold, score) for one feature; false when no legal split.
  bool best_split(const std::vector<std::size_t>& rows, std::size_t feat, double& threshold,
                  double& score) const {
    std::vector<std::size_t> order = rows;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double va = R(a, feat), vb = R(b, feat);
      return va != vb ? va < vb : a < b;
    });
    double total_sum = 0.0, total_sq = 0.0;
    for (std::size_t r : order) {
      total_sum += y[r];
      total_sq += y[r] * y[r];
    }
    double left_sum = 0.0, left_sq = 0.0;
    bool found = false;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      double v = y[order[i]];
      left_sum += v;
      left_sq += v * v;
      std::size_t nl = i + 1, nr = order.size() - nl;
      if (R(order[i], feat) == R(order[i + 1], feat)) continue;
      if (nl < min_leaf || nr < min_leaf) continue;
      double s = impurity(nl, left_sum, left_sq) +
                 impurity(nr, total_sum - left_sum, total_sq - left_sq);
      if (!found || s < score - 1e-15) {
        score = s;
        threshold = 0.5 * (R(order[i], feat) + R(order[i + 1], feat));
        found = true;
      }
    }
    return found;
  }
};

inline int grow_tree(Tree& tree, const SplitSearch& ctx, std::vector<std::size_t> rows,
                     std::size_t m_features, Rng& rng) {
  const std::size_t n_feat = ctx.R.cols;
  int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (rows.size() < 2 * ctx.min_leaf || ctx.pure(rows)) {
    tree.nodes[static_cast<std::size_t>(id)].value = ctx.leaf_value(rows);
    return id;
  }
  // sample m features without replacement, searched in ascending order
  std::vector<std::size_t> feats(n_feat);
  std::iota(feats.begin(), feats.end(), 0);
  for (std::size_t j = 0; j < m_features && j < n_feat; ++j) {
    std::size_t pick = j + rng.uniform_int(n_feat - j);
    std::swap(feats[j], feats[pick]);
  }
  feats.resize(std::min(m_features, n_feat));
  std::sort(feats.begin(), feats.end());

  bool found = false;
  std::size_t best_feat = 0;
  double best_thr = 0.0, best_score = 0.0;
  for (std::size_t f : feats) {
    double thr, score;
    if (ctx.best_split(rows, f, thr, score) && (!found || score < best_score - 1e-15)) {
      found = true;
      best_feat = f;
      best_thr = thr;
      best_score = score;
    }
  }
  if (!found) {
    tree.nodes[static_cast<std::size_t>(id)].value = ctx.leaf_value(rows);
    return id;
  }
  std::vector<std::size_t> left, right;
  for (std::size_t r : rows)
    (ctx.R(r, best_feat) <= best_thr ? left : right).push_back(r);
  rows.clear();
  rows.shrink_to_fit();
  int li = grow_tree(tree, ctx, std::move(left), m_features, rng);
  int ri = grow_tree(tree, ctx, std::move(right), m_features, rng);
  TreeNode& nd = tree.nodes[static_cast<std::size_t>(id)];
  nd.feature = static_cast<int>(best_feat);
  nd.threshold = best_thr;
  nd.left = li;
  nd.right = ri;
  return id;
}

}  // namespace detail

enum class ForestTask { Classification, Regression };

inline Forest fit_forest(const Matrix& R, const Vector& target, ForestTask task,
                         std::size_t n_trees = 100, std::size_t m_features = 0,
                         std::uint64_t seed = 0, std::size_t min_leaf = 5) {
  const std::size_t T = R.rows, n = R.cols;
  if (target.size() != T) throw DataError("fit_forest: target length mismatch");
  bool cls = task == ForestTask::Classification;
  if (m_features == 0) {
    m_features = cls ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))))
                     : std::max<std::size_t>(1, n / 3);
  }
  Forest forest;
  forest.classification = cls;
  forest.n_features = n;
  Rng root(seed);
  for (std::size_t t = 0; t < n_trees; ++t) {
    Rng rng = root.split(0x666f7265u, t);  // per-tree stream
    std::vector<char> in_bag(T, 0);
    std::vector<std::size_t> rows(T);
    for (std::size_t i = 0; i < T; ++i) {
      rows[i] = rng.uniform_int(T);
      in_bag[rows[i]] = 1;
    }
    Tree tree;
    for (std::size_t i = 0; i < T; ++i)
      if (!in_bag[i]) tree.oob.push_back(i);
    detail::SplitSearch ctx{R, target, cls, min_leaf};
    detail::grow_tree(tree, ctx, std::move(rows), m_features, rng);
    forest.trees.push_back(std::move(tree));
  }
  return forest;
}

inline double forest_predict(const Forest& forest, const Matrix& R, std::size_t row) {
  double s = 0.0;
  for (const Tree& t : forest.trees) s += detail::tree_predict(t, R, row);
  s /= static_cast<double>(forest.trees.size());
  if (forest.classification) return s > 0.5 ? 1.0 : 0.0;
  return s;
}

namespace detail {

// Per-tree OOB evaluation with one column permuted (feature < 0 means none).
inline double tree_oob_score(const Tree& tree, const Matrix& R, const Vector& y,
                             bool classification, int permute_feature, Rng& rng) {
  if (tree.oob.empty()) return std::nan("");
  std::vector<std::size_t> perm = tree.oob;
  if (permute_feature >= 0) rng.shuffle(perm);
  double acc = 0.0;
  for (std::size_t i = 0; i < tree.oob.size(); ++i) {
    std::size_t row = tree.oob[i];
    double pred;
    if (permute_feature < 0) {
      pred = tree_predict(tree, R, row);
    } else {
      // walk the tree reading the permuted feature from a donor row
      int node = 0;
      while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
        std::size_t src =
            nd.feature == permute_feature ? perm[i] : row;
        node = R(src, static_cast<std::size_t>(nd.feature)) <= nd.threshold ? nd.left : nd.right;
      }
      pred = tree.nodes[static_cast<std::size_t>(node)].value;
    }
    if (classification)
      acc += (pred > 0.5) == (y[row] > 0.5) ? 1.0 : 0.0;
    else
      acc += (pred - y[row]) * (pred - y[row]);
  }
  return acc / static_cast<double>(tree.oob.size());
}

}  // namespace detail

// Mean decrease in accuracy over the trees' out-of-bag rows.
inline Vector mda_importance(const Forest& forest, const Matrix& R, const Vector& labels,
                             std::uint64_t seed) {
  Vector scores(forest.n_features, 0.0);
  Rng root(seed);
  for (std::size_t f = 0; f < forest.n_features; ++f) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      Rng rng = root.split(f, t);
      Rng rng_base = rng;  // unused draw path kept aligned
      double base =
          detail::tree_oob_score(forest.trees[t], R, labels, true, -1, rng_base);
      double perm = detail::tree_oob_score(forest.trees[t], R, labels, true,
                                           static_cast<int>(f), rng);
      if (std::isnan(base) || std::isnan(perm)) continue;
      total += base - perm;
      ++count;
    }
    scores[f] = count ? total / static_cast<double>(count) : 0.0;
  }
  return scores;
}

// Percent increase in per-tree OOB mean squared error.
inline Vector pim_importance(const Forest& forest, const Matrix& R, const Vector& y,
                             std::uint64_t seed) {
  Vector scores(forest.n_features, 0.0);
  Rng root(seed);
  for (std::size_t f = 0; f < forest.n_features; ++f) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      Rng rng = root.split(f, t);
      Rng rng_base = rng;
      double base = detail::tree_oob_score(forest.trees[t], R, y, false, -1, rng_base);
      double perm =
          detail::tree_oob_score(forest.trees[t], R, y, false, static_cast<int>(f), rng);
      if (std::isnan(base) || std::isnan(perm) || base <= 1e-18) continue;
      total += (perm - base) / base;
      ++count;
    }
    scores[f] = count ? 100.0 * total / static_cast<double>(count) : 0.0;
  }
  return scores;
}

// Nonnegative ridge with 5-fold contiguous-block cross validation over a
// log-spaced penalty grid; the winner is refit on the full window and
// normalized onto the simplex.
inline Portfolio ridge_cv_weights(const Matrix& R_support, const Vector& I,
                                  const std::vector<std::size_t>& support, std::size_t n_total,
                                  double alpha_lo = 1e-4, double alpha_hi = 1e-2,
                                  std::size_t folds = 5, std::size_t grid_points = 9) {
  const std::size_t T = R_support.rows;
  if (folds < 2 || folds > T) throw ConfigError("ridge_cv_weights: bad fold count");
  Vector grid(grid_points);
  for (std::size_t g = 0; g < grid_points; ++g) {
    double f = grid_points > 1 ? static_cast<double>(g) / static_cast<double>(grid_points - 1)
                               : 0.0;
    grid[g] = alpha_lo * std::pow(alpha_hi / alpha_lo, f);
  }
  double best_cv = kInf, best_lambda = grid[0];
  for (double lam : grid) {
    double cv = 0.0;
    for (std::size_t fold = 0; fold < folds; ++fold) {
      std::size_t lo = fold * T / folds, hi = (fold + 1) * T / folds;
      Matrix Rtr(T - (hi - lo), R_support.cols);
      Vector Itr(T - (hi - lo));
      std::size_t r = 0;
      for (std::size_t t = 0; t < T; ++t) {
        if (t >= lo && t < hi) continue;
        for (std::size_t j = 0; j < R_support.cols; ++j) Rtr(r, j) = R_support(t, j);
        Itr[r] = I[t];
        ++r;
      }
      Vector w = detail::nn_penalized_fit(Rtr, Itr, 0.0, lam);
      for (std::size_t t = lo; t < hi; ++t) {
        double pred = 0.0;
        for (std::size_t j = 0; j < R_support.cols; ++j) pred += R_support(t, j) * w[j];
        cv += (I[t] - pred) * (I[t] - pred);
      }
    }
    if (cv < best_cv - 1e-18) {
      best_cv = cv;
      best_lambda = lam;
    }
  }
  Vector w_fit = detail::nn_penalized_fit(R_support, I, 0.0, best_lambda);
  double sum = 0.0;
  for (double v : w_fit) sum += v;
  Vector w(n_total, 0.0);
  std::string note;
  if (sum <= 0.0) {
    for (std::size_t i : support) w[i] = 1.0 / static_cast<double>(support.size());
    note = "uniform-fallback";
  } else {
    for (std::size_t j = 0; j < support.size(); ++j) w[support[j]] = w_fit[j] / sum;
  }
  Vector rw = [&] {
    Vector out(T, 0.0);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < support.size(); ++j) out[t] += R_support(t, j) * w[support[j]];
    return out;
  }();
  double mse = 0.0;
  for (std::size_t t = 0; t < T; ++t) mse += (I[t] - rw[t]) * (I[t] - rw[t]);
  mse /= static_cast<double>(T);
  return finalize_portfolio(std::move(w), mse, "ridge", std::move(note));
}

namespace detail {

inline std::vector<std::size_t> top_k_scores(const Vector& scores, std::size_t K) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(std::min(K, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

// Classification pipeline: up/down labels, MDA ranking, ridge reweighting.
inline Portfolio rf_clust_track(const TrackingProblem& p, std::uint64_t seed,
                                std::size_t n_trees = 100) {
  Vector labels(p.T());
  for (std::size_t t = 0; t < p.T(); ++t) labels[t] = p.I[t] > 0.0 ? 1.0 : 0.0;
  Forest forest = fit_forest(p.R, labels, ForestTask::Classification, n_trees, 0, seed);
  Vector scores = mda_importance(forest, p.R, labels, seed ^ 0x9e3779b9u);
  std::vector<std::size_t> support = detail::top_k_scores(scores, std::min(p.K, p.n()));
  Matrix Rs(p.T(), support.size());
  for (std::size_t t = 0; t < p.T(); ++t)
    for (std::size_t j = 0; j < support.size(); ++j) Rs(t, j) = p.R(t, support[j]);
  Portfolio out = ridge_cv_weights(Rs, p.I, support, p.n());
  out.model = "RF-Clust";
  return out;
}

// Regression pipeline: PIM ranking, ridge reweighting.
inline Portfolio rf_reg_track(const TrackingProblem& p, std::uint64_t seed,
                              std::size_t n_trees = 100) {
  Forest forest = fit_forest(p.R, p.I, ForestTask::Regression, n_trees, 0, seed);
  Vector scores = pim_importance(forest, p.R, p.I, seed ^ 0x9e3779b9u);
  std::vector<std::size_t> support = detail::top_k_scores(scores, std::min(p.K, p.n()));
  Matrix Rs(p.T(), support.size());
  for (std::size_t t = 0; t < p.T(); ++t)
    for (std::size_t j = 0; j < support.size(); ++j) Rs(t, j) = p.R(t, support[j]);
  Portfolio out = ridge_cv_weights(Rs, p.I, support, p.n());
  out.model = "RF-Reg";
  return out;
}

}  // namespace trackkit
