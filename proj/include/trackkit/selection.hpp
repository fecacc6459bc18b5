#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/portfolio.hpp"

namespace trackkit {

// How the cardinality bound is enforced around a continuous sub-solver.
struct SelectionStrategy {
  enum class Kind { ExactEnumerate, RelaxSelectReoptimize, SwapLocalSearch };
  Kind kind = Kind::RelaxSelectReoptimize;
  std::size_t max_sweeps = 2;             // SwapLocalSearch
  std::uint64_t enumerate_cap = 2000000;  // max subsets ExactEnumerate may visit

  static SelectionStrategy exact() { return {Kind::ExactEnumerate, 2, 2000000}; }
  static SelectionStrategy relax() { return {Kind::RelaxSelectReoptimize, 2, 2000000}; }
  static SelectionStrategy swap(std::size_t sweeps = 2) {
    return {Kind::SwapLocalSearch, sweeps, 2000000};
  }
};

struct SupportSolve {
  Vector weights;  // full length n, zero off-support
  double objective = 0.0;
};

// Solves the model restricted to a given support set.
using SupportSolver = std::function<SupportSolve(const std::vector<std::size_t>&)>;

namespace detail {

inline std::uint64_t binomial_capped(std::size_t n, std::size_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    // c * (n-k+i) / i, watching for overflow against the cap
    long double next = static_cast<long double>(c) * static_cast<long double>(n - k + i) /
                       static_cast<long double>(i);
    if (next > static_cast<long double>(cap) * 4.0L) return cap + 1;
    c = static_cast<std::uint64_t>(next + 0.5L);
  }
  return c;
}

inline std::vector<std::size_t> top_k_by_weight(const Vector& w, std::size_t k) {
  std::vector<std::size_t> idx(w.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
  idx.resize(std::min(k, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

// Chooses a support of at most K assets for the given restricted solver and
// returns the best solve found. Deterministic for a fixed strategy; the
// deadline, when set, turns long searches into incumbent returns flagged
// "timeout".
inline Portfolio select_support(std::size_t n, std::size_t K, const SelectionStrategy& strategy,
                                const SupportSolver& solve, const std::string& model_tag,
                                const Deadline& deadline = {}) {
  if (K == 0) throw SolverError("select_support: K must be positive");
  if (K >= n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    SupportSolve s = solve(all);
    return finalize_portfolio(s.weights, s.objective, model_tag,
                              K > n ? "degenerate-K" : "");
  }

  auto relax_then_reoptimize = [&]() {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    SupportSolve relaxed = solve(all);
    std::vector<std::size_t> support = detail::top_k_by_weight(relaxed.weights, K);
    return std::pair<std::vector<std::size_t>, SupportSolve>(support, solve(support));
  };

  auto swap_improve = [&](std::vector<std::size_t> support, SupportSolve best,
                          std::size_t max_sweeps, std::string note) {
    std::vector<char> in(n, 0);
    for (std::size_t i : support) in[i] = 1;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
      bool improved = false;
      for (std::size_t pos = 0; pos < support.size(); ++pos) {
        for (std::size_t cand = 0; cand < n; ++cand) {
          if (in[cand]) continue;
          if (deadline.expired()) {
            return finalize_portfolio(best.weights, best.objective, model_tag, "timeout");
          }
          std::vector<std::size_t> trial = support;
          trial[pos] = cand;
          std::sort(trial.begin(), trial.end());
          SupportSolve s = solve(trial);
          if (s.objective < best.objective - 1e-12) {
            in[support[pos]] = 0;
            in[cand] = 1;
            support = trial;
            // re-find the slot holding `cand` after the sort
            pos = static_cast<std::size_t>(
                std::find(support.begin(), support.end(), cand) - support.begin());
            best = std::move(s);
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
    return finalize_portfolio(best.weights, best.objective, model_tag, std::move(note));
  };

  switch (strategy.kind) {
    case SelectionStrategy::Kind::ExactEnumerate: {
      if (detail::binomial_capped(n, K, strategy.enumerate_cap) > strategy.enumerate_cap) {
        // Enumeration would exceed the subset budget; degrade to the
        // relaxation heuristic and say so. A swap sweep here would multiply
        // the cost by n*K restricted solves, which defeats the budget.
        auto [support, best] = relax_then_reoptimize();
        (void)support;
        return finalize_portfolio(best.weights, best.objective, model_tag,
                                  "enumerate-cap-fallback");
      }
      std::vector<std::size_t> comb(K);
      std::iota(comb.begin(), comb.end(), 0);
      SupportSolve best;
      bool have = false;
      while (true) {
        if (deadline.expired() && have)
          return finalize_portfolio(best.weights, best.objective, model_tag, "timeout");
        SupportSolve s = solve(comb);
        if (!have || s.objective < best.objective - 1e-15) {
          best = std::move(s);
          have = true;
        }
        // next combination in lexicographic order
        std::size_t i = K;
        while (i-- > 0) {
          if (comb[i] != i + n - K) {
            ++comb[i];
            for (std::size_t j = i + 1; j < K; ++j) comb[j] = comb[j - 1] + 1;
            break;
          }
          if (i == 0) return finalize_portfolio(best.weights, best.objective, model_tag);
        }
      }
    }
    case SelectionStrategy::Kind::RelaxSelectReoptimize: {
      auto [support, best] = relax_then_reoptimize();
      (void)support;
      return finalize_portfolio(best.weights, best.objective, model_tag);
    }
    case SelectionStrategy::Kind::SwapLocalSearch: {
      auto [support, best] = relax_then_reoptimize();
      return swap_improve(support, best, strategy.max_sweeps, "");
    }
  }
  throw SolverError("select_support: unknown strategy");
}

}  // namespace trackkit
