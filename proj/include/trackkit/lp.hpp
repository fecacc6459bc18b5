#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/matrix.hpp"

namespace trackkit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

// min objective . x
// s.t.  eq_lhs x  = eq_rhs
//       ub_lhs x <= ub_rhs
//       lo <= x <= hi   (+-inf allowed)
struct LinearProgram {
  Vector objective;
  Matrix eq_lhs;
  Vector eq_rhs;
  Matrix ub_lhs;
  Vector ub_rhs;
  Vector lo, hi;

  std::size_t num_vars() const { return objective.size(); }

  // All-default bounds [0, +inf).
  static LinearProgram with_vars(std::size_t m) {
    LinearProgram lp;
    lp.objective.assign(m, 0.0);
    lp.lo.assign(m, 0.0);
    lp.hi.assign(m, kInf);
    return lp;
  }
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double objective = 0.0;
};

namespace detail {

// Full-tableau primal simplex core operating on min c.x, Ax=b, x>=0, b>=0.
// Dantzig pricing, falling back to Bland's rule once degenerate pivots pile
// up, which guarantees termination.
class SimplexTableau {
 public:
  SimplexTableau(std::size_t m, std::size_t n) : m_(m), n_(n), tab_((m + 1) * (n + 1), 0.0) {}

  double& a(std::size_t i, std::size_t j) { return tab_[i * (n_ + 1) + j]; }
  double& rhs(std::size_t i) { return tab_[i * (n_ + 1) + n_]; }
  double& cost(std::size_t j) { return tab_[m_ * (n_ + 1) + j]; }
  double& obj() { return tab_[m_ * (n_ + 1) + n_]; }

  std::vector<std::size_t> basis;          // basis[i] = column basic in row i
  std::vector<char> forbidden;             // columns barred from entering

  void init_basis(const std::vector<std::size_t>& b) { basis = b; }

  // Installs reduced costs for cost vector c under the current basis.
  void price(const Vector& c) {
    for (std::size_t j = 0; j <= n_; ++j) cost(j) = (j < n_) ? c[j] : 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      double cb = c[basis[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= n_; ++j) cost(j) -= cb * tab_[i * (n_ + 1) + j];
    }
  }

  LpStatus iterate(std::size_t max_iters) {
    const double eps = 1e-9;
    std::size_t degenerate_run = 0;
    bool bland = false;
    for (std::size_t it = 0; it < max_iters; ++it) {
      // entering column
      std::size_t enter = n_;
      if (!bland) {
        double best = -eps;
        for (std::size_t j = 0; j < n_; ++j) {
          if (forbidden[j]) continue;
          if (cost(j) < best) {
            best = cost(j);
            enter = j;
          }
        }
      } else {
        for (std::size_t j = 0; j < n_; ++j) {
          if (!forbidden[j] && cost(j) < -eps) {
            enter = j;
            break;
          }
        }
      }
      if (enter == n_) return LpStatus::Optimal;

      // ratio test
      std::size_t leave = m_;
      double best_ratio = kInf;
      for (std::size_t i = 0; i < m_; ++i) {
        double aij = a(i, enter);
        if (aij > eps) {
          double ratio = rhs(i) / aij;
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 && (leave == m_ || basis[i] < basis[leave]))) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave == m_) return LpStatus::Unbounded;

      if (best_ratio < 1e-10) {
        if (++degenerate_run > m_ + n_) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      pivot(leave, enter);
    }
    return LpStatus::IterLimit;
  }

  void pivot(std::size_t prow, std::size_t pcol) {
    double piv = a(prow, pcol);
    double* prow_ptr = &tab_[prow * (n_ + 1)];
    for (std::size_t j = 0; j <= n_; ++j) prow_ptr[j] /= piv;
    prow_ptr[pcol] = 1.0;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == prow) continue;
      double f = tab_[i * (n_ + 1) + pcol];
      if (f == 0.0) continue;
      double* row_ptr = &tab_[i * (n_ + 1)];
      for (std::size_t j = 0; j <= n_; ++j) row_ptr[j] -= f * prow_ptr[j];
      row_ptr[pcol] = 0.0;
    }
    basis[prow] = pcol;
  }

  std::size_t m() const { return m_; }
  std::size_t n() const { return n_; }

 private:
  std::size_t m_, n_;
  std::vector<double> tab_;
};

}  // namespace detail

// Two-phase simplex. On Optimal the returned x is primal feasible to the
// library feasibility tolerance; Infeasible/Unbounded are reported via
// status with x empty.
inline LpSolution solve_lp(const LinearProgram& lp, std::size_t max_iters = 200000) {
  const std::size_t nv = lp.num_vars();
  const std::size_t n_eq = lp.eq_rhs.size();
  const std::size_t n_ub = lp.ub_rhs.size();

  // --- standard-form translation ---------------------------------------
  // Each original variable maps to one or two nonnegative columns plus an
  // affine shift:  x_j = shift_j + pos_col - neg_col.
  struct VarMap {
    double shift = 0.0;
    int pos = -1, neg = -1;  // standard-form column indices
    double extra_ub = kInf;  // upper bound row needed for the pos column
  };
  std::vector<VarMap> vmap(nv);
  std::size_t cols = 0;
  std::size_t n_bound_rows = 0;
  for (std::size_t j = 0; j < nv; ++j) {
    double lo = lp.lo[j], hi = lp.hi[j];
    if (lo > hi) return {LpStatus::Infeasible, {}, 0.0};
    VarMap& v = vmap[j];
    if (std::isfinite(lo)) {
      v.shift = lo;
      v.pos = static_cast<int>(cols++);
      if (std::isfinite(hi)) {
        v.extra_ub = hi - lo;
        ++n_bound_rows;
      }
    } else if (std::isfinite(hi)) {
      // x = hi - y, y >= 0: represent with a negated column and shift.
      v.shift = hi;
      v.neg = static_cast<int>(cols++);
    } else {
      v.pos = static_cast<int>(cols++);
      v.neg = static_cast<int>(cols++);
    }
  }

  const std::size_t n_rows = n_eq + n_ub + n_bound_rows;
  const std::size_t n_slack = n_ub + n_bound_rows;
  // artificial columns appended after slacks as needed
  std::vector<Vector> rows(n_rows, Vector(cols, 0.0));
  Vector rhs(n_rows, 0.0);
  std::vector<char> is_eq_row(n_rows, 0);

  auto fill_row = [&](std::size_t r, const Matrix& A, std::size_t src, double b) {
    double bb = b;
    for (std::size_t j = 0; j < nv; ++j) {
      double coef = A(src, j);
      if (coef == 0.0) continue;
      const VarMap& v = vmap[j];
      bb -= coef * v.shift;
      if (v.pos >= 0) rows[r][static_cast<std::size_t>(v.pos)] += coef;
      if (v.neg >= 0) rows[r][static_cast<std::size_t>(v.neg)] -= coef;
    }
    rhs[r] = bb;
  };

  std::size_t r = 0;
  for (std::size_t i = 0; i < n_eq; ++i, ++r) {
    fill_row(r, lp.eq_lhs, i, lp.eq_rhs[i]);
    is_eq_row[r] = 1;
  }
  for (std::size_t i = 0; i < n_ub; ++i, ++r) fill_row(r, lp.ub_lhs, i, lp.ub_rhs[i]);
  for (std::size_t j = 0; j < nv; ++j) {
    if (std::isfinite(vmap[j].extra_ub)) {
      rows[r][static_cast<std::size_t>(vmap[j].pos)] = 1.0;
      rhs[r] = vmap[j].extra_ub;
      ++r;
    }
  }

  // Objective in standard-form columns (constant from shifts recovered later).
  Vector c_std(cols + n_slack, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    const VarMap& v = vmap[j];
    if (v.pos >= 0) c_std[static_cast<std::size_t>(v.pos)] += lp.objective[j];
    if (v.neg >= 0) c_std[static_cast<std::size_t>(v.neg)] -= lp.objective[j];
  }

  // Slacks for inequality rows; then flip rows so rhs >= 0.
  std::size_t total_cols = cols + n_slack;
  std::vector<int> slack_col_of_row(n_rows, -1);
  {
    std::size_t s = cols;
    for (std::size_t i = 0; i < n_rows; ++i) {
      if (!is_eq_row[i]) slack_col_of_row[i] = static_cast<int>(s++);
    }
  }
  std::vector<char> row_flipped(n_rows, 0);
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (rhs[i] < 0.0) {
      for (double& v : rows[i]) v = -v;
      rhs[i] = -rhs[i];
      row_flipped[i] = 1;
    }
  }

  // Crash basis: prefer the slack column when its coefficient is still +1,
  // else a structural column that is a positive singleton in this row
  // (deviation-split variables in the tracking LPs qualify), else an
  // artificial. Singleton rows are rescaled so the basis column is unit.
  std::vector<int> col_count(cols, 0);
  std::vector<std::size_t> col_row(cols, 0);
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (rows[i][j] != 0.0) {
        ++col_count[j];
        col_row[j] = i;
      }
    }
  }
  std::vector<std::size_t> basis(n_rows);
  std::vector<char> col_used(cols, 0);
  Vector row_scale(n_rows, 1.0);
  std::size_t n_art = 0;
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (slack_col_of_row[i] >= 0 && !row_flipped[i]) {
      basis[i] = static_cast<std::size_t>(slack_col_of_row[i]);
      continue;
    }
    std::size_t pick = cols;
    for (std::size_t j = 0; j < cols; ++j) {
      if (!col_used[j] && col_count[j] == 1 && col_row[j] == i && rows[i][j] > 1e-12) {
        pick = j;
        break;
      }
    }
    if (pick < cols) {
      double scale = rows[i][pick];
      if (scale != 1.0) {
        for (double& v : rows[i]) v /= scale;
        rhs[i] /= scale;
        row_scale[i] = scale;
      }
      col_used[pick] = 1;
      basis[i] = pick;
    } else {
      basis[i] = total_cols + n_art;
      ++n_art;
    }
  }

  const std::size_t N = total_cols + n_art;
  detail::SimplexTableau T(n_rows, N);
  T.forbidden.assign(N, 0);
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) T.a(i, j) = rows[i][j];
    if (slack_col_of_row[i] >= 0)
      T.a(i, static_cast<std::size_t>(slack_col_of_row[i])) =
          (row_flipped[i] ? -1.0 : 1.0) / row_scale[i];
    T.rhs(i) = rhs[i];
  }
  {
    std::size_t k = 0;
    for (std::size_t i = 0; i < n_rows; ++i) {
      if (basis[i] >= total_cols) {
        T.a(i, total_cols + k) = 1.0;
        ++k;
      }
    }
  }
  T.init_basis(basis);

  // Phase 1: minimize the artificial sum.
  if (n_art > 0) {
    Vector c1(N, 0.0);
    for (std::size_t j = total_cols; j < N; ++j) c1[j] = 1.0;
    T.price(c1);
    LpStatus st = T.iterate(max_iters);
    if (st == LpStatus::IterLimit) return {LpStatus::IterLimit, {}, 0.0};
    double art_sum = 0.0;
    for (std::size_t i = 0; i < n_rows; ++i)
      if (T.basis[i] >= total_cols) art_sum += T.rhs(i);
    if (art_sum > 1e-7) return {LpStatus::Infeasible, {}, 0.0};
    // Drive any zero-level artificials out of the basis.
    for (std::size_t i = 0; i < n_rows; ++i) {
      if (T.basis[i] < total_cols) continue;
      std::size_t enter = N;
      for (std::size_t j = 0; j < total_cols; ++j) {
        if (std::abs(T.a(i, j)) > 1e-7) {
          enter = j;
          break;
        }
      }
      if (enter < N) T.pivot(i, enter);
      // else: redundant row, the artificial stays basic at zero (harmless
      // once barred from re-entering)
    }
    for (std::size_t j = total_cols; j < N; ++j) T.forbidden[j] = 1;
  }

  // Phase 2.
  Vector c2(N, 0.0);
  for (std::size_t j = 0; j < total_cols; ++j) c2[j] = (j < c_std.size()) ? c_std[j] : 0.0;
  T.price(c2);
  LpStatus st = T.iterate(max_iters);
  if (st != LpStatus::Optimal) return {st, {}, 0.0};

  Vector std_x(total_cols, 0.0);
  for (std::size_t i = 0; i < n_rows; ++i)
    if (T.basis[i] < total_cols) std_x[T.basis[i]] = T.rhs(i);

  LpSolution sol;
  sol.status = LpStatus::Optimal;
  sol.x.assign(nv, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    const VarMap& v = vmap[j];
    double val = v.shift;
    if (v.pos >= 0) val += std_x[static_cast<std::size_t>(v.pos)];
    if (v.neg >= 0) val -= std_x[static_cast<std::size_t>(v.neg)];
    sol.x[j] = val;
  }
  sol.objective = dot(lp.objective, sol.x);
  return sol;
}

}  // namespace trackkit
