#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/matrix.hpp"

namespace trackkit {

// min 0.5 w'Qw + q.w  over  {w : sum w = 1, lo <= w <= hi}
struct QuadraticProgram {
  Matrix Q;  // symmetric PSD
  Vector q;
  Vector lo, hi;

  std::size_t num_vars() const { return q.size(); }

  static QuadraticProgram on_simplex(Matrix Q, Vector q) {
    QuadraticProgram qp;
    qp.q = std::move(q);
    qp.Q = std::move(Q);
    qp.lo.assign(qp.q.size(), 0.0);
    qp.hi.assign(qp.q.size(), 1.0);
    return qp;
  }
};

// Euclidean projection onto {w : sum w = 1, lo <= w <= hi}, computed by
// bisection on the dual shift theta in w_i = clamp(v_i - theta, lo_i, hi_i).
inline Vector project_simplex(const Vector& v, const Vector& lo, const Vector& hi) {
  const std::size_t n = v.size();
  double lo_sum = 0.0, hi_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (lo[i] > hi[i]) throw SolverError("project_simplex: empty box");
    lo_sum += lo[i];
    hi_sum += hi[i];
  }
  if (lo_sum > 1.0 + 1e-9 || hi_sum < 1.0 - 1e-9)
    throw SolverError("project_simplex: box incompatible with the simplex");

  auto eval = [&](double theta, Vector& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = std::clamp(v[i] - theta, lo[i], hi[i]);
      s += w[i];
    }
    return s - 1.0;
  };

  double a = -1.0, b = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    a = std::min(a, v[i] - hi[i]);
    b = std::max(b, v[i] - lo[i]);
  }
  Vector w(n);
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    double mid = 0.5 * (a + b);
    if (eval(mid, w) > 0.0)
      a = mid;
    else
      b = mid;
  }
  double resid = eval(0.5 * (a + b), w) ;
  // Spread any leftover mass over the coordinates that are strictly inside
  // their box, so the budget holds to machine precision.
  std::vector<std::size_t> free_ix;
  for (std::size_t i = 0; i < n; ++i)
    if (w[i] > lo[i] + 1e-12 && w[i] < hi[i] - 1e-12) free_ix.push_back(i);
  if (!free_ix.empty()) {
    double adj = resid / static_cast<double>(free_ix.size());
    for (std::size_t i : free_ix) w[i] -= adj;
  }
  return w;
}

inline Vector project_simplex(const Vector& v) {
  Vector lo(v.size(), 0.0), hi(v.size(), 1.0);
  return project_simplex(v, lo, hi);
}

struct QpResult {
  Vector w;
  double objective = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

// Projected gradient with Barzilai-Borwein steps and a non-monotone
// (max-of-recent) acceptance rule. Terminates when the unit-step projected
// gradient norm drops below tol.
inline QpResult solve_qp(const QuadraticProgram& qp, double tol = 1e-9,
                         std::size_t max_iters = 100000) {
  const std::size_t n = qp.num_vars();
  auto objective = [&](const Vector& w) {
    Vector Qw = matvec(qp.Q, w);
    return 0.5 * dot(w, Qw) + dot(qp.q, w);
  };
  auto gradient = [&](const Vector& w) {
    Vector g = matvec(qp.Q, w);
    for (std::size_t i = 0; i < n; ++i) g[i] += qp.q[i];
    return g;
  };

  Vector w = project_simplex(Vector(n, 1.0 / static_cast<double>(n)), qp.lo, qp.hi);
  Vector g = gradient(w);
  double f = objective(w);
  std::deque<double> recent{f};
  const std::size_t memory = 10;
  double step = 1.0;

  QpResult res;
  for (std::size_t it = 0; it < max_iters; ++it) {
    // stationarity check with unit step
    Vector probe(n);
    for (std::size_t i = 0; i < n; ++i) probe[i] = w[i] - g[i];
    Vector proj = project_simplex(probe, qp.lo, qp.hi);
    double pg = 0.0;
    for (std::size_t i = 0; i < n; ++i) pg += (proj[i] - w[i]) * (proj[i] - w[i]);
    pg = std::sqrt(pg);
    if (pg <= tol) {
      res.converged = true;
      res.iterations = it;
      break;
    }

    double f_ref = *std::max_element(recent.begin(), recent.end());
    double s = std::clamp(step, 1e-12, 1e12);
    Vector w_new(n), g_new;
    double f_new = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < n; ++i) probe[i] = w[i] - s * g[i];
      w_new = project_simplex(probe, qp.lo, qp.hi);
      f_new = objective(w_new);
      double dist2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) dist2 += (w_new[i] - w[i]) * (w_new[i] - w[i]);
      if (f_new <= f_ref - 1e-8 * dist2 / std::max(s, 1e-12)) {
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) {
      res.iterations = it;
      break;  // step collapsed; current point is as good as it gets
    }

    g_new = gradient(w_new);
    double dw_dw = 0.0, dw_dg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dw = w_new[i] - w[i];
      double dg = g_new[i] - g[i];
      dw_dw += dw * dw;
      dw_dg += dw * dg;
    }
    step = (dw_dg > 1e-16) ? dw_dw / dw_dg : 1.0;

    w = std::move(w_new);
    g = std::move(g_new);
    f = f_new;
    recent.push_back(f);
    if (recent.size() > memory) recent.pop_front();
    res.iterations = it + 1;
  }

  res.w = std::move(w);
  res.objective = objective(res.w);
  return res;
}

}  // namespace trackkit
