#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/lp.hpp"
#include "trackkit/matrix.hpp"
#include "trackkit/portfolio.hpp"
#include "trackkit/qp.hpp"

namespace trackkit {

struct SvrParams {
  double C1 = 1.0;
  double C2 = 1.0;     // tolerance weight, nu variant only
  double eps = 0.01;   // fixed tolerance (eps variant), initial value (nu)
  double u = 1.0;      // per-asset cap
  std::size_t K = 0;
};

enum class SvrVariant { Eps, Nu };

namespace detail {

inline double svr_objective(const Matrix& R, const Vector& I, const Vector& w, double eps,
                            double C1, double C2, bool nu) {
  double obj = 0.5 * dot(w, w);
  Vector rw = matvec(R, w);
  for (std::size_t t = 0; t < R.rows; ++t) {
    double up = std::max(0.0, rw[t] - I[t] - eps);
    double dn = std::max(0.0, I[t] - rw[t] - eps);
    obj += C1 * (up * up + dn * dn);
  }
  if (nu) obj += C2 * eps;
  return obj;
}

// Keep the K largest entries, clip to [0,u], renormalize; iterate to a fixed
// point, then a final exact projection onto the capped simplex of the kept
// support.
inline Vector svr_sparse_project(Vector v, std::size_t K, double u) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(v[a]) > std::abs(v[b]); });
  std::vector<std::size_t> keep(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(
                                                               std::min(K, n)));
  std::sort(keep.begin(), keep.end());
  Vector s(keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) s[j] = v[keep[j]];
  for (int round = 0; round < 10; ++round) {
    double sum = 0.0;
    bool clipped = false;
    for (double& x : s) {
      double c = std::clamp(x, 0.0, u);
      if (c != x) clipped = true;
      x = c;
      sum += c;
    }
    if (sum <= 0.0) {
      s.assign(s.size(), 1.0 / static_cast<double>(s.size()));
      break;
    }
    bool renormed = std::abs(sum - 1.0) > 1e-14;
    for (double& x : s) x /= sum;
    if (!clipped && !renormed) break;
  }
  // exact feasibility on the kept support
  s = project_simplex(s, Vector(s.size(), 0.0), Vector(s.size(), u));
  Vector out(n, 0.0);
  for (std::size_t j = 0; j < keep.size(); ++j) out[keep[j]] = s[j];
  return out;
}

// Exact nonnegative minimizer of the piecewise-quadratic eps subproblem: the
// derivative is monotone, so bisect it.
inline double svr_eps_update(const Vector& dev, double C1, double C2) {
  auto deriv = [&](double e) {
    double d = C2;
    for (double a : dev) {
      d -= 2.0 * C1 * std::max(0.0, a - e);
      d -= 2.0 * C1 * std::max(0.0, -a - e);
    }
    return d;
  };
  if (deriv(0.0) >= 0.0) return 0.0;
  double lo = 0.0, hi = 0.0;
  for (double a : dev) hi = std::max(hi, std::abs(a));
  if (hi <= 0.0) return 0.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (deriv(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Proximal alternating scheme: gradient step in w, sparse projection, and for
// the nu variant an exact eps refresh. Steps that fail to decrease the
// objective are retried with a shorter step.
inline Portfolio palm_svr(const TrackingProblem& p, SvrParams params, SvrVariant variant,
                          std::uint64_t seed = 0) {
  (void)seed;  // the scheme is deterministic; seed kept for interface parity
  const std::size_t T = p.T(), n = p.n();
  std::size_t K = params.K ? params.K : p.K;
  K = std::min(K, n);
  if (params.C1 <= 0.0) throw ConfigError("palm_svr: C1 must be positive");
  if (params.u <= 0.0 || params.u > 1.0) throw ConfigError("palm_svr: u must be in (0,1]");
  if (params.u * static_cast<double>(K) < 1.0 - 1e-12)
    throw ConfigError("palm_svr: cap u and cardinality K cannot reach full investment");
  const bool nu = variant == SvrVariant::Nu;

  Vector w = detail::svr_sparse_project(Vector(n, 1.0 / static_cast<double>(n)), K, params.u);
  double eps = nu ? 0.0 : params.eps;
  if (nu) {
    Vector rw = matvec(p.R, w);
    Vector dev(T);
    for (std::size_t t = 0; t < T; ++t) dev[t] = rw[t] - p.I[t];
    eps = detail::svr_eps_update(dev, params.C1, params.C2);
  }
  double obj = detail::svr_objective(p.R, p.I, w, eps, params.C1, params.C2, nu);

  // Lipschitz-style step bound for the smooth part
  double g2 = 0.0;
  for (double v : p.R.data) g2 += v * v;
  double step0 = 1.0 / (1.0 + 4.0 * params.C1 * g2 / 1.0);

  for (int it = 0; it < 5000; ++it) {
    Vector rw = matvec(p.R, w);
    Vector grad = w;  // d/dw of the ridge term
    for (std::size_t t = 0; t < T; ++t) {
      double up = std::max(0.0, rw[t] - p.I[t] - eps);
      double dn = std::max(0.0, p.I[t] - rw[t] - eps);
      if (up > 0.0 || dn > 0.0) {
        double c = 2.0 * params.C1 * (up - dn);
        for (std::size_t j = 0; j < n; ++j) grad[j] += c * p.R(t, j);
      }
    }
    double step = step0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      Vector cand(n);
      for (std::size_t j = 0; j < n; ++j) cand[j] = w[j] - step * grad[j];
      cand = detail::svr_sparse_project(std::move(cand), K, params.u);
      double cand_eps = eps;
      if (nu) {
        Vector crw = matvec(p.R, cand);
        Vector dev(T);
        for (std::size_t t = 0; t < T; ++t) dev[t] = crw[t] - p.I[t];
        cand_eps = detail::svr_eps_update(dev, params.C1, params.C2);
      }
      double cand_obj =
          detail::svr_objective(p.R, p.I, cand, cand_eps, params.C1, params.C2, nu);
      if (cand_obj <= obj) {
        double gain = obj - cand_obj;
        w = std::move(cand);
        eps = cand_eps;
        obj = cand_obj;
        accepted = true;
        if (gain < 1e-9) it = 5000;  // converged
        break;
      }
      step *= 0.25;
    }
    if (!accepted) break;
  }
  std::string tag = nu ? "nu-SVR" : "eps-SVR";
  return finalize_portfolio(w, obj, tag);
}

// Table-style hyper-parameter sweep scored by in-sample tracking error
// (sample sd of the active return).
inline Portfolio svr_track(const TrackingProblem& p, SvrVariant variant, double u = 1.0,
                           std::uint64_t seed = 0) {
  const Vector c1_grid{0.1, 1.0, 10.0, 50.0};
  const Vector eps_grid{0.001, 0.005, 0.01, 0.05};
  Portfolio best;
  double best_te = kInf;
  auto score = [&](const Portfolio& cand) {
    Vector rw = p.portfolio_returns(cand.weights);
    Vector d(p.T());
    for (std::size_t t = 0; t < p.T(); ++t) d[t] = rw[t] - p.I[t];
    return sample_sd(d);
  };
  for (double c1 : c1_grid) {
    if (variant == SvrVariant::Eps) {
      for (double e : eps_grid) {
        SvrParams params;
        params.C1 = c1;
        params.eps = e;
        params.u = u;
        Portfolio cand = palm_svr(p, params, variant, seed);
        double te = score(cand);
        if (te < best_te - 1e-15) {
          best_te = te;
          best = std::move(cand);
        }
      }
    } else {
      SvrParams params;
      params.C1 = c1;
      params.C2 = 1.0;
      params.u = u;
      Portfolio cand = palm_svr(p, params, variant, seed);
      double te = score(cand);
      if (te < best_te - 1e-15) {
        best_te = te;
        best = std::move(cand);
      }
    }
  }
  return best;
}

}  // namespace trackkit
