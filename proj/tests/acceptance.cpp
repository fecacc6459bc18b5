// Acceptance gate: one line per criterion, nonzero exit if any gating
// criterion fails. Tolerances are pinned here on purpose; do not loosen them
// to make a run pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "trackkit/backtest.hpp"
#include "trackkit/clustering.hpp"
#include "trackkit/cointegration.hpp"
#include "trackkit/data.hpp"
#include "trackkit/lp.hpp"
#include "trackkit/metrics.hpp"
#include "trackkit/model.hpp"
#include "trackkit/neural.hpp"
#include "trackkit/nnls.hpp"
#include "trackkit/qp.hpp"
#include "trackkit/rng.hpp"
#include "trackkit/tracking.hpp"
#include "trackkit/ttest.hpp"

using namespace trackkit;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void report(int id, const std::string& name, bool pass, double seconds,
            const std::string& detail = "") {
  std::printf("[%s] criterion %2d: %s (%.1f s)%s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              seconds, detail.empty() ? "" : " - ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

// ---------------------------------------------------------------------------
// criterion 1: sparse recovery on a planted 10-asset index
// ---------------------------------------------------------------------------

void criterion_1() {
  double t0 = now_seconds();
  const std::size_t n = 50, T_ret = 756, T_train = 504, K = 10;
  const std::vector<std::size_t> truth{2, 5, 9, 14, 20, 27, 33, 38, 44, 49};

  Rng rng(20240801);
  Vector w_true(n, 0.0);
  {
    double sum = 0.0;
    Vector raw(K);
    for (double& v : raw) {
      v = rng.uniform(0.5, 1.5);
      sum += v;
    }
    for (std::size_t j = 0; j < K; ++j) w_true[truth[j]] = raw[j] / sum;
  }

  // log-price random walks; the log index is the planted combination plus
  // N(0, 1e-4 sd) observation noise
  Matrix logp(T_ret + 1, n);
  for (std::size_t j = 0; j < n; ++j) {
    double lvl = std::log(100.0);
    for (std::size_t t = 0; t <= T_ret; ++t) {
      logp(t, j) = lvl;
      lvl += 0.01 * rng.normal();
    }
  }
  Vector logi(T_ret + 1);
  for (std::size_t t = 0; t <= T_ret; ++t) {
    double s = 0.0;
    for (std::size_t j = 0; j < K; ++j) s += w_true[truth[j]] * logp(t, truth[j]);
    logi[t] = s + 1e-4 * rng.normal();
  }

  Matrix R(T_ret, n);
  Vector I(T_ret);
  for (std::size_t t = 0; t < T_ret; ++t) {
    for (std::size_t j = 0; j < n; ++j) R(t, j) = std::exp(logp(t + 1, j) - logp(t, j)) - 1.0;
    I[t] = std::exp(logi[t + 1] - logi[t]) - 1.0;
  }

  TrackingProblem train;
  train.R = Matrix(T_train, n);
  train.I.resize(T_train);
  for (std::size_t t = 0; t < T_train; ++t) {
    for (std::size_t j = 0; j < n; ++j) train.R(t, j) = R(t, j);
    train.I[t] = I[t];
  }
  train.K = K;
  train.lo.assign(n, 0.0);
  train.hi.assign(n, 1.0);

  Matrix logp_train(T_train + 1, n);
  Vector logi_train(T_train + 1);
  for (std::size_t t = 0; t <= T_train; ++t) {
    for (std::size_t j = 0; j < n; ++j) logp_train(t, j) = logp(t, j);
    logi_train[t] = logi[t];
  }

  SelectionStrategy strat = SelectionStrategy::exact();
  std::vector<std::pair<std::string, Portfolio>> fits;
  bool pass = true;
  std::string detail;
  try {
    fits.emplace_back("MSE", solve_mse(train, strat));
    fits.emplace_back("MAD", solve_mad(train, strat));
    Portfolio bench = estimate_benchmark_weights(train);
    fits.emplace_back("TEV", solve_tev(train, bench.weights, strat));
    fits.emplace_back("Cvx-CoInt", coint_convex(logp_train, logi_train, K, strat));
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }

  for (auto& [name, fit] : fits) {
    if (fit.support != truth) {
      pass = false;
      detail += name + ": support mismatch; ";
      continue;
    }
    double linf = 0.0;
    for (std::size_t j = 0; j < n; ++j) linf = std::max(linf, std::abs(fit.weights[j] - w_true[j]));
    if (linf > 1e-2) {
      pass = false;
      detail += name + ": weight error " + std::to_string(linf) + "; ";
    }
    Vector rp(T_ret - T_train), rb(T_ret - T_train);
    for (std::size_t t = T_train; t < T_ret; ++t) {
      double s = 0.0;
      for (std::size_t i : fit.support) s += fit.weights[i] * R(t, i);
      rp[t - T_train] = s;
      rb[t - T_train] = I[t];
    }
    double te = tracking_error(rp, rb);
    if (te > 2e-4) {
      pass = false;
      detail += name + ": oos te " + std::to_string(te) + "; ";
    }
  }
  double elapsed = now_seconds() - t0;
  if (elapsed >= 120.0) {
    pass = false;
    detail += "over the 120 s budget";
  }
  report(1, "planted-index support recovery (MSE, MAD, TEV, Cvx-CoInt)", pass, elapsed, detail);
}

// ---------------------------------------------------------------------------
// criterion 2: LP solver vs basic-solution enumeration
// ---------------------------------------------------------------------------

struct StackedRows {
  Matrix A;  // rows: ub rows then lo faces then hi faces
  Vector b;
};

StackedRows stack_constraints(const LinearProgram& lp) {
  const std::size_t n = lp.num_vars(), m = lp.ub_lhs.rows;
  StackedRows s{Matrix(m + 2 * n, n), Vector(m + 2 * n)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) s.A(i, j) = lp.ub_lhs(i, j);
    s.b[i] = lp.ub_rhs[i];
  }
  for (std::size_t j = 0; j < n; ++j) {
    s.A(m + j, j) = 1.0;
    s.b[m + j] = lp.lo[j];
    s.A(m + n + j, j) = 1.0;
    s.b[m + n + j] = lp.hi[j];
  }
  return s;
}

bool lp_vertex_oracle(const LinearProgram& lp, double& best) {
  const std::size_t n = lp.num_vars();
  StackedRows s = stack_constraints(lp);
  const std::size_t rows = s.A.rows;
  std::vector<std::size_t> pick(n);
  std::iota(pick.begin(), pick.end(), 0);
  bool found = false;
  while (true) {
    Matrix M(n, n);
    Vector rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) M(i, j) = s.A(pick[i], j);
      rhs[i] = s.b[pick[i]];
    }
    bool ok = true;
    Vector x;
    try {
      x = solve_linear(M, rhs);
    } catch (const SolverError&) {
      ok = false;
    }
    if (ok) {
      for (std::size_t j = 0; j < n && ok; ++j)
        if (x[j] < lp.lo[j] - 1e-9 || x[j] > lp.hi[j] + 1e-9) ok = false;
      for (std::size_t i = 0; i < lp.ub_lhs.rows && ok; ++i) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < n; ++j) lhs += lp.ub_lhs(i, j) * x[j];
        if (lhs > lp.ub_rhs[i] + 1e-9) ok = false;
      }
      if (ok) {
        double obj = dot(lp.objective, x);
        if (!found || obj < best) best = obj;
        found = true;
      }
    }
    std::size_t i = n;
    bool done = true;
    while (i-- > 0) {
      if (pick[i] != i + rows - n) {
        ++pick[i];
        for (std::size_t j = i + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
        done = false;
        break;
      }
      if (i == 0) break;
    }
    if (done) break;
  }
  return found;
}

void criterion_2() {
  double t0 = now_seconds();
  Rng rng(77001);
  bool pass = true;
  std::string detail;
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 2 + rng.uniform_int(5);  // 2..6
    std::size_t m = 1 + rng.uniform_int(6);  // 1..6
    LinearProgram lp = LinearProgram::with_vars(n);
    for (std::size_t j = 0; j < n; ++j) {
      lp.lo[j] = rng.uniform(-2.0, 0.0);
      lp.hi[j] = lp.lo[j] + rng.uniform(0.5, 3.0);
      lp.objective[j] = rng.uniform(-1.0, 1.0);
    }
    Vector x0(n);  // interior point guaranteeing feasibility
    for (std::size_t j = 0; j < n; ++j) x0[j] = 0.5 * (lp.lo[j] + lp.hi[j]);
    lp.ub_lhs = Matrix(m, n);
    lp.ub_rhs.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        lp.ub_lhs(i, j) = rng.uniform(-1.0, 1.0);
        lhs += lp.ub_lhs(i, j) * x0[j];
      }
      lp.ub_rhs[i] = lhs + rng.uniform(0.1, 1.0);
    }
    double oracle;
    if (!lp_vertex_oracle(lp, oracle)) continue;
    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal || std::abs(sol.objective - oracle) > 1e-8) {
      pass = false;
      detail = "trial " + std::to_string(trial) + " off by " +
               std::to_string(sol.objective - oracle);
      break;
    }
  }
  report(2, "simplex solver matches vertex enumeration on 100 programs", pass,
         now_seconds() - t0, detail);
}

// ---------------------------------------------------------------------------
// criterion 3: simplex QP vs a dense grid
// ---------------------------------------------------------------------------

void criterion_3() {
  double t0 = now_seconds();
  Rng rng(77002);
  bool pass = true;
  std::string detail;
  for (int trial = 0; trial < 50 && pass; ++trial) {
    Matrix B(3, 3);
    for (double& v : B.data) v = rng.uniform(-1.0, 1.0);
    QuadraticProgram qp;
    qp.Q = gram(B);
    qp.q.resize(3);
    for (double& v : qp.q) v = rng.uniform(-1.0, 1.0);
    qp.lo.assign(3, 0.0);
    qp.hi.assign(3, 1.0);
    QpResult r = solve_qp(qp);
    auto value = [&](const Vector& w) {
      Vector Qw = matvec(qp.Q, w);
      return 0.5 * dot(w, Qw) + dot(qp.q, w);
    };
    double grid_best = kInf;
    for (int a = 0; a <= 1000; ++a) {
      for (int b = 0; b + a <= 1000; ++b) {
        Vector w{a / 1000.0, b / 1000.0, 1.0 - (a + b) / 1000.0};
        grid_best = std::min(grid_best, value(w));
      }
    }
    if (value(r.w) > grid_best + 1e-5) {
      pass = false;
      detail = "trial " + std::to_string(trial) + " above grid optimum by " +
               std::to_string(value(r.w) - grid_best);
    }
  }
  double elapsed = now_seconds() - t0;
  if (elapsed >= 30.0) {
    pass = false;
    detail += " over the 30 s budget";
  }
  report(3, "projected-gradient QP within 1e-5 of a 1e-3 simplex grid", pass, elapsed, detail);
}

// ---------------------------------------------------------------------------
// criterion 4: nonnegative least squares vs support enumeration
// ---------------------------------------------------------------------------

double residual2(const Matrix& A, const Vector& b, const Vector& x) {
  Vector r = matvec(A, x);
  double s = 0.0;
  for (std::size_t i = 0; i < A.rows; ++i) s += (b[i] - r[i]) * (b[i] - r[i]);
  return s;
}

void criterion_4() {
  double t0 = now_seconds();
  Rng rng(77003);
  bool pass = true;
  std::string detail;
  for (int trial = 0; trial < 100 && pass; ++trial) {
    Matrix A(6, 3);
    for (double& v : A.data) v = rng.uniform(-1.0, 1.0);
    Vector b(6);
    for (double& v : b) v = rng.uniform(-1.0, 1.0);
    Vector x = nnls(A, b);
    double oracle = residual2(A, b, Vector(3, 0.0));
    for (std::size_t mask = 1; mask < 8; ++mask) {
      std::vector<std::size_t> idx;
      for (std::size_t j = 0; j < 3; ++j)
        if (mask & (1u << j)) idx.push_back(j);
      Matrix As(6, idx.size());
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t k = 0; k < idx.size(); ++k) As(i, k) = A(i, idx[k]);
      Vector xs;
      try {
        xs = ols(As, b);
      } catch (const SolverError&) {
        continue;
      }
      bool feasible = true;
      for (double v : xs)
        if (v < -1e-12) feasible = false;
      if (!feasible) continue;
      Vector full(3, 0.0);
      for (std::size_t k = 0; k < idx.size(); ++k) full[idx[k]] = xs[k];
      oracle = std::min(oracle, residual2(A, b, full));
    }
    if (std::abs(residual2(A, b, x) - oracle) > 1e-8) {
      pass = false;
      detail = "trial " + std::to_string(trial);
    }
  }
  report(4, "active-set NNLS matches sign-pattern enumeration on 100 systems", pass,
         now_seconds() - t0, detail);
}

// ---------------------------------------------------------------------------
// criterion 5: unit-root test size and power
// ---------------------------------------------------------------------------

void criterion_5() {
  double t0 = now_seconds();
  Rng rng(77004);
  int size_rejects = 0, power_rejects = 0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    Vector walk(500);
    double lvl = 0.0;
    for (double& v : walk) {
      lvl += rng.normal();
      v = lvl;
    }
    if (adf_test(walk).reject_unit_root) ++size_rejects;
    Vector noise(500);
    for (double& v : noise) v = rng.normal();
    if (adf_test(noise).reject_unit_root) ++power_rejects;
  }
  double size = static_cast<double>(size_rejects) / trials;
  double power = static_cast<double>(power_rejects) / trials;
  double elapsed = now_seconds() - t0;
  bool pass = size >= 0.03 && size <= 0.07 && power >= 0.99 && elapsed < 60.0;
  report(5, "unit-root test calibration (5% +/- 2pt size, >= 99% power)", pass, elapsed,
         "size " + std::to_string(size) + ", power " + std::to_string(power));
}

// ---------------------------------------------------------------------------
// criterion 6: analytic gradients vs central differences
// ---------------------------------------------------------------------------

int check_head_gradients(Mlp& net, const Vector& x,
                         const std::function<double(const Vector&)>& loss,
                         const std::function<Vector(const Vector&)>& dloss, Rng& rng) {
  std::vector<double*> params;
  for (Layer& l : net.layers) {
    for (double& v : l.W.data) params.push_back(&v);
    for (double& v : l.b) params.push_back(&v);
  }
  ForwardCache cache;
  Vector out = mlp_forward(net, x, &cache);
  Gradients grads(net);
  mlp_backward(net, cache, dloss(out), grads);
  std::vector<double> flat;
  for (const Layer& l : grads.g) {
    for (double v : l.W.data) flat.push_back(v);
    for (double v : l.b) flat.push_back(v);
  }
  int failures = 0;
  const double h = 1e-5;
  for (int probe = 0; probe < 10; ++probe) {
    std::size_t i = rng.uniform_int(params.size());
    double saved = *params[i];
    *params[i] = saved + h;
    double up = loss(mlp_forward(net, x));
    *params[i] = saved - h;
    double dn = loss(mlp_forward(net, x));
    *params[i] = saved;
    double fd = (up - dn) / (2.0 * h);
    double denom = std::max(1e-6, std::abs(fd) + std::abs(flat[i]));
    if (std::abs(fd - flat[i]) / denom >= 1e-4) ++failures;
  }
  return failures;
}

void criterion_6() {
  double t0 = now_seconds();
  int failures = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(9000 + seed);
    Vector x(4), y(3);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (double& v : y) v = rng.uniform(-1.0, 1.0);

    Mlp mse_net = make_mlp({4, 6, 3}, Head::Linear, rng);
    failures += check_head_gradients(
        mse_net, x,
        [&](const Vector& o) {
          double s = 0.0;
          for (std::size_t i = 0; i < 3; ++i) s += (o[i] - y[i]) * (o[i] - y[i]);
          return s;
        },
        [&](const Vector& o) {
          Vector d(3);
          for (std::size_t i = 0; i < 3; ++i) d[i] = 2.0 * (o[i] - y[i]);
          return d;
        },
        rng);

    Mlp soft_net = make_mlp({4, 5, 3}, Head::Softmax, rng);
    std::size_t label = rng.uniform_int(3);
    failures += check_head_gradients(
        soft_net, x,
        [&](const Vector& o) {
          double s = -std::log(std::max(o[label], 1e-300));
          for (double p : o) s += 0.5 * p * p;
          return s;
        },
        [&](const Vector& o) {
          Vector d(3);
          for (std::size_t i = 0; i < 3; ++i)
            d[i] = (i == label ? -1.0 / std::max(o[label], 1e-300) : 0.0) + o[i];
          return d;
        },
        rng);

    Mlp kl_net = make_mlp({4, 6, 4}, Head::Linear, rng);
    Vector target{0.1, -0.2};
    failures += check_head_gradients(
        kl_net, x,
        [&](const Vector& o) {
          Vector mu(o.begin(), o.begin() + 2), lv(o.begin() + 2, o.end());
          double s = gaussian_kl(mu, lv);
          for (std::size_t i = 0; i < 2; ++i) s += (mu[i] - target[i]) * (mu[i] - target[i]);
          return s;
        },
        [&](const Vector& o) {
          Vector d(4);
          for (std::size_t i = 0; i < 2; ++i) d[i] = o[i] + 2.0 * (o[i] - target[i]);
          for (std::size_t i = 0; i < 2; ++i) d[2 + i] = 0.5 * (std::exp(o[2 + i]) - 1.0);
          return d;
        },
        rng);
  }
  report(6, "neural loss heads match central differences (150 probes)", failures == 0,
         now_seconds() - t0, failures ? std::to_string(failures) + " probes off" : "");
}

// ---------------------------------------------------------------------------
// criterion 7: metric identities and hand values
// ---------------------------------------------------------------------------

void criterion_7() {
  double t0 = now_seconds();
  bool pass = true;
  auto expect = [&](bool cond) { pass = pass && cond; };
  Vector rb{0.01, -0.02, 0.005, 0.012};
  expect(tracking_error(rb, rb) == 0.0);
  Vector shifted = rb;
  for (double& v : shifted) v += 0.003;
  expect(std::abs(tracking_error(shifted, rb)) <= 1e-12);
  expect(std::abs(correlation(rb, rb) - 1.0) <= 1e-12);
  Vector neg = rb;
  for (double& v : neg) v = -v;
  expect(std::abs(correlation(neg, rb) + 1.0) <= 1e-12);

  expect(std::abs(tracking_error({0.01, -0.01}, {0.0, 0.0}) - std::sqrt(2.0) / 100.0) <= 1e-9);
  expect(std::abs(avg_drawdown({0.1, -0.5}) - 0.25) <= 1e-9);
  Vector sharpe_series{0.001 - 0.01, 0.001 + 0.01, 0.001};
  auto s = sharpe(sharpe_series, 0.0);
  expect(s.has_value() && std::abs(*s - 0.1) <= 1e-9);
  auto tr = turnover({{1.0, 0.0}, {0.0, 1.0}});
  expect(tr.has_value() && std::abs(*tr - 2.0) <= 1e-12);
  report(7, "performance metric identities and hand-worked values", pass, now_seconds() - t0);
}

// ---------------------------------------------------------------------------
// criterion 8: paired t-test distribution and antisymmetry
// ---------------------------------------------------------------------------

void criterion_8() {
  double t0 = now_seconds();
  bool pass = true;
  std::string detail;
  struct Row {
    double df, t, p;
  };
  const Row table[] = {
      {1, 0.5, 0.647583617650},    {1, 2.0, 0.852416382350},
      {2, -1.5, 0.136196562446},   {3, 3.873, 0.984767024199},
      {3, 0.0, 0.5},               {4, 1.0, 0.813049516850},
      {5, -2.3, 0.034886234666},   {7, 0.75, 0.761150045047},
      {8, 4.2, 0.998501743149},    {10, -0.1, 0.461160359282},
      {12, 1.782, 0.949975580132}, {15, -3.0, 0.004486368739},
      {20, 2.086, 0.975001822771}, {25, 0.33, 0.627925348470},
      {30, -1.697, 0.050024924603}, {40, 2.7, 0.994943160165},
      {60, -0.5, 0.309451979719},  {100, 1.984, 0.975001613102},
      {200, -2.601, 0.004994852905}, {500, 0.6745, 0.749847388567},
  };
  for (const Row& r : table) {
    if (std::abs(t_cdf(r.t, r.df) - r.p) > 1e-6) {
      pass = false;
      detail = "cdf off at df " + std::to_string(r.df);
    }
  }
  Rng rng(77005);
  std::vector<Vector> te(5, Vector(10));
  for (auto& v : te)
    for (double& x : v) x = rng.uniform(0.001, 0.01);
  TTestMatrix m = paired_t_matrix(te, {"a", "b", "c", "d", "e"});
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      if (std::abs(m.pvalues(i, j) + m.pvalues(j, i) - 1.0) > 1e-9) {
        pass = false;
        detail = "antisymmetry broken";
      }
  report(8, "t distribution vs frozen reference table, p(i,j)+p(j,i)=1", pass,
         now_seconds() - t0, detail);
}

// ---------------------------------------------------------------------------
// criterion 9: rolling window arithmetic
// ---------------------------------------------------------------------------

void criterion_9() {
  double t0 = now_seconds();
  RollingPlan plan = make_windows(2523, 504, 63, 63);
  bool pass = plan.windows.size() == 32;
  report(9, "make_windows(2523, 504, 63, 63) yields 32 windows", pass, now_seconds() - t0,
         "got " + std::to_string(plan.windows.size()));
}

// ---------------------------------------------------------------------------
// criterion 10: full catalogue backtest, feasibility and determinism
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_10() {
  double t0 = now_seconds();
  bool pass = true;
  std::string detail;
  fs::path root = fs::temp_directory_path() / "trackkit_acceptance_c10";
  fs::remove_all(root);
  fs::create_directories(root);

  {
    Rng rng(424242);
    const std::size_t n = 60, T = 801, K_true = 12;
    Vector price(n, 100.0);
    double index = 1000.0;
    std::ofstream out(root / "prices.csv");
    out << "date";
    for (std::size_t j = 0; j < n; ++j) out << ",A" << j;
    out << ",IDX\n";
    char date[16];
    for (std::size_t t = 0; t < T; ++t) {
      std::snprintf(date, sizeof(date), "2015-%04zu", t);
      out << date;
      double mix = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double r = 0.01 * rng.normal();
        if (j < K_true) mix += r / static_cast<double>(K_true);
        price[j] *= std::exp(r);
        out << "," << price[j];
      }
      index *= std::exp(mix + 1e-4 * rng.normal());
      out << "," << index << "\n";
    }
  }

  RunConfig cfg;
  cfg.data_path = (root / "prices.csv").string();
  cfg.in_len = 200;
  cfg.out_len = 100;
  cfg.step = 500;
  cfg.K = 12;
  cfg.seed = 123;
  for (const std::string& tag : all_model_tags()) {
    ModelSpec spec;
    spec.tag = tag;
    cfg.models.push_back(spec);
  }

  try {
    ResultStore store = run_backtest(cfg);
    if (store.plan.windows.size() != 2) {
      pass = false;
      detail += "expected 2 windows; ";
    }
    for (std::size_t mi = 0; mi < store.model_names.size(); ++mi) {
      for (std::size_t wi = 0; wi < store.plan.windows.size(); ++wi) {
        const SolveRecord& rec = store.grid[mi][wi];
        if (rec.failed) {
          pass = false;
          detail += store.model_names[mi] + " failed: " + rec.error + "; ";
          continue;
        }
        double sum = 0.0;
        for (double w : rec.portfolio.weights) {
          if (w < 0.0) {
            pass = false;
            detail += store.model_names[mi] + ": negative weight; ";
          }
          sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
          pass = false;
          detail += store.model_names[mi] + ": sum " + std::to_string(sum) + "; ";
        }
        if (rec.portfolio.support.size() > cfg.K) {
          pass = false;
          detail += store.model_names[mi] + ": cardinality; ";
        }
      }
    }
    emit_reports(store, (root / "out1").string());
    ResultStore rerun = run_backtest(cfg);
    emit_reports(rerun, (root / "out2").string());
    for (const char* f :
         {"metrics.csv", "per_window.csv", "pvalues.csv", "cumulative_returns.csv"}) {
      if (slurp(root / "out1" / f) != slurp(root / "out2" / f)) {
        pass = false;
        detail += std::string(f) + " not byte-identical; ";
      }
    }
  } catch (const std::exception& e) {
    pass = false;
    detail += e.what();
  }

  double elapsed = now_seconds() - t0;
  if (elapsed >= 1800.0) {
    pass = false;
    detail += "over the 30 min budget";
  }
  report(10, "29-model backtest: feasibility, determinism, runtime", pass, elapsed, detail);
  fs::remove_all(root);
}

// ---------------------------------------------------------------------------
// criterion 11: agglomeration vs naive recomputation
// ---------------------------------------------------------------------------

void criterion_11() {
  double t0 = now_seconds();
  Rng rng(77006);
  bool pass = true;
  for (int trial = 0; trial < 50 && pass; ++trial) {
    std::size_t n = 3 + rng.uniform_int(4);
    Matrix D(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        D(i, j) = rng.uniform(0.0, 2.0);
        D(j, i) = D(i, j);
      }
    std::size_t K = 1 + rng.uniform_int(n);
    ClusterAssignment got = hcluster_complete(D, K);

    // reference: rescan every pair from scratch each merge
    std::vector<std::vector<std::size_t>> cl(n);
    for (std::size_t i = 0; i < n; ++i) cl[i] = {i};
    Vector heights;
    while (cl.size() > K) {
      double best = kInf;
      std::size_t bi = 0, bj = 1;
      for (std::size_t i = 0; i < cl.size(); ++i)
        for (std::size_t j = i + 1; j < cl.size(); ++j) {
          double d = 0.0;
          for (std::size_t a : cl[i])
            for (std::size_t b : cl[j]) d = std::max(d, D(a, b));
          if (d < best - 1e-15) {
            best = d;
            bi = i;
            bj = j;
          }
        }
      heights.push_back(best);
      for (std::size_t b : cl[bj]) cl[bi].push_back(b);
      std::sort(cl[bi].begin(), cl[bi].end());
      cl.erase(cl.begin() + static_cast<std::ptrdiff_t>(bj));
      std::sort(cl.begin(), cl.end(),
                [](const auto& a, const auto& b) { return a[0] < b[0]; });
    }
    std::vector<std::size_t> labels(n);
    for (std::size_t c = 0; c < cl.size(); ++c)
      for (std::size_t i : cl[c]) labels[i] = c;

    if (labels != got.labels || heights.size() != got.merge_heights.size()) pass = false;
    for (std::size_t k = 0; pass && k < heights.size(); ++k)
      if (std::abs(heights[k] - got.merge_heights[k]) > 1e-12) pass = false;
  }
  report(11, "complete-linkage merges match naive recomputation on 50 instances", pass,
         now_seconds() - t0);
}

void criterion_12() {
  // Published tracking-error anchors (about 0.00142 for TEV and 0.00153 for
  // DNNF on proprietary market data) are informational context only; they
  // depend on data this suite does not ship and never gate a build.
  report(12, "external tracking-error anchors are informational only", true, 0.0);
}

}  // namespace

int main() {
  std::printf("trackkit acceptance gate\n");
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  criterion_12();
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
