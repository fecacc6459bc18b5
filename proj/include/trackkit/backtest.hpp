#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "trackkit/common.hpp"
#include "trackkit/data.hpp"
#include "trackkit/metrics.hpp"
#include "trackkit/model.hpp"
#include "trackkit/rng.hpp"
#include "trackkit/ttest.hpp"

namespace trackkit {

struct RunConfig {
  std::string data_path;
  std::string index_col;  // empty: last column
  std::size_t in_len = 504, out_len = 63, step = 63;
  std::size_t K = 45;
  std::vector<ModelSpec> models;
  std::string selection = "relax";  // exact | relax | swap
  std::size_t swap_sweeps = 2;
  std::uint64_t seed = 0;
  double rf = 0.0;
  std::string out_dir = "out";
  double time_budget = 0.0;  // seconds per solve; 0 disables
  std::size_t threads = 0;   // 0: hardware default

  SelectionStrategy strategy() const {
    if (selection == "exact") return SelectionStrategy::exact();
    if (selection == "relax") return SelectionStrategy::relax();
    if (selection == "swap") return SelectionStrategy::swap(swap_sweeps);
    throw ConfigError("unknown selection strategy '" + selection +
                      "'; expected exact, relax or swap");
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj,
                                const std::vector<std::string>& allowed,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const std::string& k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

inline ModelSpec parse_model_entry(const nlohmann::json& entry) {
  ModelSpec spec;
  if (entry.is_string()) {
    spec.tag = entry.get<std::string>();
  } else if (entry.is_object()) {
    if (!entry.contains("model")) throw ConfigError("model entry object needs a 'model' key");
    spec.tag = entry.at("model").get<std::string>();
    reject_unknown_keys(entry,
                        {"model", "tau", "alphas", "lambdas", "delta", "lambda2_grid", "iters",
                         "k", "u", "trees", "clusters", "epochs"},
                        "model entry '" + spec.tag + "'");
    if (entry.contains("tau")) spec.tau = entry.at("tau").get<double>();
    if (entry.contains("alphas")) spec.tmcvar.alphas = entry.at("alphas").get<Vector>();
    if (entry.contains("lambdas")) spec.tmcvar.lambdas = entry.at("lambdas").get<Vector>();
    if (entry.contains("delta")) spec.tmcvar.delta = entry.at("delta").get<double>();
    if (entry.contains("lambda2_grid"))
      spec.lambda2_grid = entry.at("lambda2_grid").get<Vector>();
    if (entry.contains("iters")) spec.coint_iters = entry.at("iters").get<std::size_t>();
    if (entry.contains("k")) spec.factor_k = entry.at("k").get<std::size_t>();
    if (entry.contains("u")) spec.svr_u = entry.at("u").get<double>();
    if (entry.contains("trees")) spec.rf_trees = entry.at("trees").get<std::size_t>();
    if (entry.contains("clusters"))
      spec.clust2_clusters = entry.at("clusters").get<std::size_t>();
    if (entry.contains("epochs")) spec.epochs = entry.at("epochs").get<std::size_t>();
  } else {
    throw ConfigError("model entries must be tag strings or parameter objects");
  }
  if (!is_known_model(spec.tag)) {
    std::string valid;
    for (const std::string& t : all_model_tags()) valid += (valid.empty() ? "" : ", ") + t;
    throw ConfigError("unknown model '" + spec.tag + "'; valid tags: " + valid);
  }
  return spec;
}

}  // namespace detail

inline RunConfig parse_config_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  detail::reject_unknown_keys(
      j,
      {"data", "index_col", "in_len", "out_len", "step", "K", "models", "selection",
       "swap_sweeps", "seed", "rf", "out", "time_budget", "threads"},
      "config");
  RunConfig cfg;
  if (!j.contains("data")) throw ConfigError("config needs a 'data' path");
  cfg.data_path = j.at("data").get<std::string>();
  if (j.contains("index_col")) cfg.index_col = j.at("index_col").get<std::string>();
  if (j.contains("in_len")) cfg.in_len = j.at("in_len").get<std::size_t>();
  if (j.contains("out_len")) cfg.out_len = j.at("out_len").get<std::size_t>();
  if (j.contains("step")) cfg.step = j.at("step").get<std::size_t>();
  if (j.contains("K")) cfg.K = j.at("K").get<std::size_t>();
  if (j.contains("selection")) cfg.selection = j.at("selection").get<std::string>();
  if (j.contains("swap_sweeps")) cfg.swap_sweeps = j.at("swap_sweeps").get<std::size_t>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("rf")) cfg.rf = j.at("rf").get<double>();
  if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
  if (j.contains("time_budget")) cfg.time_budget = j.at("time_budget").get<double>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<std::size_t>();
  if (!j.contains("models") || !j.at("models").is_array() || j.at("models").empty())
    throw ConfigError("config needs a non-empty 'models' array");
  for (const auto& entry : j.at("models")) cfg.models.push_back(detail::parse_model_entry(entry));
  if (cfg.K == 0) throw ConfigError("K must be positive");
  if (cfg.in_len < 2 || cfg.out_len < 2) throw ConfigError("window lengths must be at least 2");
  cfg.strategy();  // validates the tag
  return cfg;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config JSON parse failure: ") + e.what());
  }
  try {
    return parse_config_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config value error: ") + e.what());
  }
}

// Canonical echo of the effective configuration (defaults filled in).
inline nlohmann::ordered_json config_echo(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["data"] = cfg.data_path;
  j["index_col"] = cfg.index_col;
  j["in_len"] = cfg.in_len;
  j["out_len"] = cfg.out_len;
  j["step"] = cfg.step;
  j["K"] = cfg.K;
  j["selection"] = cfg.selection;
  j["swap_sweeps"] = cfg.swap_sweeps;
  j["seed"] = cfg.seed;
  j["rf"] = cfg.rf;
  j["out"] = cfg.out_dir;
  j["time_budget"] = cfg.time_budget;
  j["threads"] = cfg.threads;
  nlohmann::ordered_json models = nlohmann::ordered_json::array();
  for (const ModelSpec& m : cfg.models) {
    nlohmann::ordered_json e;
    e["model"] = m.tag;
    if (m.tag == "QR") e["tau"] = m.tau;
    if (m.tag == "TMCVaR") {
      e["alphas"] = m.tmcvar.alphas;
      e["lambdas"] = m.tmcvar.tail_lambdas();
      e["delta"] = m.tmcvar.delta;
    }
    if (m.tag == "NNEN") e["lambda2_grid"] = m.lambda2_grid;
    if (m.tag == "Coint-Sim") e["iters"] = m.coint_iters;
    if (m.tag == "FBM") e["k"] = m.factor_k;
    if (m.tag == "eps-SVR" || m.tag == "nu-SVR") e["u"] = m.svr_u;
    if (m.tag == "RF-Clust" || m.tag == "RF-Reg") e["trees"] = m.rf_trees;
    if (m.tag == "Clust2") e["clusters"] = m.clust2_clusters;
    if (m.epochs) e["epochs"] = m.epochs;
    models.push_back(std::move(e));
  }
  j["models"] = std::move(models);
  return j;
}

struct SolveRecord {
  Portfolio portfolio;
  Vector test_returns;
  std::optional<MetricReport> metrics;
  double wall_seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct ResultStore {
  RunConfig cfg;
  std::vector<std::string> model_names;
  RollingPlan plan;
  std::vector<std::string> dates;               // dates of the return rows
  Vector index_returns;                         // full return-row series
  std::vector<std::vector<SolveRecord>> grid;   // [model][window]
  TTestMatrix ttests;
  std::vector<std::string> ttest_excluded;      // models with failed windows
  double total_wall_seconds = 0.0;
};

namespace detail {

inline void validate_portfolio(const Portfolio& p, std::size_t K, const std::string& model) {
  double sum = 0.0;
  for (double w : p.weights) {
    if (w < 0.0) throw SolverError(model + ": negative weight emitted");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw SolverError(model + ": weights do not sum to 1");
  if (p.support.size() > K && p.note != "degenerate-K")
    throw SolverError(model + ": cardinality bound violated");
}

}  // namespace detail

inline ResultStore run_backtest(const RunConfig& cfg) {
  PricePanel panel = filter_complete_assets(load_prices(cfg.data_path, cfg.index_col));
  ReturnPanel returns = compute_returns(panel);
  RollingPlan plan = make_windows(returns.T(), cfg.in_len, cfg.out_len, cfg.step);

  const std::size_t M = cfg.models.size(), W = plan.windows.size();
  ResultStore store;
  store.cfg = cfg;
  store.plan = plan;
  store.dates = returns.dates;
  store.index_returns = returns.index_returns;
  for (const ModelSpec& m : cfg.models) store.model_names.push_back(m.tag);
  store.grid.assign(M, std::vector<SolveRecord>(W));

  // Log prices aligned so row t matches return row t's starting price; each
  // training window uses price rows [train_start, train_end].
  Matrix log_prices(panel.T(), panel.n());
  Vector log_index(panel.T());
  for (std::size_t t = 0; t < panel.T(); ++t) {
    for (std::size_t j = 0; j < panel.n(); ++j) log_prices(t, j) = std::log(panel.prices(t, j));
    log_index[t] = std::log(panel.index_prices[t]);
  }

  SelectionStrategy strategy = cfg.strategy();
  Rng root(cfg.seed);

  auto run_one = [&](std::size_t mi, std::size_t wi) {
    SolveRecord& rec = store.grid[mi][wi];
    const WindowRange& win = plan.windows[wi];
    auto t0 = std::chrono::steady_clock::now();
    try {
      WindowData wd;
      wd.p.R = Matrix(cfg.in_len, returns.n());
      wd.p.I.resize(cfg.in_len);
      for (std::size_t t = 0; t < cfg.in_len; ++t) {
        for (std::size_t j = 0; j < returns.n(); ++j)
          wd.p.R(t, j) = returns.returns(win.train_start + t, j);
        wd.p.I[t] = returns.index_returns[win.train_start + t];
      }
      wd.p.K = cfg.K;
      wd.p.lo.assign(returns.n(), 0.0);
      wd.p.hi.assign(returns.n(), 1.0);
      wd.log_prices = Matrix(cfg.in_len + 1, returns.n());
      wd.log_index.resize(cfg.in_len + 1);
      for (std::size_t t = 0; t <= cfg.in_len; ++t) {
        for (std::size_t j = 0; j < returns.n(); ++j)
          wd.log_prices(t, j) = log_prices(win.train_start + t, j);
        wd.log_index[t] = log_index[win.train_start + t];
      }

      std::uint64_t task_seed = root.split(mi, wi).next_u64();
      Deadline deadline(cfg.time_budget);
      rec.portfolio = solve_model(cfg.models[mi], wd, strategy, task_seed, deadline);
      detail::validate_portfolio(rec.portfolio, cfg.K, cfg.models[mi].tag);

      rec.test_returns.resize(cfg.out_len);
      Vector rb(cfg.out_len);
      for (std::size_t t = 0; t < cfg.out_len; ++t) {
        double rp = 0.0;
        for (std::size_t i : rec.portfolio.support)
          rp += rec.portfolio.weights[i] * returns.returns(win.test_start + t, i);
        rec.test_returns[t] = rp;
        rb[t] = returns.index_returns[win.test_start + t];
      }
      rec.metrics = compute_metrics(rec.test_returns, rb, cfg.rf);
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const std::size_t tasks = M * W;
  std::size_t n_threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  if (n_threads == 0) n_threads = 1;
  n_threads = std::min(n_threads, tasks);
  auto wall0 = std::chrono::steady_clock::now();
  if (n_threads <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) run_one(t / W, t % W);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) {
      pool.emplace_back([&] {
        for (std::size_t t = next.fetch_add(1); t < tasks; t = next.fetch_add(1))
          run_one(t / W, t % W);
      });
    }
    for (std::thread& th : pool) th.join();
  }
  store.total_wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

  // Paired t-tests on per-window TE, over models with a full set of windows.
  std::vector<Vector> te_rows;
  std::vector<std::string> te_names;
  for (std::size_t mi = 0; mi < M; ++mi) {
    Vector te(W);
    bool complete = true;
    for (std::size_t wi = 0; wi < W; ++wi) {
      if (store.grid[mi][wi].failed || !store.grid[mi][wi].metrics) {
        complete = false;
        break;
      }
      te[wi] = store.grid[mi][wi].metrics->te;
    }
    if (complete) {
      te_rows.push_back(std::move(te));
      te_names.push_back(store.model_names[mi]);
    } else {
      store.ttest_excluded.push_back(store.model_names[mi]);
    }
  }
  if (te_rows.size() >= 1 && W >= 2) store.ttests = paired_t_matrix(te_rows, te_names);
  return store;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

// Averages a per-window metric, skipping windows where it is undefined.
inline std::optional<double> window_avg(const std::vector<SolveRecord>& row,
                                        const std::function<std::optional<double>(
                                            const MetricReport&)>& pick) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const SolveRecord& rec : row) {
    if (rec.failed || !rec.metrics) continue;
    std::optional<double> v = pick(*rec.metrics);
    if (!v) continue;
    sum += *v;
    ++count;
  }
  if (!count) return std::nullopt;
  return sum / static_cast<double>(count);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

inline void emit_reports(const ResultStore& store, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::size_t M = store.model_names.size();
  const std::size_t W = store.plan.windows.size();

  const char* metric_cols =
      "te,correlation,avg_return,min_return,max_return,volatility,avg_drawdown,"
      "sharpe,sortino,treynor,information_ratio";

  // metrics.csv: one window-averaged row and one concatenated-series row per
  // model, plus the aggregate weight/time columns.
  {
    std::ofstream out(fs::path(dir) / "metrics.csv");
    out << "model,scope," << metric_cols << ",turnover,n_assets,failed_windows\n";
    for (std::size_t mi = 0; mi < M; ++mi) {
      const auto& row = store.grid[mi];
      std::size_t failed = 0;
      double support_sum = 0.0;
      std::size_t ok_count = 0;
      std::vector<Vector> weight_seq;
      Vector rp_cat, rb_cat;
      for (std::size_t wi = 0; wi < W; ++wi) {
        const SolveRecord& rec = row[wi];
        if (rec.failed || !rec.metrics) {
          ++failed;
          continue;
        }
        ++ok_count;
        support_sum += static_cast<double>(rec.portfolio.support.size());
        weight_seq.push_back(rec.portfolio.weights);
        const WindowRange& win = store.plan.windows[wi];
        for (std::size_t t = 0; t < rec.test_returns.size(); ++t) {
          rp_cat.push_back(rec.test_returns[t]);
          rb_cat.push_back(store.index_returns[win.test_start + t]);
        }
      }
      std::optional<double> tr = turnover(weight_seq);
      std::string tail = "," + detail::fmt_opt(tr) + "," +
                         (ok_count ? detail::fmt(support_sum / static_cast<double>(ok_count))
                                   : std::string()) +
                         "," + std::to_string(failed);

      auto pick_row = [&](auto pick) { return detail::fmt_opt(detail::window_avg(row, pick)); };
      out << store.model_names[mi] << ",window_avg";
      out << "," << pick_row([](const MetricReport& m) { return std::optional<double>(m.te); });
      out << ","
          << pick_row([](const MetricReport& m) { return std::optional<double>(m.correlation); });
      out << ","
          << pick_row([](const MetricReport& m) { return std::optional<double>(m.avg_return); });
      out << ","
          << pick_row([](const MetricReport& m) { return std::optional<double>(m.min_return); });
      out << ","
          << pick_row([](const MetricReport& m) { return std::optional<double>(m.max_return); });
      out << ","
          << pick_row([](const MetricReport& m) { return std::optional<double>(m.volatility); });
      out << ","
          << pick_row(
                 [](const MetricReport& m) { return std::optional<double>(m.avg_drawdown); });
      out << "," << pick_row([](const MetricReport& m) { return m.sharpe; });
      out << "," << pick_row([](const MetricReport& m) { return m.sortino; });
      out << "," << pick_row([](const MetricReport& m) { return m.treynor; });
      out << "," << pick_row([](const MetricReport& m) { return m.information_ratio; });
      out << tail << "\n";

      out << store.model_names[mi] << ",concatenated";
      if (rp_cat.size() >= 2) {
        MetricReport m = compute_metrics(rp_cat, rb_cat, store.cfg.rf);
        out << "," << detail::fmt(m.te) << "," << detail::fmt(m.correlation) << ","
            << detail::fmt(m.avg_return) << "," << detail::fmt(m.min_return) << ","
            << detail::fmt(m.max_return) << "," << detail::fmt(m.volatility) << ","
            << detail::fmt(m.avg_drawdown) << "," << detail::fmt_opt(m.sharpe) << ","
            << detail::fmt_opt(m.sortino) << "," << detail::fmt_opt(m.treynor) << ","
            << detail::fmt_opt(m.information_ratio);
      } else {
        out << ",,,,,,,,,,,";
      }
      out << tail << "\n";
    }
  }

  // per_window.csv
  {
    std::ofstream out(fs::path(dir) / "per_window.csv");
    out << "model,window," << metric_cols << ",n_assets,objective,note,error\n";
    for (std::size_t mi = 0; mi < M; ++mi) {
      for (std::size_t wi = 0; wi < W; ++wi) {
        const SolveRecord& rec = store.grid[mi][wi];
        out << store.model_names[mi] << "," << wi;
        if (rec.metrics) {
          const MetricReport& m = *rec.metrics;
          out << "," << detail::fmt(m.te) << "," << detail::fmt(m.correlation) << ","
              << detail::fmt(m.avg_return) << "," << detail::fmt(m.min_return) << ","
              << detail::fmt(m.max_return) << "," << detail::fmt(m.volatility) << ","
              << detail::fmt(m.avg_drawdown) << "," << detail::fmt_opt(m.sharpe) << ","
              << detail::fmt_opt(m.sortino) << "," << detail::fmt_opt(m.treynor) << ","
              << detail::fmt_opt(m.information_ratio) << ","
              << rec.portfolio.support.size() << "," << detail::fmt(rec.portfolio.objective);
        } else {
          out << ",,,,,,,,,,,,,";
        }
        out << "," << rec.portfolio.note << "," << rec.error << "\n";
      }
    }
  }

  // pvalues.csv
  {
    std::ofstream out(fs::path(dir) / "pvalues.csv");
    out << "model";
    for (const std::string& name : store.ttests.models) out << "," << name;
    out << "\n";
    for (std::size_t i = 0; i < store.ttests.models.size(); ++i) {
      out << store.ttests.models[i];
      for (std::size_t j = 0; j < store.ttests.models.size(); ++j)
        out << "," << detail::fmt(store.ttests.pvalues(i, j));
      out << "\n";
    }
  }

  // cumulative_returns.csv over the concatenated test horizon
  {
    std::ofstream out(fs::path(dir) / "cumulative_returns.csv");
    out << "date,index";
    for (const std::string& name : store.model_names) out << "," << name;
    out << "\n";
    Vector wealth(M + 1, 1.0);
    for (std::size_t wi = 0; wi < W; ++wi) {
      const WindowRange& win = store.plan.windows[wi];
      for (std::size_t t = win.test_start; t < win.test_end; ++t) {
        wealth[0] *= 1.0 + store.index_returns[t];
        out << store.dates[t] << "," << detail::fmt(wealth[0]);
        for (std::size_t mi = 0; mi < M; ++mi) {
          const SolveRecord& rec = store.grid[mi][wi];
          if (rec.failed || rec.test_returns.size() != win.test_end - win.test_start) {
            out << ",";
            continue;
          }
          wealth[mi + 1] *= 1.0 + rec.test_returns[t - win.test_start];
          out << "," << detail::fmt(wealth[mi + 1]);
        }
        out << "\n";
      }
    }
  }

  // manifest.json
  {
    nlohmann::ordered_json manifest;
    nlohmann::ordered_json cfg_echo = config_echo(store.cfg);
    manifest["tool"] = "trackkit";
    manifest["version"] = "1.0.0";
    manifest["config"] = cfg_echo;
    manifest["config_hash"] = detail::fnv1a(cfg_echo.dump());
    manifest["seed"] = store.cfg.seed;
    manifest["windows"] = W;
    manifest["models"] = store.model_names;
    manifest["total_wall_seconds"] = store.total_wall_seconds;
    nlohmann::ordered_json times;
    for (std::size_t mi = 0; mi < M; ++mi) {
      double s = 0.0;
      for (std::size_t wi = 0; wi < W; ++wi) s += store.grid[mi][wi].wall_seconds;
      times[store.model_names[mi]] = s;
    }
    manifest["solve_seconds"] = std::move(times);
    manifest["ttest_excluded"] = store.ttest_excluded;
    nlohmann::ordered_json errors = nlohmann::ordered_json::array();
    for (std::size_t mi = 0; mi < M; ++mi)
      for (std::size_t wi = 0; wi < W; ++wi)
        if (store.grid[mi][wi].failed) {
          nlohmann::ordered_json e;
          e["model"] = store.model_names[mi];
          e["window"] = wi;
          e["error"] = store.grid[mi][wi].error;
          errors.push_back(std::move(e));
        }
    manifest["failures"] = std::move(errors);
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
  }
}

}  // namespace trackkit
