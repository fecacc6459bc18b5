#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "catch2/catch_amalgamated.hpp"
#include "trackkit/backtest.hpp"
#include "trackkit/rng.hpp"

using namespace trackkit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& s) {
  std::size_t c = 0;
  for (char ch : s)
    if (ch == '\n') ++c;
  return c;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

struct TempTree {
  fs::path root;
  TempTree() {
    root = fs::temp_directory_path() /
           ("trackkit_bt_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(root);
  }
  ~TempTree() { fs::remove_all(root); }
};

// Random-walk price panel with the index driven by two of the assets.
std::string write_prices(const fs::path& path, std::size_t T, std::size_t n,
                         std::uint64_t seed) {
  Rng rng(seed);
  Vector price(n, 100.0);
  double index = 1000.0;
  std::ofstream out(path);
  out << "date";
  for (std::size_t j = 0; j < n; ++j) out << ",A" << j;
  out << ",IDX\n";
  char date[16];
  for (std::size_t t = 0; t < T; ++t) {
    std::snprintf(date, sizeof(date), "2020-%04zu", t);
    out << date;
    double r0 = 0.0, r1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double r = 0.01 * rng.normal();
      if (j == 0) r0 = r;
      if (j == 1) r1 = r;
      price[j] *= std::exp(r);
      out << "," << price[j];
    }
    index *= std::exp(0.6 * r0 + 0.4 * r1 + 1e-4 * rng.normal());
    out << "," << index << "\n";
  }
  return path.string();
}

}  // namespace

TEST_CASE("defaults are filled in and echoed") {
  nlohmann::json j{{"data", "prices.csv"}, {"models", {"MSE", "TEV"}}};
  RunConfig cfg = parse_config_json(j);
  CHECK(cfg.K == 45);
  CHECK(cfg.in_len == 504);
  CHECK(cfg.out_len == 63);
  CHECK(cfg.step == 63);
  CHECK(cfg.rf == 0.0);
  CHECK(cfg.selection == "relax");
  CHECK(cfg.models.size() == 2);
  nlohmann::ordered_json echo = config_echo(cfg);
  CHECK(echo["K"] == 45);
  CHECK(echo["in_len"] == 504);
  CHECK(echo["models"][0]["model"] == "MSE");
}

TEST_CASE("bad configurations are rejected with config errors") {
  auto parse = [](nlohmann::json j) { return parse_config_json(j); };
  CHECK_THROWS_AS(parse({{"models", {"MSE"}}}), ConfigError);              // no data
  CHECK_THROWS_AS(parse({{"data", "x"}}), ConfigError);                   // no models
  CHECK_THROWS_AS(parse({{"data", "x"}, {"models", nlohmann::json::array()}}), ConfigError);
  CHECK_THROWS_AS(parse({{"data", "x"}, {"models", {"MSE"}}, {"K", 0}}), ConfigError);
  CHECK_THROWS_AS(parse({{"data", "x"}, {"models", {"MSE"}}, {"in_len", 1}}), ConfigError);
  CHECK_THROWS_AS(parse({{"data", "x"}, {"models", {"MSE"}}, {"selection", "magic"}}),
                  ConfigError);
  CHECK_THROWS_AS(parse({{"data", "x"}, {"models", {"MSE"}}, {"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(parse({{"data", "x"}, {"models", {{{"model", "QR"}, {"bogus", 1}}}}}),
                  ConfigError);

  try {
    parse({{"data", "x"}, {"models", {"NotAModel"}}});
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("NotAModel") != std::string::npos);
    CHECK(msg.find("TEV") != std::string::npos);
    CHECK(msg.find("DNNF") != std::string::npos);
  }
}

TEST_CASE("per-model parameters land in ModelSpec") {
  nlohmann::json j{{"data", "x"},
                   {"models",
                    {nlohmann::json{{"model", "QR"}, {"tau", 0.25}},
                     nlohmann::json{{"model", "Coint-Sim"}, {"iters", 123}},
                     nlohmann::json{{"model", "FBM"}, {"k", 2}}}}};
  RunConfig cfg = parse_config_json(j);
  CHECK(cfg.models[0].tau == 0.25);
  CHECK(cfg.models[1].coint_iters == 123);
  CHECK(cfg.models[2].factor_k == 2);
}

TEST_CASE("an empty result store still writes valid headers") {
  TempTree tmp;
  ResultStore store;
  emit_reports(store, (tmp.root / "out").string());
  std::string metrics = slurp(tmp.root / "out" / "metrics.csv");
  CHECK(line_count(metrics) == 1);
  CHECK(metrics.rfind("model,scope,te,", 0) == 0);
  CHECK(line_count(slurp(tmp.root / "out" / "per_window.csv")) == 1);
  CHECK(line_count(slurp(tmp.root / "out" / "pvalues.csv")) == 1);
  CHECK(line_count(slurp(tmp.root / "out" / "cumulative_returns.csv")) == 1);
  CHECK(fs::exists(tmp.root / "out" / "manifest.json"));
}

TEST_CASE("a small run produces consistent reports and identical reruns") {
  TempTree tmp;
  std::string data = write_prices(tmp.root / "prices.csv", 161, 8, 42);

  RunConfig cfg;
  cfg.data_path = data;
  cfg.in_len = 60;
  cfg.out_len = 20;
  cfg.step = 20;
  cfg.K = 3;
  cfg.seed = 7;
  cfg.threads = 2;
  cfg.models.push_back({"MSE"});
  cfg.models.push_back({"TEV"});
  cfg.models.push_back({"NNL"});

  ResultStore store = run_backtest(cfg);
  const std::size_t W = store.plan.windows.size();
  REQUIRE(W == 5);

  for (std::size_t mi = 0; mi < 3; ++mi) {
    for (std::size_t wi = 0; wi < W; ++wi) {
      const SolveRecord& rec = store.grid[mi][wi];
      REQUIRE(!rec.failed);
      double s = 0.0;
      for (double w : rec.portfolio.weights) {
        CHECK(w >= 0.0);
        s += w;
      }
      CHECK(s == Catch::Approx(1.0).margin(1e-9));
      CHECK(rec.portfolio.support.size() <= 3);
      CHECK(rec.test_returns.size() == 20);
    }
  }
  CHECK(store.ttests.models.size() == 3);
  CHECK(store.ttest_excluded.empty());

  fs::path out1 = tmp.root / "out1";
  emit_reports(store, out1.string());
  std::string metrics = slurp(out1 / "metrics.csv");
  CHECK(line_count(metrics) == 1 + 2 * 3);
  CHECK(line_count(slurp(out1 / "per_window.csv")) == 1 + 3 * W);
  CHECK(line_count(slurp(out1 / "pvalues.csv")) == 1 + 3);
  std::string cumret = slurp(out1 / "cumulative_returns.csv");
  CHECK(line_count(cumret) == 1 + W * 20);

  // the wealth column recomputes from the stored test returns
  {
    std::istringstream in(cumret);
    std::string line;
    std::getline(in, line);  // header
    double wealth = 1.0;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      std::vector<std::string> cells = split_csv(line);
      REQUIRE(cells.size() == 2 + 3);
      std::size_t wi = row / 20, t = row % 20;
      wealth *= 1.0 + store.grid[0][wi].test_returns[t];
      CHECK(std::stod(cells[2]) == Catch::Approx(wealth).margin(1e-9));
      ++row;
    }
  }

  // same config, fresh run: byte-identical reports
  ResultStore rerun = run_backtest(cfg);
  fs::path out2 = tmp.root / "out2";
  emit_reports(rerun, out2.string());
  CHECK(slurp(out2 / "metrics.csv") == metrics);
  CHECK(slurp(out2 / "per_window.csv") == slurp(out1 / "per_window.csv"));
  CHECK(slurp(out2 / "pvalues.csv") == slurp(out1 / "pvalues.csv"));
  CHECK(slurp(out2 / "cumulative_returns.csv") == cumret);
}

TEST_CASE("missing data files raise data errors at run time") {
  RunConfig cfg;
  cfg.data_path = "/nonexistent/prices.csv";
  cfg.models.push_back({"MSE"});
  CHECK_THROWS_AS(run_backtest(cfg), DataError);
}
