#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/matrix.hpp"

namespace trackkit {

// Aligned dated closing prices for n assets plus the index level.
// Dates are opaque ordered labels; no calendar arithmetic anywhere.
struct PricePanel {
  std::vector<std::string> dates;      // strictly increasing
  std::vector<std::string> asset_ids;  // tickers, column order preserved
  Matrix prices;                       // T x n, strictly positive
  Vector index_prices;                 // length T

  std::size_t T() const { return dates.size(); }
  std::size_t n() const { return asset_ids.size(); }
};

// Simple returns derived from a PricePanel: r_t = p_{t+1}/p_t - 1.
struct ReturnPanel {
  std::vector<std::string> dates;  // length T-1 (date of the later price)
  std::vector<std::string> asset_ids;
  Matrix returns;        // (T-1) x n
  Vector index_returns;  // length T-1

  std::size_t T() const { return dates.size(); }
  std::size_t n() const { return asset_ids.size(); }
};

struct WindowRange {
  std::size_t train_start, train_end;  // [train_start, train_end)
  std::size_t test_start, test_end;    // [test_start, test_end)
};

struct RollingPlan {
  std::size_t in_len = 0, out_len = 0, step = 0;
  std::vector<WindowRange> windows;
};

namespace detail {

// RFC-4180 line split: commas inside double quotes do not separate fields,
// "" inside a quoted field is a literal quote.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

inline double parse_number(const std::string& s, std::size_t row, const std::string& col) {
  if (s.empty()) return std::nan("");  // missing cell
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ParseError("malformed number '" + s + "' at row " + std::to_string(row) +
                     ", column " + col);
  }
  if (pos != s.size())
    throw ParseError("malformed number '" + s + "' at row " + std::to_string(row) +
                     ", column " + col);
  return v;
}

}  // namespace detail

// Loads a CSV price panel: header `date,<ticker>,...`, one designated index
// column (default: last column). Rows are sorted by date; duplicate dates are
// rejected.
inline PricePanel load_prices(const std::string& path, const std::string& index_col = "") {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open price file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty price file: " + path);
  auto header = detail::split_csv_line(line);
  if (header.size() < 2) throw ParseError("price file needs a date column and at least one asset");

  std::size_t index_idx = header.size() - 1;
  if (!index_col.empty()) {
    auto it = std::find(header.begin() + 1, header.end(), index_col);
    if (it == header.end())
      throw ConfigError("index column '" + index_col + "' not found in header");
    index_idx = static_cast<std::size_t>(it - header.begin());
  }

  struct Row {
    std::string date;
    Vector values;  // asset columns in order
    double index_value;
  };
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("row " + std::to_string(lineno) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(header.size()));
    Row r;
    r.date = fields[0];
    for (std::size_t j = 1; j < fields.size(); ++j) {
      double v = detail::parse_number(fields[j], lineno, header[j]);
      if (j == index_idx)
        r.index_value = v;
      else
        r.values.push_back(v);
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DataError("price file has no data rows: " + path);

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].date == rows[i - 1].date)
      throw DataError("duplicate date in price file: " + rows[i].date);
  }

  PricePanel panel;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != 0 && j != index_idx) panel.asset_ids.push_back(header[j]);
  panel.prices = Matrix(rows.size(), panel.asset_ids.size());
  panel.index_prices.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    panel.dates.push_back(rows[i].date);
    for (std::size_t j = 0; j < panel.asset_ids.size(); ++j)
      panel.prices(i, j) = rows[i].values[j];
    panel.index_prices[i] = rows[i].index_value;
  }
  for (double v : panel.index_prices)
    if (!(v > 0.0)) throw DataError("index price must be strictly positive");
  return panel;
}

// Keeps only assets whose full price history is present and strictly
// positive (zero/negative treated as missing). Column order preserved.
// Idempotent by construction.
inline PricePanel filter_complete_assets(const PricePanel& panel) {
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < panel.n(); ++j) {
    bool ok = true;
    for (std::size_t t = 0; t < panel.T(); ++t) {
      double v = panel.prices(t, j);
      if (!std::isfinite(v) || v <= 0.0) {
        ok = false;
        break;
      }
    }
    if (ok) keep.push_back(j);
  }
  if (keep.empty()) throw DataError("no asset has a complete price history");

  PricePanel out;
  out.dates = panel.dates;
  out.index_prices = panel.index_prices;
  out.prices = Matrix(panel.T(), keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.asset_ids.push_back(panel.asset_ids[keep[j]]);
    for (std::size_t t = 0; t < panel.T(); ++t) out.prices(t, j) = panel.prices(t, keep[j]);
  }
  return out;
}

// Simple returns r_t = p_{t+1}/p_t - 1, identically for the index.
inline ReturnPanel compute_returns(const PricePanel& panel) {
  if (panel.T() < 2) throw DataError("need at least two price rows to compute returns");
  ReturnPanel out;
  out.asset_ids = panel.asset_ids;
  out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
  out.returns = Matrix(panel.T() - 1, panel.n());
  out.index_returns.resize(panel.T() - 1);
  for (std::size_t t = 0; t + 1 < panel.T(); ++t) {
    for (std::size_t j = 0; j < panel.n(); ++j)
      out.returns(t, j) = panel.prices(t + 1, j) / panel.prices(t, j) - 1.0;
    out.index_returns[t] = panel.index_prices[t + 1] / panel.index_prices[t] - 1.0;
  }
  return out;
}

// Greedy rolling plan over return rows: a window is emitted only if its full
// test range fits. Count = floor((T - in - out)/step) + 1 when feasible.
inline RollingPlan make_windows(std::size_t T_returns, std::size_t in_len, std::size_t out_len,
                                std::size_t step) {
  if (step < 1) throw ConfigError("window step must be >= 1");
  if (in_len + out_len > T_returns)
    throw ConfigError("infeasible rolling plan: in_len + out_len = " +
                      std::to_string(in_len + out_len) + " exceeds " +
                      std::to_string(T_returns) + " return rows");
  RollingPlan plan;
  plan.in_len = in_len;
  plan.out_len = out_len;
  plan.step = step;
  for (std::size_t start = 0; start + in_len + out_len <= T_returns; start += step) {
    WindowRange w;
    w.train_start = start;
    w.train_end = start + in_len;
    w.test_start = w.train_end;
    w.test_end = w.train_end + out_len;
    plan.windows.push_back(w);
  }
  return plan;
}

}  // namespace trackkit
