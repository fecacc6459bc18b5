#pragma once

#include <string>
#include <vector>

#include "trackkit/autoencoder.hpp"
#include "trackkit/clustering.hpp"
#include "trackkit/cointegration.hpp"
#include "trackkit/common.hpp"
#include "trackkit/factor.hpp"
#include "trackkit/forest.hpp"
#include "trackkit/portfolio.hpp"
#include "trackkit/regression.hpp"
#include "trackkit/selection.hpp"
#include "trackkit/sparse.hpp"
#include "trackkit/svr.hpp"
#include "trackkit/tracking.hpp"

namespace trackkit {

// One catalogue entry: the tag picks the algorithm, the remaining fields are
// its tunables (each model reads only its own).
struct ModelSpec {
  std::string tag;

  TmcvarParams tmcvar;              // TMCVaR
  double tau = 0.5;                 // QR
  Vector lambda2_grid{0.0, 0.01, 0.1, 1.0};  // NNEN
  std::size_t coint_iters = 10000;  // Coint-Sim
  std::size_t factor_k = 5;         // FBM
  double svr_u = 1.0;               // eps-SVR / nu-SVR
  std::size_t rf_trees = 100;       // RF-Clust / RF-Reg
  std::size_t clust2_clusters = 0;  // Clust2; 0 means ceil(K/2)
  std::size_t epochs = 0;           // neural models; 0 means model default
};

inline const std::vector<std::string>& all_model_tags() {
  static const std::vector<std::string> tags = {
      // optimization based
      "TEV", "MSE", "SES", "MAD", "MADD", "MinMax", "DMinMax", "TMCVaR",
      // statistical
      "LSR", "QR", "NNL", "NNEN", "Coint-Sim", "Cvx-CoInt", "FBM",
      // data driven
      "Clust1", "Clust2", "eps-SVR", "nu-SVR", "RF-Clust", "RF-Reg", "SH-AE", "SP-AE",
      "CON-AE", "STCK-AE", "DEN-AE", "VAR-AE", "DNN", "DNNF"};
  return tags;
}

inline bool is_known_model(const std::string& tag) {
  for (const std::string& t : all_model_tags())
    if (t == tag) return true;
  return false;
}

// Everything one training window exposes to a model: simple returns with the
// index series (the TrackingProblem) plus the aligned log-price panel for the
// price-level models.
struct WindowData {
  TrackingProblem p;
  Matrix log_prices;  // training rows, one column per asset
  Vector log_index;
};

inline Portfolio solve_model(const ModelSpec& spec, const WindowData& win,
                             const SelectionStrategy& strategy, std::uint64_t seed,
                             const Deadline& deadline = {}) {
  const TrackingProblem& p = win.p;
  const std::string& m = spec.tag;
  Portfolio out;

  if (m == "TEV") {
    Portfolio bench = estimate_benchmark_weights(p);
    out = solve_tev(p, bench.weights, strategy, deadline);
  } else if (m == "MSE") {
    out = solve_mse(p, strategy, deadline);
  } else if (m == "SES") {
    out = solve_ses(p, strategy, deadline);
  } else if (m == "MAD") {
    out = solve_mad(p, strategy, deadline);
  } else if (m == "MADD") {
    out = solve_madd(p, strategy, deadline);
  } else if (m == "MinMax") {
    out = solve_minmax(p, strategy, deadline);
  } else if (m == "DMinMax") {
    out = solve_dminmax(p, strategy, deadline);
  } else if (m == "TMCVaR") {
    out = solve_tmcvar(p, spec.tmcvar, strategy, deadline);
  } else if (m == "LSR") {
    out = lsr_two_stage(fit_lines_ols(p.R, p.I), p.K, strategy, deadline);
  } else if (m == "QR") {
    out = qr_two_stage(fit_lines_quantile(p.R, p.I, spec.tau), p.K, strategy, deadline);
  } else if (m == "NNL") {
    out = p.K < p.n() ? nnl_track(p.R, p.I, p.K)
                      : refit_nnls_weights(p.R, p.I, full_support(p.n()), "NNL");
  } else if (m == "NNEN") {
    out = p.K < p.n() ? nnen_track(p.R, p.I, p.K, spec.lambda2_grid)
                      : refit_nnls_weights(p.R, p.I, full_support(p.n()), "NNEN");
  } else if (m == "Coint-Sim") {
    out = coint_simulate(win.log_prices, win.log_index, std::min(p.K, p.n()), spec.coint_iters,
                         seed, deadline);
  } else if (m == "Cvx-CoInt") {
    out = coint_convex(win.log_prices, win.log_index, p.K, strategy, deadline);
  } else if (m == "FBM") {
    out = factor_track(win.log_prices, p, spec.factor_k);
  } else if (m == "Clust1") {
    out = clust1_track(p, seed);
  } else if (m == "Clust2") {
    out = clust2_track(p, seed, spec.clust2_clusters);
  } else if (m == "eps-SVR") {
    out = svr_track(p, SvrVariant::Eps, spec.svr_u, seed);
  } else if (m == "nu-SVR") {
    out = svr_track(p, SvrVariant::Nu, spec.svr_u, seed);
  } else if (m == "RF-Clust") {
    out = rf_clust_track(p, seed, spec.rf_trees);
  } else if (m == "RF-Reg") {
    out = rf_reg_track(p, seed, spec.rf_trees);
  } else if (m == "SH-AE" || m == "SP-AE" || m == "CON-AE" || m == "STCK-AE" || m == "DEN-AE" ||
             m == "VAR-AE") {
    AeVariant variant = m == "SH-AE"     ? AeVariant::sh()
                        : m == "SP-AE"   ? AeVariant::sp()
                        : m == "CON-AE"  ? AeVariant::con()
                        : m == "STCK-AE" ? AeVariant::stck()
                        : m == "DEN-AE"  ? AeVariant::den()
                                         : AeVariant::var();
    TrainConfig cfg;
    cfg.seed = seed;
    if (spec.epochs) cfg.epochs = spec.epochs;
    out = ae_track(p, variant, cfg);
  } else if (m == "DNN") {
    TrainConfig cfg = dnn_config(seed);
    if (spec.epochs) cfg.epochs = spec.epochs;
    out = dnn_track(p, cfg);
  } else if (m == "DNNF") {
    TrainConfig cfg = dnnf_config(seed);
    if (spec.epochs) cfg.epochs = spec.epochs;
    out = dnnf_track(p, cfg);
  } else {
    std::string valid;
    for (const std::string& t : all_model_tags()) valid += (valid.empty() ? "" : ", ") + t;
    throw ConfigError("unknown model '" + m + "'; valid tags: " + valid);
  }
  out.model = m;
  return out;
}

}  // namespace trackkit
