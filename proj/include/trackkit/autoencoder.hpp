#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/matrix.hpp"
#include "trackkit/neural.hpp"
#include "trackkit/portfolio.hpp"
#include "trackkit/rng.hpp"
#include "trackkit/tracking.hpp"

namespace trackkit {

struct AeVariant {
  enum class Kind { SH, SP, CON, STCK, DEN, VAR } kind = Kind::SH;
  std::size_t hidden = 16;                    // latent width (STCK uses encoder_dims)
  std::vector<std::size_t> encoder_dims{64, 32, 16};  // STCK only
  double l1 = 1e-4;                           // SP activation penalty
  double contractive = 1e-4;                  // CON weight penalty
  double noise_sigma = 0.1;                   // DEN corruption
  double kl = 1e-4;                           // VAR KL weight

  static AeVariant sh() { return {}; }
  static AeVariant sp() { return with(Kind::SP); }
  static AeVariant con() { return with(Kind::CON); }
  static AeVariant stck() { return with(Kind::STCK); }
  static AeVariant den() { return with(Kind::DEN); }
  static AeVariant var() { return with(Kind::VAR); }

 private:
  static AeVariant with(Kind k) {
    AeVariant v;
    v.kind = k;
    return v;
  }
};

struct AeModel {
  Mlp enc, dec;
  bool variational = false;
  std::size_t latent = 0;
};

struct ReconstructionReport {
  Vector per_asset_loss;   // L_i = sum_t (r_it - rhat_it)^2
  Vector epoch_loss;       // mean per-sample training loss by epoch
};

namespace detail {

inline Vector relu(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i]);
  return out;
}

// Deterministic reconstruction of one sample (VAE decodes the mean).
inline Vector ae_reconstruct(const AeModel& model, const Vector& x) {
  Vector code = mlp_forward(model.enc, x);
  if (model.variational) {
    Vector mu(code.begin(), code.begin() + static_cast<std::ptrdiff_t>(model.latent));
    return mlp_forward(model.dec, mu);
  }
  return mlp_forward(model.dec, relu(code));
}

}  // namespace detail

// Trains one variant on the standardized panel (rows are daily cross
// sections). Mini-batch Adam; batch order reshuffled each epoch from the
// config seed.
inline std::pair<AeModel, ReconstructionReport> train_autoencoder(const Matrix& R_std,
                                                                  const AeVariant& variant,
                                                                  const TrainConfig& cfg) {
  const std::size_t T = R_std.rows, n = R_std.cols;
  using Kind = AeVariant::Kind;
  Rng rng(cfg.seed);

  AeModel model;
  if (variant.kind == Kind::STCK) {
    std::vector<std::size_t> ed{n};
    ed.insert(ed.end(), variant.encoder_dims.begin(), variant.encoder_dims.end());
    std::vector<std::size_t> dd(ed.rbegin(), ed.rend());
    model.enc = make_mlp(ed, Head::Linear, rng);
    model.dec = make_mlp(dd, Head::Linear, rng);
    model.latent = variant.encoder_dims.back();
  } else if (variant.kind == Kind::VAR) {
    model.latent = variant.hidden;
    model.enc = make_mlp({n, 2 * model.latent}, Head::Linear, rng);
    model.dec = make_mlp({model.latent, n}, Head::Linear, rng);
    model.variational = true;
  } else {
    model.latent = variant.hidden;
    model.enc = make_mlp({n, model.latent}, Head::Linear, rng);
    model.dec = make_mlp({model.latent, n}, Head::Linear, rng);
  }

  Adam opt_enc(model.enc, cfg.learning_rate);
  Adam opt_dec(model.dec, cfg.learning_rate);
  ReconstructionReport report;

  std::vector<std::size_t> order(T);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < T; start += cfg.batch_size) {
      std::size_t end = std::min(T, start + cfg.batch_size);
      double bsz = static_cast<double>(end - start);
      Gradients g_enc(model.enc), g_dec(model.dec);
      double batch_loss = 0.0;
      for (std::size_t s = start; s < end; ++s) {
        Vector target = R_std.row(order[s]);
        Vector x = target;
        if (variant.kind == Kind::DEN && variant.noise_sigma > 0.0)
          for (double& v : x) v += variant.noise_sigma * rng.normal();

        ForwardCache ce, cd;
        Vector code = mlp_forward(model.enc, x, &ce);
        if (model.variational) {
          Vector mu(code.begin(), code.begin() + static_cast<std::ptrdiff_t>(model.latent));
          Vector logvar(code.begin() + static_cast<std::ptrdiff_t>(model.latent), code.end());
          Vector epsn(model.latent);
          for (double& e : epsn) e = rng.normal();
          Vector z(model.latent);
          for (std::size_t i = 0; i < model.latent; ++i)
            z[i] = mu[i] + std::exp(0.5 * logvar[i]) * epsn[i];
          Vector out = mlp_forward(model.dec, z, &cd);
          Vector dOut(n);
          double recon = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            double d = out[i] - target[i];
            recon += d * d;
            dOut[i] = 2.0 * d;
          }
          batch_loss += recon + variant.kl * gaussian_kl(mu, logvar);
          Vector dz = mlp_backward(model.dec, cd, std::move(dOut), g_dec);
          Vector dCode(2 * model.latent);
          for (std::size_t i = 0; i < model.latent; ++i) {
            dCode[i] = dz[i] + variant.kl * mu[i];
            dCode[model.latent + i] = dz[i] * epsn[i] * 0.5 * std::exp(0.5 * logvar[i]) +
                                      variant.kl * 0.5 * (std::exp(logvar[i]) - 1.0);
          }
          mlp_backward(model.enc, ce, std::move(dCode), g_enc);
        } else {
          Vector h = detail::relu(code);
          Vector out = mlp_forward(model.dec, h, &cd);
          Vector dOut(n);
          double recon = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            double d = out[i] - target[i];
            recon += d * d;
            dOut[i] = 2.0 * d;
          }
          batch_loss += recon;
          Vector dh = mlp_backward(model.dec, cd, std::move(dOut), g_dec);
          if (variant.kind == Kind::SP) {
            for (std::size_t i = 0; i < h.size(); ++i) {
              batch_loss += variant.l1 * std::abs(h[i]);
              dh[i] += variant.l1 * (h[i] > 0.0 ? 1.0 : (h[i] < 0.0 ? -1.0 : 0.0));
            }
          }
          for (std::size_t i = 0; i < h.size(); ++i)
            if (code[i] <= 0.0) dh[i] = 0.0;  // latent ReLU gate
          mlp_backward(model.enc, ce, std::move(dh), g_enc);
        }
      }
      g_enc.scale(1.0 / bsz);
      g_dec.scale(1.0 / bsz);
      batch_loss /= bsz;
      if (variant.kind == Kind::CON) {
        double fro = 0.0;
        for (std::size_t l = 0; l < model.enc.layers.size(); ++l) {
          for (std::size_t i = 0; i < model.enc.layers[l].W.data.size(); ++i) {
            double w = model.enc.layers[l].W.data[i];
            fro += w * w;
            g_enc.g[l].W.data[i] += 2.0 * variant.contractive * w;
          }
        }
        batch_loss += variant.contractive * fro;
      }
      if (!std::isfinite(batch_loss))
        throw SolverError("train_autoencoder: loss diverged at epoch " + std::to_string(epoch));
      opt_enc.step(model.enc, g_enc);
      opt_dec.step(model.dec, g_dec);
      epoch_total += batch_loss * bsz;
    }
    report.epoch_loss.push_back(epoch_total / static_cast<double>(T));
  }

  report.per_asset_loss.assign(n, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    Vector rec = detail::ae_reconstruct(model, R_std.row(t));
    for (std::size_t i = 0; i < n; ++i) {
      double d = R_std(t, i) - rec[i];
      report.per_asset_loss[i] += d * d;
    }
  }
  return {std::move(model), std::move(report)};
}

// Assets ordered by ascending reconstruction loss.
inline std::vector<std::size_t> rank_by_reconstruction(const ReconstructionReport& report) {
  std::vector<std::size_t> order(report.per_asset_loss.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.per_asset_loss[a] < report.per_asset_loss[b];
  });
  return order;
}

// 70% communal (smallest losses) + 30% idiosyncratic (largest), K total.
inline std::vector<std::size_t> select_mixed(const std::vector<std::size_t>& order,
                                             std::size_t K) {
  const std::size_t n = order.size();
  if (K > n) throw ConfigError("select_mixed: K exceeds universe");
  std::size_t head = static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(K)));
  std::vector<std::size_t> support(order.begin(),
                                   order.begin() + static_cast<std::ptrdiff_t>(head));
  for (std::size_t j = 0; j < K - head; ++j) support.push_back(order[n - 1 - j]);
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  if (support.size() != K) throw SolverError("select_mixed: head and tail overlapped");
  return support;
}

// Per-asset standardization statistics from the training window.
inline Matrix standardize_columns(const Matrix& R) {
  Matrix S(R.rows, R.cols);
  for (std::size_t j = 0; j < R.cols; ++j) {
    Vector col = R.col(j);
    double m = mean(col), sd = sample_sd(col);
    if (sd <= 0.0) sd = 1.0;
    for (std::size_t t = 0; t < R.rows; ++t) S(t, j) = (R(t, j) - m) / sd;
  }
  return S;
}

// AE selection followed by the MSE weighting step.
inline Portfolio ae_track(const TrackingProblem& p, const AeVariant& variant, TrainConfig cfg) {
  Matrix R_std = standardize_columns(p.R);
  auto [model, report] = train_autoencoder(R_std, variant, cfg);
  (void)model;
  std::vector<std::size_t> support =
      select_mixed(rank_by_reconstruction(report), std::min(p.K, p.n()));
  SupportSolve s = solve_mse_on(p, support);
  using Kind = AeVariant::Kind;
  const char* tag = variant.kind == Kind::SH     ? "SH-AE"
                    : variant.kind == Kind::SP   ? "SP-AE"
                    : variant.kind == Kind::CON  ? "CON-AE"
                    : variant.kind == Kind::STCK ? "STCK-AE"
                    : variant.kind == Kind::DEN  ? "DEN-AE"
                                                 : "VAR-AE";
  return finalize_portfolio(s.weights, s.objective, tag);
}

inline TrainConfig dnn_config(std::uint64_t seed = 0) {
  TrainConfig c;
  c.epochs = 100;
  c.batch_size = 16;
  c.learning_rate = 1e-2;
  c.seed = seed;
  return c;
}

inline TrainConfig dnnf_config(std::uint64_t seed = 0) {
  TrainConfig c = dnn_config(seed);
  c.dropout_rate = 0.5;
  return c;
}

// Stage 1: stacked-AE pre-selection of the h = K most communal assets.
// Stage 2: [64,32,1] net predicting the index from the selected returns.
// Stage 3: weights proportional to mean absolute input gradients.
inline Portfolio dnn_track(const TrackingProblem& p, TrainConfig stage2_cfg = dnn_config()) {
  const std::size_t T = p.T(), n = p.n();
  std::size_t h = std::min(p.K, n);

  TrainConfig ae_cfg;
  ae_cfg.epochs = 100;
  ae_cfg.batch_size = 32;
  ae_cfg.learning_rate = 1e-3;
  ae_cfg.seed = stage2_cfg.seed;
  Matrix R_std = standardize_columns(p.R);
  auto [ae, report] = train_autoencoder(R_std, AeVariant::stck(), ae_cfg);
  (void)ae;
  std::vector<std::size_t> order = rank_by_reconstruction(report);
  std::vector<std::size_t> support(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h));
  std::sort(support.begin(), support.end());

  Rng rng(stage2_cfg.seed ^ 0x646e6eULL);
  Mlp net = make_mlp({h, 64, 32, 1}, Head::Linear, rng);
  Adam opt(net, stage2_cfg.learning_rate);

  Matrix Rs(T, h);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < h; ++j) Rs(t, j) = p.R(t, support[j]);

  std::vector<std::size_t> idx(T);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t epoch = 0; epoch < stage2_cfg.epochs; ++epoch) {
    rng.shuffle(idx);
    for (std::size_t start = 0; start < T; start += stage2_cfg.batch_size) {
      std::size_t end = std::min(T, start + stage2_cfg.batch_size);
      Gradients g(net);
      for (std::size_t s = start; s < end; ++s) {
        ForwardCache cache;
        Vector out = mlp_forward(net, Rs.row(idx[s]), &cache);
        Vector dOut{2.0 * (out[0] - p.I[idx[s]])};
        mlp_backward(net, cache, std::move(dOut), g);
      }
      g.scale(1.0 / static_cast<double>(end - start));
      opt.step(net, g);
    }
  }

  // sensitivities: mean |d f / d input_j| over the training rows
  Vector sens(h, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    ForwardCache cache;
    mlp_forward(net, Rs.row(t), &cache);
    Gradients g(net);
    Vector dx = mlp_backward(net, cache, Vector{1.0}, g);
    for (std::size_t j = 0; j < h; ++j) sens[j] += std::abs(dx[j]);
  }
  double total = 0.0;
  for (double& s : sens) {
    s /= static_cast<double>(T);
    total += s;
  }
  Vector w(n, 0.0);
  std::string note;
  if (total <= 1e-12) {
    for (std::size_t i : support) w[i] = 1.0 / static_cast<double>(support.size());
    note = "uniform-fallback";
  } else {
    for (std::size_t j = 0; j < h; ++j) w[support[j]] = sens[j] / total;
  }
  double obj = mse_objective(p, w);
  return finalize_portfolio(std::move(w), obj, "DNN", std::move(note));
}

namespace detail {

// One DNNF stage: fixed noise in, softmax weights out, trained against the
// index series. Returns the converged weight vector.
inline Vector dnnf_stage(const Matrix& R, const Vector& I, TrainConfig cfg, Rng& rng) {
  const std::size_t T = R.rows, n = R.cols;
  std::vector<std::size_t> dims{n, 64, 64, 64, 64, 64, 64, n};
  Mlp net = make_mlp(dims, Head::Softmax, rng);
  Adam opt(net, cfg.learning_rate);
  Vector xi(n);
  for (double& v : xi) v = rng.normal();  // fixed for the whole window

  std::vector<std::size_t> idx(T);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(idx);
    for (std::size_t start = 0; start < T; start += cfg.batch_size) {
      std::size_t end = std::min(T, start + cfg.batch_size);
      Gradients g(net);
      ForwardCache cache;
      Vector w = mlp_forward(net, xi, &cache, &rng, cfg.dropout_rate);
      Vector dW(n, 0.0);
      double scale = 2.0 / static_cast<double>(end - start);
      for (std::size_t s = start; s < end; ++s) {
        double pred = 0.0;
        for (std::size_t j = 0; j < n; ++j) pred += w[j] * R(idx[s], j);
        double resid = pred - I[idx[s]];
        for (std::size_t j = 0; j < n; ++j) dW[j] += scale * resid * R(idx[s], j);
      }
      mlp_backward(net, cache, std::move(dW), g, cfg.dropout_rate);
      opt.step(net, g);
    }
  }
  return mlp_forward(net, xi);  // dropout off at evaluation
}

}  // namespace detail

// Two-stage fixed-noise tracker: train on the full universe, keep the top-K
// softmax weights, retrain from scratch on the selected columns.
inline Portfolio dnnf_track(const TrackingProblem& p, TrainConfig cfg = dnnf_config()) {
  const std::size_t n = p.n(), K = std::min(p.K, n);
  Rng rng(cfg.seed ^ 0x646e6e66ULL);

  Vector w1 = detail::dnnf_stage(p.R, p.I, cfg, rng);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return w1[a] > w1[b]; });
  std::vector<std::size_t> support(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(K));
  std::sort(support.begin(), support.end());

  Matrix Rs(p.T(), K);
  for (std::size_t t = 0; t < p.T(); ++t)
    for (std::size_t j = 0; j < K; ++j) Rs(t, j) = p.R(t, support[j]);
  Vector w2 = detail::dnnf_stage(Rs, p.I, cfg, rng);

  Vector w(n, 0.0);
  for (std::size_t j = 0; j < K; ++j) w[support[j]] = w2[j];
  double obj = mse_objective(p, w);
  return finalize_portfolio(std::move(w), obj, "DNNF");
}

}  // namespace trackkit
