#include <cmath>
#include <numeric>

#include "catch2/catch_amalgamated.hpp"
#include "trackkit/autoencoder.hpp"
#include "trackkit/rng.hpp"

using namespace trackkit;

namespace {

Matrix noise_panel(std::size_t T, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix R(T, n);
  for (double& v : R.data) v = rng.uniform(-0.02, 0.02);
  return R;
}

TrainConfig quick_cfg(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 16;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("zero corruption makes the denoising variant the plain one") {
  Matrix R = standardize_columns(noise_panel(50, 6, 71));
  AeVariant den = AeVariant::den();
  den.noise_sigma = 0.0;
  den.hidden = 4;
  AeVariant sh = AeVariant::sh();
  sh.hidden = 4;
  auto [m1, r1] = train_autoencoder(R, den, quick_cfg(5));
  auto [m2, r2] = train_autoencoder(R, sh, quick_cfg(5));
  REQUIRE(r1.epoch_loss.size() == r2.epoch_loss.size());
  for (std::size_t e = 0; e < r1.epoch_loss.size(); ++e)
    CHECK(r1.epoch_loss[e] == Catch::Approx(r2.epoch_loss[e]).margin(1e-10));
  for (std::size_t j = 0; j < 6; ++j)
    CHECK(r1.per_asset_loss[j] == Catch::Approx(r2.per_asset_loss[j]).margin(1e-10));
}

TEST_CASE("a low-rank panel trains down to a fraction of the initial loss") {
  Rng rng(72);
  const std::size_t T = 80, n = 6;
  Vector f(T);
  for (double& v : f) v = rng.normal();
  Matrix R(T, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t t = 0; t < T; ++t) R(t, j) = (0.5 + 0.1 * j) * f[t];
  Matrix S = standardize_columns(R);
  AeVariant sh = AeVariant::sh();
  sh.hidden = 3;
  TrainConfig cfg = quick_cfg(7);
  cfg.epochs = 120;
  cfg.learning_rate = 3e-3;
  auto [model, report] = train_autoencoder(S, sh, cfg);
  (void)model;
  CHECK(report.epoch_loss.back() < 0.01 * report.epoch_loss.front());
}

TEST_CASE("a strong activation penalty shrinks the code") {
  Matrix S = standardize_columns(noise_panel(60, 6, 73));
  AeVariant sp = AeVariant::sp();
  sp.hidden = 4;
  sp.l1 = 5.0;
  AeVariant sh = AeVariant::sh();
  sh.hidden = 4;
  TrainConfig cfg = quick_cfg(11);
  cfg.epochs = 60;
  auto [msp, rsp] = train_autoencoder(S, sp, cfg);
  auto [msh, rsh] = train_autoencoder(S, sh, cfg);
  (void)rsp;
  (void)rsh;
  auto mean_code = [&](const AeModel& m) {
    double s = 0.0;
    for (std::size_t t = 0; t < S.rows; ++t) {
      Vector code = mlp_forward(m.enc, S.row(t));
      for (double v : code) s += std::abs(std::max(0.0, v));
    }
    return s / static_cast<double>(S.rows);
  };
  CHECK(mean_code(msp) < mean_code(msh));
}

TEST_CASE("every variant trains and reports finite losses") {
  Matrix S = standardize_columns(noise_panel(40, 5, 74));
  for (AeVariant v : {AeVariant::sh(), AeVariant::sp(), AeVariant::con(), AeVariant::stck(),
                      AeVariant::den(), AeVariant::var()}) {
    v.hidden = 3;
    v.encoder_dims = {8, 4, 3};
    TrainConfig cfg = quick_cfg(13);
    cfg.epochs = 5;
    auto [model, report] = train_autoencoder(S, v, cfg);
    (void)model;
    REQUIRE(report.epoch_loss.size() == 5);
    for (double l : report.epoch_loss) CHECK(std::isfinite(l));
    for (double l : report.per_asset_loss) {
      CHECK(std::isfinite(l));
      CHECK(l >= 0.0);
    }
  }
}

TEST_CASE("mixed selection keeps both ends of the ranking") {
  std::vector<std::size_t> order{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};  // ascending loss
  std::vector<std::size_t> s = select_mixed(order, 4);
  // floor(0.7*4) = 2 from the head, the rest from the tail
  CHECK(s == std::vector<std::size_t>({0, 1, 8, 9}));
  CHECK(select_mixed(order, 10).size() == 10);
  CHECK_THROWS_AS(select_mixed(order, 11), ConfigError);
}

TEST_CASE("standardization leaves centered unit-variance columns") {
  Matrix R = noise_panel(40, 3, 75);
  for (std::size_t t = 0; t < 40; ++t) R(t, 1) = 5.0;  // flat column survives
  Matrix S = standardize_columns(R);
  for (std::size_t j = 0; j < 3; ++j) {
    Vector col = S.col(j);
    CHECK(mean(col) == Catch::Approx(0.0).margin(1e-12));
    if (j != 1) CHECK(sample_sd(col) == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("autoencoder tracking produces a valid portfolio per variant") {
  Rng rng(76);
  Matrix R = noise_panel(60, 6, 77);
  Vector I(60);
  for (std::size_t t = 0; t < 60; ++t) I[t] = 0.5 * R(t, 0) + 0.5 * R(t, 4);
  TrackingProblem p = TrackingProblem::make(std::move(R), std::move(I), 3);
  AeVariant v = AeVariant::sh();
  v.hidden = 3;
  TrainConfig cfg = quick_cfg(17);
  cfg.epochs = 10;
  Portfolio out = ae_track(p, v, cfg);
  CHECK(out.model == "SH-AE");
  double s = 0.0;
  for (double w : out.weights) {
    CHECK(w >= 0.0);
    s += w;
  }
  CHECK(s == Catch::Approx(1.0).margin(tol::simplex_sum));
  CHECK(out.support.size() <= 3);
  Portfolio again = ae_track(p, v, cfg);
  CHECK(again.weights == out.weights);
}

TEST_CASE("the sensitivity network finds a replicating asset") {
  Rng rng(78);
  const std::size_t T = 60, n = 6;
  Matrix R(T, n);
  for (double& v : R.data) v = rng.uniform(-0.02, 0.02);
  Vector I = R.col(0);
  TrackingProblem p = TrackingProblem::make(std::move(R), std::move(I), 1);
  TrainConfig cfg = dnn_config(3);
  cfg.epochs = 40;
  Portfolio out = dnn_track(p, cfg);
  CHECK(out.model == "DNN");
  REQUIRE(out.support.size() == 1);
  double s = 0.0;
  for (double w : out.weights) s += w;
  CHECK(s == Catch::Approx(1.0).margin(tol::simplex_sum));
}

TEST_CASE("fixed-noise tracker selects the index driver and stays feasible") {
  Rng rng(79);
  const std::size_t T = 60, n = 6;
  Matrix R(T, n);
  for (double& v : R.data) v = rng.uniform(-0.02, 0.02);
  Vector I = R.col(2);
  TrackingProblem p = TrackingProblem::make(std::move(R), std::move(I), 2);
  TrainConfig cfg = dnnf_config(3);
  cfg.epochs = 40;
  Portfolio out = dnnf_track(p, cfg);
  CHECK(out.model == "DNNF");
  double s = 0.0;
  for (double w : out.weights) {
    CHECK(w >= 0.0);
    s += w;
  }
  CHECK(s == Catch::Approx(1.0).margin(tol::simplex_sum));
  CHECK(out.support.size() <= 2);
  bool keeps_driver = false;
  for (std::size_t j : out.support) keeps_driver = keeps_driver || j == 2;
  CHECK(keeps_driver);
}
