#include "catch2/catch_amalgamated.hpp"
#include "trackkit/rng.hpp"
#include "trackkit/selection.hpp"
#include "trackkit/tracking.hpp"

using namespace trackkit;

namespace {

// Index is an exact 0.7/0.3 mix of assets 0 and 2 out of six noisy columns.
TrackingProblem mix_instance(std::size_t K) {
  Rng rng(31);
  const std::size_t T = 40, n = 6;
  Matrix R(T, n);
  for (double& v : R.data) v = rng.uniform(-0.02, 0.02);
  Vector I(T);
  for (std::size_t t = 0; t < T; ++t) I[t] = 0.7 * R(t, 0) + 0.3 * R(t, 2);
  return TrackingProblem::make(std::move(R), std::move(I), K);
}

}  // namespace

TEST_CASE("K covering the universe returns the full support") {
  TrackingProblem p = mix_instance(6);
  Portfolio out = solve_mse(p, SelectionStrategy::exact());
  CHECK(out.objective == Catch::Approx(0.0).margin(1e-12));
  CHECK(out.note.empty());

  p.K = 9;  // more than n
  Portfolio deg = solve_mse(p, SelectionStrategy::exact());
  CHECK(deg.note == "degenerate-K");
  CHECK(deg.warning);
}

TEST_CASE("enumeration finds the exact two-asset support") {
  TrackingProblem p = mix_instance(2);
  Portfolio out = solve_mse(p, SelectionStrategy::exact());
  REQUIRE(out.support == std::vector<std::size_t>{0, 2});
  CHECK(out.objective == Catch::Approx(0.0).margin(1e-10));
  CHECK(out.weights[0] == Catch::Approx(0.7).margin(1e-6));
  CHECK(out.weights[2] == Catch::Approx(0.3).margin(1e-6));
}

TEST_CASE("relaxation lands on the same support when it is already sparse") {
  TrackingProblem p = mix_instance(2);
  Portfolio out = solve_mse(p, SelectionStrategy::relax());
  CHECK(out.support == std::vector<std::size_t>{0, 2});
  CHECK(out.objective == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("swap search never lands above the relaxation heuristic") {
  Rng rng(55);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t T = 30, n = 7;
    Matrix R(T, n);
    for (double& v : R.data) v = rng.uniform(-0.02, 0.02);
    Vector I(T);
    for (std::size_t t = 0; t < T; ++t)
      I[t] = 0.4 * R(t, 1) + 0.4 * R(t, 3) + 0.2 * R(t, 5) + rng.uniform(-1e-4, 1e-4);
    TrackingProblem p = TrackingProblem::make(std::move(R), std::move(I), 3);
    double relax_obj = solve_mse(p, SelectionStrategy::relax()).objective;
    double swap_obj = solve_mse(p, SelectionStrategy::swap()).objective;
    double exact_obj = solve_mse(p, SelectionStrategy::exact()).objective;
    CHECK(swap_obj <= relax_obj + 1e-12);
    CHECK(exact_obj <= swap_obj + 1e-12);
  }
}

TEST_CASE("blown enumeration budget degrades with a note") {
  TrackingProblem p = mix_instance(2);
  SelectionStrategy s = SelectionStrategy::exact();
  s.enumerate_cap = 4;  // C(6,2) = 15 > 4
  Portfolio out = solve_mse(p, s);
  CHECK(out.note == "enumerate-cap-fallback");
  CHECK(out.warning);
  CHECK(out.support.size() <= 2);
}

TEST_CASE("expired deadline returns the incumbent flagged") {
  TrackingProblem p = mix_instance(2);
  Deadline dead(1e-9);
  while (!dead.expired()) {
  }
  Portfolio out = solve_mse(p, SelectionStrategy::swap(), dead);
  CHECK(out.note == "timeout");
  CHECK(out.support.size() <= 2);
}
