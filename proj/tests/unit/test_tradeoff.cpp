#include <doctest.h>

#include <cmath>
#include <sstream>

#include "roadwatch/error.hpp"
#include "roadwatch/rng.hpp"
#include "roadwatch/tradeoff.hpp"

using namespace roadwatch;

namespace {

// Actual ~ 20 + 0.5 N(0,1) against a predictor that says 20 +- 0.5, so normal
// residuals are standard normal.
HeldOutPredictions gaussian_held_out(std::size_t n, std::uint64_t seed) {
  Engine eng(seed);
  HeldOutPredictions h;
  for (std::size_t k = 0; k < n; ++k) {
    h.actual.push_back(20.0 + 0.5 * standard_normal(eng));
    h.mean.push_back(20.0);
    h.std.push_back(0.5);
  }
  return h;
}

TradeoffCurve toy_curve() {
  return TradeoffCurve({1.0, 2.0, 3.0, 4.0}, {1.0, 0.4, 0.2, 0.0}, {0.0, 0.1, 0.5, 0.9}, 12, 100);
}

}  // namespace

TEST_CASE("log_spaced_grid defaults") {
  auto g = log_spaced_grid();
  CHECK(g.size() == 64);
  CHECK(g.front() == 0.01);
  CHECK(g.back() == 50.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  CHECK(g[1] / g[0] == doctest::Approx(g[63] / g[62]));
}

TEST_CASE("interpolation, extrapolation and the disabled sentinel") {
  TradeoffCurve c = toy_curve();
  CHECK(c.fp_at(2.0) == 0.4);
  CHECK(c.fn_at(3.0) == 0.5);
  CHECK(c.fp_at(2.5) == doctest::Approx(0.3));
  CHECK(c.fn_at(2.5) == doctest::Approx(0.3));
  CHECK(c.fp_at(0.1) == 1.0);
  CHECK(c.fn_at(0.1) == 0.0);
  CHECK(c.fp_at(99.0) == 0.0);
  CHECK(c.fn_at(99.0) == 0.9);
  CHECK(c.fp_at(Threshold::disabled()) == 0.0);
  CHECK(c.fn_at(Threshold::disabled()) == 1.0);
}

TEST_CASE("fp_inverse") {
  TradeoffCurve c = toy_curve();
  CHECK(c.fp_inverse(0.0) == 4.0);
  CHECK(c.fp_inverse(1.0) == 1.0);
  CHECK(c.fp_inverse(0.3) == doctest::Approx(2.5));
  // stored values map back to their grid point; flat runs resolve to the smallest eta
  TradeoffCurve flat({1.0, 2.0, 3.0, 4.0}, {0.9, 0.5, 0.5, 0.0}, {0.0, 0.1, 0.2, 0.3}, 12, 100);
  for (std::size_t i = 0; i < flat.grid().size(); ++i) {
    // direct scan oracle
    double expected = flat.grid().back();
    for (std::size_t j = 0; j < flat.grid().size(); ++j)
      if (flat.fp()[j] <= flat.fp()[i]) {
        expected = flat.grid()[j];
        break;
      }
    CHECK(flat.fp_inverse(flat.fp()[i]) == expected);
  }
  CHECK(flat.fp_inverse(0.5) == 2.0);
}

TEST_CASE("curve construction rejects non-monotone or out-of-range data") {
  CHECK_THROWS_AS(TradeoffCurve({1, 2}, {0.2, 0.3}, {0, 0}, 1, 100), InsufficientData);
  CHECK_THROWS_AS(TradeoffCurve({1, 2}, {0.3, 0.2}, {0.5, 0.4}, 1, 100), InsufficientData);
  CHECK_THROWS_AS(TradeoffCurve({2, 1}, {0.3, 0.2}, {0.4, 0.5}, 1, 100), InsufficientData);
  CHECK_THROWS_AS(TradeoffCurve({1}, {0.3}, {0.4}, 1, 100), InsufficientData);
  CHECK_THROWS_AS(TradeoffCurve({1, 2}, {1.3, 0.2}, {0.4, 0.5}, 1, 100), InsufficientData);
}

TEST_CASE("estimate_curve: boundary behaviour and invariants") {
  const HeldOutPredictions normal = gaussian_held_out(300, 1);
  const std::vector<FaultModel> faults{FaultModel::undercount(0, 0)};
  const TradeoffCurve c = estimate_curve(normal, faults, {}, 42);
  CHECK(c.fp().front() == 1.0);
  CHECK(c.fp().back() == 0.0);
  for (std::size_t i = 1; i < c.grid().size(); ++i) {
    CHECK(c.fp()[i] <= c.fp()[i - 1]);
    CHECK(c.fn()[i] >= c.fn()[i - 1]);
  }
  for (int k = 0; k <= 100; ++k) {
    const double u = k / 100.0;
    CHECK(c.fp_at(c.fp_inverse(u)) <= u + 1.0 / static_cast<double>(c.trials()));
  }
  CHECK(estimate_curve(normal, faults, {}, 42).fp() == c.fp());
  CHECK(estimate_curve(normal, faults, {}, 42).fn() == c.fn());
}

TEST_CASE("estimate_curve: larger faults are missed less often") {
  const HeldOutPredictions normal = gaussian_held_out(300, 2);
  const std::vector<FaultModel> small{FaultModel::overcount(0, 0, 0.01, 0.01)};
  const std::vector<FaultModel> large{FaultModel::overcount(0, 0, 0.05, 0.05)};
  const TradeoffCurve a = estimate_curve(normal, small, {}, 7);
  const TradeoffCurve b = estimate_curve(normal, large, {}, 7);
  for (std::size_t i = 0; i < a.grid().size(); ++i) CHECK(a.fn()[i] >= b.fn()[i]);
}

TEST_CASE("estimate_curve: four times the trials moves the curve by less than 3/sqrt(trials)") {
  const HeldOutPredictions normal = gaussian_held_out(400, 3);
  const std::vector<FaultModel> faults{FaultModel::overcount(0, 0), FaultModel::undercount(0, 0)};
  CurveOptions base;
  base.trials = 400;
  CurveOptions more = base;
  more.trials = 1600;
  const TradeoffCurve a = estimate_curve(normal, faults, base, 11);
  const TradeoffCurve b = estimate_curve(normal, faults, more, 12);
  const double bound = 3.0 / std::sqrt(400.0);
  for (std::size_t i = 0; i < a.grid().size(); ++i) {
    CHECK(std::abs(a.fp()[i] - b.fp()[i]) < bound);
    CHECK(std::abs(a.fn()[i] - b.fn()[i]) < bound);
  }
}

TEST_CASE("estimate_curve: input checks") {
  const HeldOutPredictions normal = gaussian_held_out(10, 4);
  const std::vector<FaultModel> faults{FaultModel::overcount(0, 0)};
  CHECK_THROWS_AS(estimate_curve(normal, faults, {}, 1), InsufficientData);  // shorter than W = 12
  CurveOptions few;
  few.window = 5;
  few.trials = 50;
  CHECK_THROWS_AS(estimate_curve(normal, faults, few, 1), InsufficientData);
  few.trials = 100;
  CHECK_THROWS_AS(estimate_curve(normal, {}, few, 1), InsufficientData);
  CHECK_NOTHROW(estimate_curve(normal, faults, few, 1));
}

TEST_CASE("curves CSV round trip") {
  std::map<SensorId, TradeoffCurve> curves{{SensorId{9}, toy_curve()}, {SensorId{2}, toy_curve()}};
  std::stringstream ss;
  write_curves_csv(ss, curves);
  auto back = read_curves_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back.at(SensorId{9}).fp() == toy_curve().fp());
  CHECK(back.at(SensorId{2}).fn() == toy_curve().fn());
  std::stringstream bad("eta,fp\n");
  CHECK_THROWS_AS(read_curves_csv(bad), ArtifactError);
}
