#include <doctest.h>

#include <cmath>

#include "../support.hpp"
#include "roadwatch/error.hpp"
#include "roadwatch/threshold.hpp"

using namespace roadwatch;
using namespace roadwatch::testing;

namespace {

// fp = exp(-eta), fn = 1 - exp(-eta / 5) on the default grid: one interior
// minimum for the weights used below.
TradeoffCurve smooth_curve() {
  auto grid = log_spaced_grid();
  std::vector<double> fp, fn;
  for (double g : grid) {
    fp.push_back(std::exp(-g));
    fn.push_back(1.0 - std::exp(-g / 5.0));
  }
  return TradeoffCurve(grid, fp, fn, 12, 1000);
}

double dense_grid_min(const LossFunction& f, double lo, double hi, double* argmin = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  const int n = 200000;
  for (int i = 0; i <= n; ++i) {
    const double eta = lo + (hi - lo) * i / n;
    const double v = f(eta);
    if (v < best) {
      best = v;
      if (argmin) *argmin = eta;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("cost_fp / cost_fn on the diamond against enumerated routes") {
  RoadNetwork net = diamond(1100.0);
  const Query q{VertexId{1}, VertexId{4}};
  const SpeedMap measured{{SensorId{10}, 20.0}};
  const double prediction = 10.0;

  // Enumerate both routes: upper A-B-D (edges 1,2) and lower A-C-D (edges 3,4).
  const CostMap cm = edge_costs(net, measured);
  const CostMap cp = edge_costs(net, measured, {{SensorId{10}, prediction}});
  const double upper_m = cm[0] + cm[1], lower_m = cm[2] + cm[3];
  const double upper_p = cp[0] + cp[1], lower_p = cp[2] + cp[3];
  REQUIRE(upper_m < lower_m);  // measured optimum: upper
  REQUIRE(lower_p < upper_p);  // predicted optimum: lower
  CHECK(cost_fp(net, q, SensorId{10}, measured, prediction) == doctest::Approx(lower_m - upper_m));
  CHECK(cost_fn(net, q, SensorId{10}, measured, prediction) == doctest::Approx(upper_p - lower_p));
  CHECK(cost_fp(net, q, SensorId{10}, measured, prediction) == doctest::Approx(5.0));
  CHECK(cost_fn(net, q, SensorId{10}, measured, prediction) == doctest::Approx(45.0));

  CHECK(cost_fp(net, q, SensorId{10}, measured, 20.0) == 0.0);
  CHECK(cost_fn(net, q, SensorId{10}, measured, 20.0) == 0.0);
}

TEST_CASE("costs are non-negative on random instances") {
  Engine eng(31337);
  for (int t = 0; t < 100; ++t) {
    auto [net0, costs] = random_graph(eng, 12, 40);
    // attach sensors to every third edge
    std::vector<Edge> edges(net0.edges().begin(), net0.edges().end());
    SpeedMap speeds;
    for (std::size_t i = 0; i < edges.size(); i += 3) {
      edges[i].sensor = SensorId{100 + i};
      speeds[*edges[i].sensor] = uniform(eng, 2.0, 15.0);
    }
    RoadNetwork net(std::vector<Vertex>(net0.vertices().begin(), net0.vertices().end()), edges);
    CostEvaluator eval(net, speeds);
    std::vector<Query> queries;
    Router probe(net, edge_costs(net, speeds));
    for (int k = 0; k < 30; ++k) {
      Query q{VertexId{1 + uniform_index(eng, 12)}, VertexId{1 + uniform_index(eng, 12)}};
      if (probe.distance(q) != kUnreachable) queries.push_back(q);
    }
    for (const auto& [sensor, m] : speeds) {
      for (const QueryCosts& c : eval.evaluate(sensor, m * uniform(eng, 0.5, 1.5), queries)) {
        CHECK(c.fp >= 0.0);
        CHECK(c.fn >= 0.0);
      }
      for (const QueryCosts& c : eval.evaluate(sensor, m, queries)) {
        CHECK(c.fp == 0.0);
        CHECK(c.fn == 0.0);
      }
    }
  }
}

TEST_CASE("query_loss") {
  CHECK(query_loss({30, 50, 0, 0, 0.05, 0.95}) == 0.0);
  CHECK(query_loss({30, 50, 0.1, 0.2, 0.05, 0.95}) == doctest::Approx(3.35));
  CHECK(query_loss({30, 50, 0.1, 0.3, 0.05, 0.95}) > query_loss({30, 50, 0.1, 0.2, 0.05, 0.95}));
}

TEST_CASE("total_loss: empty, additive, matches an independent sum") {
  const TradeoffCurve curve = smooth_curve();
  const FaultPrior prior = fault_prior();
  CHECK(total_loss(Threshold::of(1.0), {}, curve, prior) == 0.0);
  const std::vector<QueryCosts> one{{12.0, 30.0}};
  const std::vector<QueryCosts> two{{12.0, 30.0}, {12.0, 30.0}};
  CHECK(total_loss(Threshold::of(1.3), two, curve, prior) ==
        doctest::Approx(2.0 * total_loss(Threshold::of(1.3), one, curve, prior)));

  Engine eng(5);
  std::vector<QueryCosts> costs;
  for (int i = 0; i < 40; ++i) costs.push_back({uniform(eng, 0, 20), uniform(eng, 0, 60)});
  const LossFunction f(curve, costs, prior);
  for (int t = 0; t < 50; ++t) {
    const double eta = uniform(eng, 0.02, 40.0);
    // locate the grid cell by linear scan and interpolate by hand
    const auto& g = curve.grid();
    std::size_t i = 0;
    while (g[i + 1] < eta) ++i;
    const double w = (eta - g[i]) / (g[i + 1] - g[i]);
    const double fp = curve.fp()[i] * (1 - w) + curve.fp()[i + 1] * w;
    const double fn = curve.fn()[i] * (1 - w) + curve.fn()[i + 1] * w;
    double expected = 0.0;
    for (const QueryCosts& c : costs) expected += fp * c.fp * 0.95 + fn * c.fn * 0.05;
    CHECK(total_loss(Threshold::of(eta), costs, curve, prior) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(f(eta) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("find_threshold: skip rule") {
  const TradeoffCurve curve = smooth_curve();
  const LossFunction f(curve, 100.0, 400.0, fault_prior());
  ThresholdSolution at_b = find_threshold(SensorId{1}, 0, 0.05, 0.05, f, {}, 1);
  CHECK(at_b.eta_star.is_disabled());
  CHECK(at_b.loss_star == doctest::Approx(400.0 * 0.05));
  CHECK(find_threshold(SensorId{1}, 0, -0.05, 0.05, f, {}, 1).eta_star.is_disabled());
  CHECK_FALSE(find_threshold(SensorId{1}, 0, 0.0500001, 0.05, f, {}, 1).eta_star.is_disabled());
}

TEST_CASE("find_threshold: single-minimum loss against a dense grid search") {
  const TradeoffCurve curve = smooth_curve();
  const LossFunction f(curve, 100.0, 400.0, fault_prior());
  double argmin = 0.0;
  const double best = dense_grid_min(f, curve.min_eta(), curve.max_eta(), &argmin);

  std::vector<RestartRecord> restarts;
  ThresholdSolution s = find_threshold(SensorId{1}, 3, 2.0, 0.05, f, {}, 77, &restarts);
  REQUIRE_FALSE(s.eta_star.is_disabled());
  CHECK(s.restarts_used == 10);
  CHECK(s.loss_star <= best * 1.01);
  const std::size_t cell = curve.cell(argmin);
  CHECK(s.eta_star.value() >= curve.grid()[cell == 0 ? 0 : cell - 1]);
  CHECK(s.eta_star.value() <= curve.grid()[std::min(cell + 2, curve.grid().size() - 1)]);
  CHECK(s.loss_star == doctest::Approx(f(s.eta_star)));
  REQUIRE(restarts.size() == 10);
  for (const RestartRecord& r : restarts) {
    CHECK(s.loss_star <= r.initial_loss + 1e-9);
    CHECK(r.final_loss <= r.initial_loss + 1e-9);
  }
}

TEST_CASE("find_threshold is deterministic given the seed") {
  const TradeoffCurve curve = smooth_curve();
  const LossFunction f(curve, 50.0, 900.0, fault_prior());
  ThresholdSolution a = find_threshold(SensorId{4}, 8, -1.0, 0.05, f, {}, 5);
  ThresholdSolution b = find_threshold(SensorId{4}, 8, -1.0, 0.05, f, {}, 5);
  CHECK(a.eta_star == b.eta_star);
  CHECK(a.loss_star == b.loss_star);
}

TEST_CASE("static_baseline: single timestep and dominance by the dynamic optimum") {
  const TradeoffCurve curve = smooth_curve();
  const FaultPrior prior = fault_prior();
  std::vector<LossFunction> one{LossFunction(curve, 100.0, 400.0, prior)};
  StaticBaseline s1 = static_baseline(one);
  ThresholdSolution d1 = find_threshold(SensorId{1}, 0, 3.0, 0.05, one[0], {}, 1);
  CHECK(s1.mean_loss == doctest::Approx(d1.loss_star).epsilon(1e-9));

  Engine eng(12);
  std::vector<LossFunction> many;
  double dynamic = 0.0;
  for (int k = 0; k < 40; ++k) {
    many.emplace_back(curve, uniform(eng, 0, 300), uniform(eng, 0, 3000), prior);
    dynamic += find_threshold(SensorId{1}, static_cast<std::size_t>(k), 1.0, 0.05, many.back(), {}, 9).loss_star;
  }
  StaticBaseline s = static_baseline(many);
  CHECK(dynamic / 40.0 <= s.mean_loss + 1e-9);
  CHECK(s.per_timestep.size() == 40);
  CHECK_THROWS(static_baseline({}));
}

TEST_CASE("critical_sensors on a reference average-loss table") {
  const std::map<SensorId, double> undercount{{SensorId{774685}, 16.2},
                                              {SensorId{774672}, 18.0},
                                              {SensorId{772501}, 15.6},
                                              {SensorId{763453}, 51.8},
                                              {SensorId{737158}, 43.0}};
  const std::map<SensorId, double> overcount{{SensorId{774685}, 30.0},
                                             {SensorId{774672}, 22.1},
                                             {SensorId{772501}, 12.8},
                                             {SensorId{763453}, 57.5},
                                             {SensorId{737158}, 54.8}};
  CHECK(critical_sensors(undercount, 50.0).critical == std::set<SensorId>{SensorId{763453}});
  CHECK(critical_sensors(overcount, 50.0).critical == std::set<SensorId>{SensorId{763453}, SensorId{737158}});
  CHECK(critical_sensors(undercount, 0.0).critical.size() == 5);
  CHECK(critical_sensors(undercount, 51.8).critical == std::set<SensorId>{SensorId{763453}});
  CHECK_THROWS(critical_sensors(undercount, -1.0));

  const auto doc = critical_sensors(overcount, 50.0).to_json();
  CHECK(doc["delta"] == 50.0);
  CHECK(doc["sensors"].size() == 5);
}
