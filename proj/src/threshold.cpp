#include "roadwatch/threshold.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <stdexcept>

#include "roadwatch/rng.hpp"

namespace roadwatch {

namespace {

double checked_nonnegative(double v) {
  // Differences of optima can come out at -1e-13 from summation order.
  return v < 0.0 && v > -1e-9 ? 0.0 : v;
}

}  // namespace

CostEvaluator::CostEvaluator(const RoadNetwork& network, SpeedMap measurements, SpeedClamp clamp)
    : network_(&network),
      measurements_(std::move(measurements)),
      clamp_(clamp),
      measured_(network, edge_costs(network, measurements_, {}, clamp_)) {}

const Route& CostEvaluator::measured_route(const Query& q) {
  auto it = measured_routes_.find(q);
  if (it == measured_routes_.end()) it = measured_routes_.emplace(q, measured_.route(q)).first;
  return it->second;
}

std::vector<QueryCosts> CostEvaluator::evaluate(SensorId sensor, double prediction, std::span<const Query> queries) {
  Router predicted(*network_, edge_costs(*network_, measurements_, {{sensor, prediction}}, clamp_));
  std::vector<QueryCosts> out;
  out.reserve(queries.size());
  for (const Query& q : queries) {
    const Route& by_measured = measured_route(q);
    const Route by_predicted = predicted.route(q);
    QueryCosts c;
    c.fp = checked_nonnegative(route_travel_time(*network_, by_predicted, measured_.costs()) -
                               route_travel_time(*network_, by_measured, measured_.costs()));
    c.fn = checked_nonnegative(route_travel_time(*network_, by_measured, predicted.costs()) -
                               route_travel_time(*network_, by_predicted, predicted.costs()));
    out.push_back(c);
  }
  return out;
}

double cost_fp(const RoadNetwork& network, const Query& query, SensorId sensor, const SpeedMap& measurements,
               double prediction, const SpeedClamp& clamp) {
  CostEvaluator eval(network, measurements, clamp);
  return eval.evaluate(sensor, prediction, std::span(&query, 1)).front().fp;
}

double cost_fn(const RoadNetwork& network, const Query& query, SensorId sensor, const SpeedMap& measurements,
               double prediction, const SpeedClamp& clamp) {
  CostEvaluator eval(network, measurements, clamp);
  return eval.evaluate(sensor, prediction, std::span(&query, 1)).front().fn;
}

double query_loss(const LossTerms& t) { return t.fp_prob * t.c_fp * t.p_n + t.fn_prob * t.c_fn * t.p_f; }

double total_loss(const Threshold& eta, std::span<const QueryCosts> costs, const TradeoffCurve& curve,
                  const FaultPrior& prior) {
  const double fp = curve.fp_at(eta);
  const double fn = curve.fn_at(eta);
  double sum = 0.0;
  for (const QueryCosts& c : costs) sum += query_loss({c.fp, c.fn, fp, fn, prior.p_fault, prior.p_normal});
  return sum;
}

LossFunction::LossFunction(const TradeoffCurve& curve, std::span<const QueryCosts> costs, const FaultPrior& prior)
    : curve_(&curve), fp_weight_(0.0), fn_weight_(0.0) {
  double fp = 0.0;
  double fn = 0.0;
  for (const QueryCosts& c : costs) {
    fp += c.fp;
    fn += c.fn;
  }
  fp_weight_ = fp * prior.p_normal;
  fn_weight_ = fn * prior.p_fault;
}

LossFunction::LossFunction(const TradeoffCurve& curve, double fp_cost_sum, double fn_cost_sum,
                           const FaultPrior& prior)
    : curve_(&curve), fp_weight_(fp_cost_sum * prior.p_normal), fn_weight_(fn_cost_sum * prior.p_fault) {}

double LossFunction::operator()(double eta) const {
  return curve_->fp_at(eta) * fp_weight_ + curve_->fn_at(eta) * fn_weight_;
}

double LossFunction::operator()(const Threshold& eta) const {
  return curve_->fp_at(eta) * fp_weight_ + curve_->fn_at(eta) * fn_weight_;
}

namespace {

struct Point {
  double eta;
  double loss;
};

Point descend(const LossFunction& f, double eta, const OptimizerOptions& opt) {
  const TradeoffCurve& curve = f.curve();
  const double lo = curve.min_eta();
  const double hi = curve.max_eta();
  const auto& grid = curve.grid();
  double loss = f(eta);
  double step = opt.step;

  for (int it = 0; it < opt.max_iterations; ++it) {
    const std::size_t c = curve.cell(eta);
    const double h = 0.5 * (grid[c + 1] - grid[c]);
    const double a = std::max(lo, eta - h);
    const double b = std::min(hi, eta + h);
    const double slope = (f(b) - f(a)) / (b - a);
    const double candidate = std::clamp(eta - step * slope, lo, hi);
    const double next = f(candidate);
    if (next > loss) {
      // Overshoot: halve the step and retry from the same point.
      step *= 0.5;
      if (step < 1e-12) break;
      continue;
    }
    const double change = loss - next;
    eta = candidate;
    loss = next;
    if (change <= opt.tolerance) break;
  }

  // The minimum over a linear piece sits at one of its ends; walk the
  // breakpoints downhill from the enclosing cell. Flat stretches are crossed
  // (sample-count steps in Monte Carlo curves make them common) as long as
  // the walk reaches a strictly lower breakpoint before rising more than the
  // tolerance above the current best.
  std::size_t i = curve.cell(eta);
  if (f(grid[i + 1]) < f(grid[i])) ++i;
  double best = f(grid[i]);
  if (best > loss) return {eta, loss};
  auto lower_along = [&](std::ptrdiff_t dir) -> std::optional<std::size_t> {
    for (auto j = static_cast<std::ptrdiff_t>(i) + dir; j >= 0 && j < static_cast<std::ptrdiff_t>(grid.size());
         j += dir) {
      const double v = f(grid[static_cast<std::size_t>(j)]);
      if (v < best) return static_cast<std::size_t>(j);
      if (v > best + opt.tolerance) break;
    }
    return std::nullopt;
  };
  while (true) {
    auto next = lower_along(-1);
    if (!next) next = lower_along(+1);
    if (!next) break;
    i = *next;
    best = f(grid[i]);
  }
  return {grid[i], best};
}

}  // namespace

ThresholdSolution find_threshold(SensorId sensor, std::size_t timestep, double z, double drift,
                                 const LossFunction& loss, const OptimizerOptions& options, std::uint64_t seed,
                                 std::vector<RestartRecord>* restarts) {
  if (!(options.tolerance > 0.0) || !(options.step > 0.0) || options.restarts < 1)
    throw std::invalid_argument("optimizer needs tolerance > 0, step > 0 and at least one restart");

  ThresholdSolution sol;
  sol.sensor = sensor;
  sol.timestep = timestep;
  if (std::abs(z) <= drift) {
    sol.eta_star = Threshold::disabled();
    sol.loss_star = loss(sol.eta_star);
    return sol;
  }

  Engine eng(derive_seed(seed, "threshold-restarts", {sensor.value, timestep}));
  std::optional<Point> best;
  for (int r = 0; r < options.restarts; ++r) {
    double u = uniform01(eng);
    if (options.sampling == RestartSampling::Anchored) {
      // Restart 0 starts where fp first reaches 0; the others are stratified
      // so every fp band of width 1/(N-1) gets a starting point.
      const double strata = static_cast<double>(std::max(1, options.restarts - 1));
      u = r == 0 ? 0.0 : (static_cast<double>(r - 1) + u) / strata;
    }
    const double start = loss.curve().fp_inverse(u);
    const Point p = descend(loss, start, options);
    if (restarts) restarts->push_back({start, loss(start), p.eta, p.loss});
    if (!best || p.loss < best->loss || (p.loss == best->loss && p.eta < best->eta)) best = p;
    ++sol.restarts_used;
  }
  sol.eta_star = Threshold::of(best->eta);
  sol.loss_star = best->loss;
  return sol;
}

double optimal_loss(const LossFunction& loss) {
  double best = loss(Threshold::disabled());
  for (double eta : loss.curve().grid()) best = std::min(best, loss(eta));
  return best;
}

StaticBaseline static_baseline(std::span<const LossFunction> timesteps) {
  if (timesteps.empty()) throw std::invalid_argument("static baseline needs at least one timestep");
  const TradeoffCurve& curve = timesteps.front().curve();
  double fp_w = 0.0;
  double fn_w = 0.0;
  for (const LossFunction& f : timesteps) {
    fp_w += f.fp_weight();
    fn_w += f.fn_weight();
  }
  StaticBaseline out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curve.grid().size(); ++i) {
    const double total = curve.fp()[i] * fp_w + curve.fn()[i] * fn_w;
    if (total < best) {
      best = total;
      out.eta = curve.grid()[i];
    }
  }
  double sum = 0.0;
  for (const LossFunction& f : timesteps) {
    out.per_timestep.push_back(f(out.eta));
    sum += out.per_timestep.back();
  }
  out.mean_loss = sum / static_cast<double>(timesteps.size());
  return out;
}

nlohmann::json CriticalReport::to_json() const {
  nlohmann::json sensors = nlohmann::json::array();
  for (const auto& [id, avg] : average_loss)
    sensors.push_back({{"id", id.value}, {"avg_loss", avg}, {"critical", critical.contains(id)}});
  return {{"delta", delta}, {"sensors", std::move(sensors)}};
}

CriticalReport critical_sensors(const std::map<SensorId, double>& average_loss, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be non-negative");
  CriticalReport r;
  r.delta = delta;
  r.average_loss = average_loss;
  for (const auto& [id, avg] : average_loss)
    if (avg >= delta) r.critical.insert(id);
  return r;
}

}  // namespace roadwatch
