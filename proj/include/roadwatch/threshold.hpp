#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include <json.hpp>

#include "roadwatch/cusum.hpp"
#include "roadwatch/fault.hpp"
#include "roadwatch/network.hpp"
#include "roadwatch/tradeoff.hpp"

namespace roadwatch {

// Travel-time penalty of acting on the prediction when the measurement was
// right: the route planned with p_s, timed under the measured costs, minus the
// measured-cost optimum. Always >= 0.
double cost_fp(const RoadNetwork& network, const Query& query, SensorId sensor, const SpeedMap& measurements,
               double prediction, const SpeedClamp& clamp = {});

// Mirror image: the route planned with m_s timed under the predicted costs,
// minus the predicted-cost optimum.
double cost_fn(const RoadNetwork& network, const Query& query, SensorId sensor, const SpeedMap& measurements,
               double prediction, const SpeedClamp& clamp = {});

struct QueryCosts {
  double fp = 0.0;  // seconds
  double fn = 0.0;  // seconds
};

// Batch evaluation of both costs for one timestep. Routes under the measured
// cost map are shared across sensors and cached.
class CostEvaluator {
 public:
  CostEvaluator(const RoadNetwork& network, SpeedMap measurements, SpeedClamp clamp = {});

  std::vector<QueryCosts> evaluate(SensorId sensor, double prediction, std::span<const Query> queries);

 private:
  const Route& measured_route(const Query& q);

  const RoadNetwork* network_;
  SpeedMap measurements_;
  SpeedClamp clamp_;
  Router measured_;
  std::map<Query, Route> measured_routes_;
};

struct LossTerms {
  double c_fp = 0.0;
  double c_fn = 0.0;
  double fp_prob = 0.0;
  double fn_prob = 0.0;
  double p_f = kDefaultFaultProbability;
  double p_n = 1.0 - kDefaultFaultProbability;
};

// fp_prob * c_fp * p_n + fn_prob * c_fn * p_f
double query_loss(const LossTerms& terms);

// Sum of query_loss over the queries at one threshold.
double total_loss(const Threshold& eta, std::span<const QueryCosts> costs, const TradeoffCurve& curve,
                  const FaultPrior& prior);

// total_loss as a function of eta with the query sums folded in; the costs do
// not depend on eta, so L(eta) = fp(eta) * p_n * sum c_fp + fn(eta) * p_f * sum c_fn.
class LossFunction {
 public:
  LossFunction(const TradeoffCurve& curve, std::span<const QueryCosts> costs, const FaultPrior& prior);
  LossFunction(const TradeoffCurve& curve, double fp_cost_sum, double fn_cost_sum, const FaultPrior& prior);

  double operator()(double eta) const;
  double operator()(const Threshold& eta) const;

  const TradeoffCurve& curve() const { return *curve_; }
  double fp_weight() const { return fp_weight_; }
  double fn_weight() const { return fn_weight_; }

 private:
  const TradeoffCurve* curve_;
  double fp_weight_;
  double fn_weight_;
};

// Where the N restarts of find_threshold begin. Uniform draws N independent
// u ~ U[0,1]; Anchored starts one restart at u = 0 and stratifies the rest.
enum class RestartSampling { Anchored, Uniform };

struct OptimizerOptions {
  double tolerance = 1e-3;  // alpha: stop when |delta L| <= tolerance (seconds)
  double step = 0.1;        // gamma
  int restarts = 10;        // N
  int max_iterations = 10000;
  RestartSampling sampling = RestartSampling::Anchored;
};

struct ThresholdSolution {
  SensorId sensor;
  std::size_t timestep = 0;
  Threshold eta_star = Threshold::disabled();
  double loss_star = 0.0;
  int restarts_used = 0;
};

struct RestartRecord {
  double initial_eta = 0.0;
  double initial_loss = 0.0;
  double final_eta = 0.0;
  double final_loss = 0.0;
};

// Random-restart descent on the loss. |z| <= drift switches the detector off;
// otherwise each restart starts at fp_inverse(u) (u per OptimizerOptions::
// sampling; Anchored: u = 0 for restart 0, u ~ U[(r-1)/(N-1), r/(N-1)) for
// restart r > 0), follows
// eta <- eta - step * dL/deta (central difference, h = half the local grid
// spacing, projected onto the grid span) until |delta L| <= tolerance, and
// then settles on the nearest grid breakpoint local minimum (the loss is
// piecewise linear between breakpoints).
ThresholdSolution find_threshold(SensorId sensor, std::size_t timestep, double z, double drift,
                                 const LossFunction& loss, const OptimizerOptions& options, std::uint64_t seed,
                                 std::vector<RestartRecord>* restarts = nullptr);

// Per-timestep optimum over the grid breakpoints and the switched-off
// detector. This is the loss reported for timesteps where find_threshold
// skips the search.
double optimal_loss(const LossFunction& loss);

struct StaticBaseline {
  double eta = 0.0;
  double mean_loss = 0.0;
  std::vector<double> per_timestep;
};

// One threshold for the whole horizon: grid argmin of the summed loss, ties to
// the smallest eta. Requires at least one timestep, all on the same curve.
StaticBaseline static_baseline(std::span<const LossFunction> timesteps);

struct CriticalReport {
  double delta = 0.0;
  std::map<SensorId, double> average_loss;
  std::set<SensorId> critical;

  nlohmann::json to_json() const;
};

CriticalReport critical_sensors(const std::map<SensorId, double>& average_loss, double delta);

}  // namespace roadwatch
