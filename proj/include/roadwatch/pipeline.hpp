#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "roadwatch/config.hpp"
#include "roadwatch/cusum.hpp"
#include "roadwatch/fault.hpp"
#include "roadwatch/gp.hpp"
#include "roadwatch/measurements.hpp"
#include "roadwatch/network.hpp"
#include "roadwatch/threshold.hpp"
#include "roadwatch/tradeoff.hpp"

namespace roadwatch {

// Artifact file names under the output directory.
namespace artifact {
inline constexpr const char* kModels = "models.json";
inline constexpr const char* kCurves = "curves.csv";
inline constexpr const char* kTrace = "trace.csv";
inline constexpr const char* kLossReport = "loss_report.csv";
inline constexpr const char* kCosts = "costs.csv";
inline constexpr const char* kCritical = "critical.json";
inline constexpr const char* kScenario = "scenario.json";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kPlotsDir = "plots";
}  // namespace artifact

inline constexpr const char* kTraceHeader = "timestep,sensor_id,z,U,L,eta,decision";
inline constexpr const char* kLossReportHeader = "timestep,sensor_id,eta_star,loss_star,eta_static,loss_static";
inline constexpr const char* kCostsHeader = "timestep,sensor_id,z,queries,c_fp_sum,c_fn_sum";

// One sensor at one test timestep.
struct StepRecord {
  std::size_t timestep = 0;
  SensorId sensor;
  double measured = 0.0;
  double mean = 0.0;
  double std = 0.0;
  double z = 0.0;
  std::size_t queries = 0;
  double fp_cost_sum = 0.0;  // seconds, summed over the timestep's queries
  double fn_cost_sum = 0.0;
  Threshold eta_star = Threshold::disabled();
  double loss_star = 0.0;
  double eta_static = 0.0;
  double loss_static = 0.0;
  DetectorState detector;  // after this step's update, before any reset
  Decision decision = Decision::Normal;
};

struct SensorSummary {
  double mean_dynamic_loss = 0.0;
  double mean_static_loss = 0.0;
  double eta_static = 0.0;
  std::size_t alarms = 0;
  std::size_t fault_steps = 0;  // test steps inside an injected episode
};

// Measurements -> predictors -> trade-off curves -> per-timestep thresholds ->
// detectors, for one configuration. Stages run in order; each one runs the
// stages it depends on if they have not run yet.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const RoadNetwork& network() const { return network_; }
  const MeasurementStore& actual() const { return actual_; }
  const MeasurementStore& measured() const { return measured_; }
  const std::vector<ScenarioEntry>& scenario() const { return scenario_; }
  const std::vector<Query>& fixed_queries() const { return fixed_queries_; }

  void fit_models();
  void estimate_curves();
  void optimize();

  const std::map<SensorId, GpModel>& models() const { return models_; }
  const std::map<SensorId, TradeoffCurve>& curves() const { return curves_; }
  const std::vector<StepRecord>& records() const { return records_; }
  const std::map<SensorId, SensorSummary>& summaries() const { return summaries_; }
  CriticalReport critical() const;

  // Queries issued at test timestep k.
  std::vector<Query> queries_at(std::size_t k) const;

  // Predictor inputs (rows = timesteps, columns = neighbors) from the measured data.
  Eigen::MatrixXd neighbor_matrix(SensorId sensor, std::span<const std::size_t> timesteps) const;

  // Inputs hashed into the manifest: name -> FNV-1a hex digest.
  const std::map<std::string, std::string>& input_hashes() const { return input_hashes_; }

 private:
  std::vector<std::size_t> training_rows(bool fit_rows) const;

  ExperimentConfig config_;
  RoadNetwork network_;
  MeasurementStore actual_;
  MeasurementStore measured_;
  std::vector<ScenarioEntry> scenario_;
  std::vector<Query> fixed_queries_;
  std::vector<VertexId> vertex_ids_;
  std::map<std::string, std::string> input_hashes_;

  std::map<SensorId, GpModel> models_;
  std::map<SensorId, TradeoffCurve> curves_;
  std::vector<StepRecord> records_;
  std::map<SensorId, SensorSummary> summaries_;
};

// Default fault scenario: one episode per sensor of the configured kind,
// staggered across the test period.
std::vector<ScenarioEntry> default_scenario(const std::vector<SensorId>& sensors, FaultKind kind,
                                            std::size_t split, std::size_t horizon, std::size_t episode_length,
                                            std::uint64_t seed);

std::string fnv1a_hex(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

enum class Stage { Fit, Curves, Optimize, Simulate };

// Runs the experiment through `stage` and writes that stage's artifacts plus
// the manifest under `out`. Progress goes to `log`.
void run_stage(const ExperimentConfig& config, Stage stage, const std::filesystem::path& out, std::ostream& log);

// Full run: every artifact, the plot bundle and the manifest.
void run_experiment(const ExperimentConfig& config, const std::filesystem::path& out, std::ostream& log);

// Rebuilds critical.json from loss_report.csv with the given delta.
CriticalReport report_from_artifacts(const std::filesystem::path& out, double delta);

// Reads curves.csv, costs.csv and loss_report.csv from `out` and writes
//   plots/tradeoff_<sensor>.csv  eta,fn,fp (ascending eta)
//   plots/loss_<sensor>_k<k>.csv eta,loss at timestep k (grid breakpoints)
// Throws ArtifactError if an input is missing.
void emit_plots_data(const std::filesystem::path& out, std::size_t timestep, double p_f);

// Writes network.json, measurements.csv and scenario.json for a synthetic setup.
void write_synthetic_inputs(const ExperimentConfig& config, const std::filesystem::path& out);

}  // namespace roadwatch
