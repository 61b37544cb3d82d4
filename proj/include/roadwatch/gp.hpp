#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "roadwatch/ids.hpp"
#include "roadwatch/network.hpp"

namespace roadwatch {

// ARD squared-exponential hyperparameters. The optimizer works on the log of
// each value, ordered [log l_1 .. log l_d, log signal_std, log noise_std].
struct Hyperparameters {
  double signal_std = 1.0;
  Eigen::VectorXd length_scales;
  double noise_std = 0.1;

  std::size_t dimension() const { return static_cast<std::size_t>(length_scales.size()); }
  void validate() const;

  Eigen::VectorXd to_log() const;
  static Hyperparameters from_log(const Eigen::VectorXd& log_params);
};

double ard_se_kernel(std::span<const double> x, std::span<const double> x_prime, const Hyperparameters& hyper);

// Noise-free covariance matrix over the rows of `inputs`.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& inputs, const Hyperparameters& hyper);

// Diagonal jitter tried, in order, until the Cholesky factorization succeeds.
inline constexpr std::array<double, 4> kJitterSchedule{0.0, 1e-6, 1e-4, 1e-2};

struct LikelihoodEval {
  double value = 0.0;
  Eigen::VectorXd gradient;  // d value / d log-params
  double jitter = 0.0;
};

// Log marginal likelihood of (already centered) targets with its analytic
// gradient in log-parameter space, at a fixed jitter. Empty if the regularized
// kernel matrix is not positive definite.
std::optional<LikelihoodEval> log_marginal_likelihood(const Eigen::MatrixXd& inputs,
                                                      const Eigen::VectorXd& targets,
                                                      const Hyperparameters& hyper, double jitter);

// Same, escalating through kJitterSchedule. Throws IllConditioned.
LikelihoodEval log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                       const Hyperparameters& hyper);

enum class PriorMean { Zero, TrainingMean };

struct Prediction {
  double mean = 0.0;
  double std = 0.0;
};

struct FitOptions {
  int restarts = 5;
  std::uint64_t seed = 0;
  int max_iterations = 500;
  double tolerance = 1e-6;  // on the change in log marginal likelihood
  double initial_step = 0.1;
  PriorMean prior_mean = PriorMean::TrainingMean;
};

struct RestartSummary {
  Eigen::VectorXd initial_log_params;
  double initial_value = 0.0;
  double final_value = 0.0;
  int iterations = 0;
};

// Row count plus FNV-1a checksum over the raw training data.
struct DataDigest {
  std::size_t rows = 0;
  std::uint64_t checksum = 0;
  friend bool operator==(const DataDigest&, const DataDigest&) = default;
};

DataDigest digest(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets);

inline constexpr std::size_t kMaxTrainingRows = 2016;

class GpModel {
 public:
  // Factorizes the regularized kernel matrix for fixed hyperparameters.
  static GpModel build(Eigen::MatrixXd inputs, Eigen::VectorXd targets, Hyperparameters hyper,
                       PriorMean prior_mean = PriorMean::TrainingMean);

  // Quasi-Newton (BFGS) ascent on the log marginal likelihood from `restarts`
  // random log-space initializations; keeps the best.
  static GpModel fit(Eigen::MatrixXd inputs, Eigen::VectorXd targets, const FitOptions& options = {},
                     std::vector<RestartSummary>* diagnostics = nullptr);

  Prediction predict(std::span<const double> x) const;
  Prediction predict(const Eigen::VectorXd& x) const { return predict(std::span(x.data(), x.size())); }

  // Attach the predictor sensors (one per input column) and the target sensor.
  GpModel with_sensors(std::vector<SensorId> neighbors, SensorId target) const;

  const Hyperparameters& hyper() const { return hyper_; }
  const Eigen::MatrixXd& train_inputs() const { return inputs_; }
  const Eigen::VectorXd& train_targets() const { return targets_; }  // centered
  double target_mean() const { return target_mean_; }
  PriorMean prior_mean() const { return prior_mean_; }
  const Eigen::MatrixXd& factor() const { return factor_; }  // lower triangular
  double jitter() const { return jitter_; }
  double log_likelihood() const { return log_likelihood_; }
  const std::vector<SensorId>& neighbor_ids() const { return neighbors_; }
  std::optional<SensorId> target_sensor() const { return target_; }

  // Persistence: hyperparameters and metadata only; the training data is
  // supplied again on load and checked against the stored digest.
  nlohmann::json to_json() const;
  static GpModel from_json(const nlohmann::json& doc, Eigen::MatrixXd inputs, Eigen::VectorXd targets);

 private:
  Hyperparameters hyper_;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  double target_mean_ = 0.0;
  PriorMean prior_mean_ = PriorMean::TrainingMean;
  Eigen::MatrixXd factor_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
  double log_likelihood_ = 0.0;
  DataDigest digest_;
  std::vector<SensorId> neighbors_;
  std::optional<SensorId> target_;
};

// The d sensors nearest to `sensor` (edge midpoint great-circle distance),
// nearest first, ties by SensorId. Throws InsufficientSensors.
std::vector<SensorId> select_neighbors(const RoadNetwork& network, SensorId sensor, std::size_t d);

inline constexpr std::size_t kDefaultNeighborCount = 10;

}  // namespace roadwatch
