#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "roadwatch/fault.hpp"
#include "roadwatch/threshold.hpp"

namespace roadwatch {

// Flat `key = value` experiment description. Relative paths are resolved
// against the directory of the config file.
struct ExperimentConfig {
  // Inputs. network = "grid" builds a grid_rows x grid_cols grid with
  // grid_sensors sensors; measurements = "synthetic" generates `horizon` steps.
  std::string network = "grid";
  std::size_t grid_rows = 5;
  std::size_t grid_cols = 5;
  std::size_t grid_sensors = 20;
  std::string measurements = "synthetic";
  std::size_t horizon = 576;
  double synthetic_noise = 0.05;
  std::int64_t cadence_s = 300;

  // First test timestep; earlier steps train the predictors.
  std::size_t split = 288;

  std::size_t d = 10;
  double b = 0.05;
  double p_f = 0.05;

  double grid_min = 0.01;
  double grid_max = 50.0;
  std::size_t grid_points = 64;
  std::size_t window = 12;
  std::size_t trials = 1000;

  double alpha = 1e-3;
  double gamma = 0.1;
  int restarts = 10;
  RestartSampling restart_sampling = RestartSampling::Anchored;
  int gp_restarts = 5;

  std::size_t queries_per_hour = 1000;
  std::string queries_file;  // CSV origin,destination; replaces random queries

  double delta = 50.0;
  std::uint64_t seed = 20160915;

  FaultKind fault_kind = FaultKind::ConditionalUndercount;
  std::string fault_scenario;  // JSON file; default staggers one episode per sensor
  std::size_t episode_length = 24;

  // Timestep (absolute) whose loss curves are exported for plotting; -1 = split.
  std::int64_t plot_timestep = -1;

  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
  std::size_t queries_per_step() const;
  std::size_t plot_step() const;

  // Throws ConfigError naming the offending key.
  void validate() const;

  // Canonical key = value text, keys sorted; used for the manifest echo.
  std::string to_text() const;
  std::map<std::string, std::string> to_map() const;
};

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace roadwatch
