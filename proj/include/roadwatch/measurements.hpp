#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "roadwatch/ids.hpp"
#include "roadwatch/network.hpp"

namespace roadwatch {

inline constexpr std::int64_t kDefaultCadenceS = 300;

// Rectangular sensor x timestep matrix of speeds (m/s) at a fixed cadence.
class MeasurementStore {
 public:
  MeasurementStore() = default;
  MeasurementStore(std::vector<SensorId> sensors, std::size_t timesteps, std::int64_t start_time = 0,
                   std::int64_t cadence_s = kDefaultCadenceS);

  const std::vector<SensorId>& sensors() const { return sensors_; }
  std::size_t sensor_count() const { return sensors_.size(); }
  std::size_t timesteps() const { return timesteps_; }
  std::int64_t start_time() const { return start_time_; }
  std::int64_t cadence_s() const { return cadence_s_; }

  bool has_sensor(SensorId s) const { return row_.contains(s); }
  std::span<const double> series(SensorId s) const;
  std::span<double> series(SensorId s);
  double at(SensorId s, std::size_t k) const { return series(s)[k]; }

  // All sensors' values at timestep k.
  SpeedMap snapshot(std::size_t k) const;

  // timestamp,sensor_id,value_mps in timestamp order, then sensor order.
  void write_csv(std::ostream& out) const;

  friend bool operator==(const MeasurementStore& a, const MeasurementStore& b) {
    return a.sensors_ == b.sensors_ && a.timesteps_ == b.timesteps_ && a.start_time_ == b.start_time_ &&
           a.cadence_s_ == b.cadence_s_ && a.values_ == b.values_;
  }

 private:
  std::vector<SensorId> sensors_;
  std::unordered_map<SensorId, std::size_t> row_;
  std::size_t timesteps_ = 0;
  std::int64_t start_time_ = 0;
  std::int64_t cadence_s_ = kDefaultCadenceS;
  std::vector<double> values_;  // row-major, sensor x timestep
};

inline constexpr std::size_t kMaxGapFill = 2;

// Reads `timestamp,sensor_id,value_mps`. Timestamps are epoch seconds or
// `YYYY-MM-DD HH:MM:SS` / `MM/DD/YYYY HH:MM:SS` (UTC). Rows are bucketed to the
// cadence (duplicates averaged); gaps of up to two steps are linearly
// interpolated (or copied from the nearest sample at the series ends); longer
// gaps are errors. With a network, unknown sensor ids are rejected.
MeasurementStore parse_measurements(std::istream& in, const RoadNetwork* network = nullptr,
                                    std::int64_t cadence_s = kDefaultCadenceS);
MeasurementStore load_measurements(const std::filesystem::path& path, const RoadNetwork* network = nullptr,
                                   std::int64_t cadence_s = kDefaultCadenceS);

std::int64_t parse_timestamp(const std::string& text);
std::string format_timestamp(std::int64_t epoch_s);

struct SyntheticOptions {
  double mean_ratio = 0.7;           // mean speed / free-flow
  double daily_amplitude = 0.2;      // sinusoid amplitude / free-flow
  std::size_t period = 288;          // steps per day
  double field_ratio = 0.05;         // spatial field std / free-flow
  double field_length_m = 800.0;     // spatial correlation length
  double field_persistence = 0.9;    // AR(1) coefficient of the field
  double noise_ratio = 0.02;         // observation noise std / free-flow
  std::int64_t start_time = 1473897600;  // 2016-09-15 00:00:00 UTC
  std::int64_t cadence_s = kDefaultCadenceS;
};

// Daily sinusoid + spatially correlated Gaussian field + observation noise,
// clamped to [1, 1.5 x free-flow]. Deterministic per seed.
MeasurementStore generate_synthetic(const RoadNetwork& network, std::size_t horizon, std::uint64_t seed,
                                    const SyntheticOptions& options = {});

// rows x cols grid of junctions with two-way links, sensors on `sensor_count`
// randomly chosen links (ids 700001, 700002, ...).
RoadNetwork make_grid_network(std::size_t rows, std::size_t cols, std::size_t sensor_count, std::uint64_t seed,
                              double spacing_m = 400.0);

}  // namespace roadwatch
