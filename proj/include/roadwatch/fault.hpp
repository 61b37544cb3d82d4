#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadwatch/ids.hpp"
#include "roadwatch/rng.hpp"

namespace roadwatch {

enum class FaultKind { None, ConstantRelativeOvercount, ConditionalUndercount };

std::string to_string(FaultKind kind);
FaultKind parse_fault_kind(const std::string& text);

// Relative fault: inside the episode m(k) = a(k) + u * a(k), with u drawn
// once per episode from [u_lo, u_hi]. Episode bounds are inclusive.
struct FaultModel {
  FaultKind kind = FaultKind::None;
  double u_lo = 0.0;
  double u_hi = 0.0;
  std::size_t start = 0;
  std::size_t end = 0;

  static FaultModel none();
  static FaultModel overcount(std::size_t start, std::size_t end, double u_lo = 0.03, double u_hi = 0.07);
  static FaultModel undercount(std::size_t start, std::size_t end, double u_lo = -0.13, double u_hi = -0.07);

  void validate() const;  // throws InvalidFault
  double draw_magnitude(Engine& eng) const;
};

enum class SeriesKind { Actual, Measured };

struct SensorSeries {
  SensorId sensor;
  std::vector<double> values;
  SeriesKind kind = SeriesKind::Actual;
};

// Deterministic core of inject(): applies a known magnitude.
SensorSeries apply_fault(const SensorSeries& actual, const FaultModel& fault, double u);

SensorSeries inject(const SensorSeries& actual, const FaultModel& fault, std::uint64_t seed);

inline constexpr double kDefaultFaultProbability = 0.05;

struct FaultPrior {
  double p_fault = kDefaultFaultProbability;
  double p_normal = 1.0 - kDefaultFaultProbability;
};

FaultPrior fault_prior(double p_fault = kDefaultFaultProbability);

struct ScenarioEntry {
  SensorId sensor;
  FaultModel fault;
  std::uint64_t seed = 0;
};

// Fault scenario file: [{sensor_id, kind, u_lo, u_hi, start, end, seed}, ...]
std::vector<ScenarioEntry> parse_fault_scenario(const nlohmann::json& doc);
std::vector<ScenarioEntry> load_fault_scenario(const std::filesystem::path& path);
nlohmann::json to_json(const std::vector<ScenarioEntry>& scenario);

}  // namespace roadwatch
