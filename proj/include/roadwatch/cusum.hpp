#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace roadwatch {

inline constexpr double kDefaultDrift = 0.05;

// Two-sided CUSUM statistics on standardized residuals.
struct DetectorState {
  double upper = 0.0;  // U >= 0
  double lower = 0.0;  // L <= 0
  double drift = kDefaultDrift;
  std::uint64_t step = 0;

  friend bool operator==(const DetectorState&, const DetectorState&) = default;
};

DetectorState make_detector(double drift = kDefaultDrift);

// A positive detection threshold, or the sentinel for a switched-off detector.
class Threshold {
 public:
  static Threshold disabled() { return Threshold(); }
  static Threshold of(double eta);

  bool is_disabled() const { return !value_.has_value(); }
  double value() const;  // throws std::logic_error when disabled

  friend bool operator==(const Threshold&, const Threshold&) = default;

 private:
  Threshold() = default;
  std::optional<double> value_;
};

enum class Decision { Normal, Fault };

const char* to_string(Decision d);

// (measured - predicted) / std. Throws InvalidStd for std <= 0.
double standardized_residual(double measured, double predicted, double std);

DetectorState cusum_step(DetectorState state, double z);

// Fault iff U > eta or L < -eta. A disabled threshold never alarms.
Decision decide(const DetectorState& state, const Threshold& threshold);

// Zero both sums; the step counter is kept.
DetectorState reset(DetectorState state);

// Largest max(U, -L) reached while running a fresh detector over `residuals`.
// A window raises an alarm at threshold eta iff this exceeds eta.
double peak_excursion(std::span<const double> residuals, double drift);

}  // namespace roadwatch
