#include "roadwatch/cusum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "roadwatch/error.hpp"

namespace roadwatch {

DetectorState make_detector(double drift) {
  if (!(drift > 0.0) || !std::isfinite(drift)) throw InvalidStd("CUSUM drift must be positive");
  DetectorState s;
  s.drift = drift;
  return s;
}

Threshold Threshold::of(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("threshold must be positive and finite");
  Threshold t;
  t.value_ = eta;
  return t;
}

double Threshold::value() const {
  if (!value_) throw std::logic_error("threshold is disabled");
  return *value_;
}

const char* to_string(Decision d) { return d == Decision::Fault ? "H1" : "H0"; }

double standardized_residual(double measured, double predicted, double std) {
  if (!(std > 0.0)) throw InvalidStd("prediction std must be positive");
  return (measured - predicted) / std;
}

DetectorState cusum_step(DetectorState state, double z) {
  state.upper = std::max(0.0, state.upper + z - state.drift);
  state.lower = std::min(0.0, state.lower + z + state.drift);
  ++state.step;
  return state;
}

Decision decide(const DetectorState& state, const Threshold& threshold) {
  if (threshold.is_disabled()) return Decision::Normal;
  const double eta = threshold.value();
  return state.upper > eta || state.lower < -eta ? Decision::Fault : Decision::Normal;
}

DetectorState reset(DetectorState state) {
  state.upper = 0.0;
  state.lower = 0.0;
  return state;
}

double peak_excursion(std::span<const double> residuals, double drift) {
  DetectorState s = make_detector(drift);
  double peak = 0.0;
  for (double z : residuals) {
    s = cusum_step(s, z);
    peak = std::max({peak, s.upper, -s.lower});
  }
  return peak;
}

}  // namespace roadwatch
