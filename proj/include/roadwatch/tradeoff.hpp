#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "roadwatch/cusum.hpp"
#include "roadwatch/fault.hpp"
#include "roadwatch/gp.hpp"

namespace roadwatch {

// Ascending log-spaced thresholds; defaults give 64 points on [0.01, 50].
std::vector<double> log_spaced_grid(double lo = 0.01, double hi = 50.0, std::size_t points = 64);

// Sampled FP/FN probabilities over a threshold grid. FP(eta) is the chance a
// window of normal residuals raises at least one alarm; FN(eta) the chance a
// faulty window raises none.
class TradeoffCurve {
 public:
  TradeoffCurve(std::vector<double> grid, std::vector<double> fp, std::vector<double> fn,
                std::size_t window, std::size_t trials);

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& fp() const { return fp_; }
  const std::vector<double>& fn() const { return fn_; }
  std::size_t window() const { return window_; }
  std::size_t trials() const { return trials_; }
  double min_eta() const { return grid_.front(); }
  double max_eta() const { return grid_.back(); }

  // Piecewise-linear interpolation, constant beyond the grid ends.
  double fp_at(double eta) const;
  double fn_at(double eta) const;
  // A disabled detector never alarms: fp = 0, fn = 1.
  double fp_at(const Threshold& eta) const;
  double fn_at(const Threshold& eta) const;

  // Smallest eta with fp_at(eta) <= u; the largest grid point if none.
  double fp_inverse(double u) const;

  // Index i of the grid cell [grid[i], grid[i+1]] containing eta (clamped).
  std::size_t cell(double eta) const;

 private:
  double interpolate(const std::vector<double>& values, double eta) const;

  std::vector<double> grid_;
  std::vector<double> fp_;
  std::vector<double> fn_;
  std::size_t window_;
  std::size_t trials_;
};

// Normal-operation data for one sensor: actual values and the predictor's
// mean/std at the same timesteps.
struct HeldOutPredictions {
  std::vector<double> actual;
  std::vector<double> mean;
  std::vector<double> std;
};

HeldOutPredictions predict_held_out(const GpModel& model, const Eigen::MatrixXd& neighbor_values,
                                    std::span<const double> actual);

struct CurveOptions {
  double drift = kDefaultDrift;
  std::vector<double> grid = log_spaced_grid();
  std::size_t window = 12;
  std::size_t trials = 1000;
};

// Monte Carlo estimate: `trials` random normal windows for FP, and `trials`
// faulty windows pooled round-robin over `faults` for FN (magnitude drawn
// per trial from each fault's range). Deterministic given seed.
TradeoffCurve estimate_curve(const HeldOutPredictions& normal, std::span<const FaultModel> faults,
                             const CurveOptions& options, std::uint64_t seed);

TradeoffCurve estimate_curve(const GpModel& model, const Eigen::MatrixXd& neighbor_values,
                             std::span<const double> actual, std::span<const FaultModel> faults,
                             const CurveOptions& options, std::uint64_t seed);

// CSV with header sensor_id,eta,fp,fn; one block of rows per sensor.
void write_curves_csv(std::ostream& out, const std::map<SensorId, TradeoffCurve>& curves);
std::map<SensorId, TradeoffCurve> read_curves_csv(std::istream& in);

}  // namespace roadwatch
