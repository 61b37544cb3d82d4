#include "roadwatch/tradeoff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "roadwatch/error.hpp"
#include "roadwatch/format.hpp"
#include "roadwatch/rng.hpp"

namespace roadwatch {

std::vector<double> log_spaced_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) throw InsufficientData("grid needs 0 < lo < hi and >= 2 points");
  std::vector<double> g(points);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

TradeoffCurve::TradeoffCurve(std::vector<double> grid, std::vector<double> fp, std::vector<double> fn,
                             std::size_t window, std::size_t trials)
    : grid_(std::move(grid)), fp_(std::move(fp)), fn_(std::move(fn)), window_(window), trials_(trials) {
  if (grid_.size() < 2 || fp_.size() != grid_.size() || fn_.size() != grid_.size())
    throw InsufficientData("trade-off curve needs >= 2 grid points with matching fp/fn columns");
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (i > 0 && !(grid_[i] > grid_[i - 1])) throw InsufficientData("trade-off grid must be strictly ascending");
    if (!(fp_[i] >= 0.0 && fp_[i] <= 1.0) || !(fn_[i] >= 0.0 && fn_[i] <= 1.0))
      throw InsufficientData("trade-off probabilities must lie in [0, 1]");
    if (i > 0 && (fp_[i] > fp_[i - 1] || fn_[i] < fn_[i - 1]))
      throw InsufficientData("trade-off curve must have fp non-increasing and fn non-decreasing");
  }
}

std::size_t TradeoffCurve::cell(double eta) const {
  if (eta <= grid_.front()) return 0;
  if (eta >= grid_.back()) return grid_.size() - 2;
  auto it = std::upper_bound(grid_.begin(), grid_.end(), eta);
  return static_cast<std::size_t>(it - grid_.begin()) - 1;
}

double TradeoffCurve::interpolate(const std::vector<double>& values, double eta) const {
  if (eta <= grid_.front()) return values.front();
  if (eta >= grid_.back()) return values.back();
  const std::size_t i = cell(eta);
  if (eta == grid_[i]) return values[i];
  const double t = (eta - grid_[i]) / (grid_[i + 1] - grid_[i]);
  return values[i] + t * (values[i + 1] - values[i]);
}

double TradeoffCurve::fp_at(double eta) const { return interpolate(fp_, eta); }
double TradeoffCurve::fn_at(double eta) const { return interpolate(fn_, eta); }
double TradeoffCurve::fp_at(const Threshold& eta) const { return eta.is_disabled() ? 0.0 : fp_at(eta.value()); }
double TradeoffCurve::fn_at(const Threshold& eta) const { return eta.is_disabled() ? 1.0 : fn_at(eta.value()); }

double TradeoffCurve::fp_inverse(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (fp_[i] > u) continue;
    if (i == 0 || fp_[i] == u) return grid_[i];
    // fp_[i-1] > u > fp_[i]: solve the linear piece for fp = u.
    const double t = (fp_[i - 1] - u) / (fp_[i - 1] - fp_[i]);
    return grid_[i - 1] + t * (grid_[i] - grid_[i - 1]);
  }
  return grid_.back();
}

HeldOutPredictions predict_held_out(const GpModel& model, const Eigen::MatrixXd& neighbor_values,
                                    std::span<const double> actual) {
  if (static_cast<std::size_t>(neighbor_values.rows()) != actual.size())
    throw InsufficientData("neighbor rows and target series differ in length");
  HeldOutPredictions out;
  out.actual.assign(actual.begin(), actual.end());
  for (Eigen::Index k = 0; k < neighbor_values.rows(); ++k) {
    const Eigen::VectorXd x = neighbor_values.row(k).transpose();
    const Prediction p = model.predict(x);
    out.mean.push_back(p.mean);
    out.std.push_back(p.std);
  }
  return out;
}

TradeoffCurve estimate_curve(const HeldOutPredictions& normal, std::span<const FaultModel> faults,
                             const CurveOptions& options, std::uint64_t seed) {
  const std::size_t n = normal.actual.size();
  const std::size_t w = options.window;
  if (w == 0 || n < w) throw InsufficientData("held-out series shorter than the detection window");
  if (normal.mean.size() != n || normal.std.size() != n)
    throw InsufficientData("held-out predictions do not match the actual series");
  if (options.trials < 100) throw InsufficientData("trade-off estimation needs at least 100 trials");
  if (faults.empty()) throw InsufficientData("trade-off estimation needs at least one fault model");
  for (const FaultModel& f : faults) f.validate();

  const std::vector<double>& grid = options.grid;
  if (grid.size() < 2) throw InsufficientData("threshold grid needs at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw InsufficientData("threshold grid must be ascending");

  const std::size_t starts = n - w + 1;
  std::vector<double> z(w);
  std::vector<double> normal_peaks(options.trials);
  std::vector<double> fault_peaks(options.trials);

  for (std::size_t t = 0; t < options.trials; ++t) {
    Engine eng(derive_seed(seed, "fp-trial", {t}));
    const std::size_t s = uniform_index(eng, starts);
    for (std::size_t j = 0; j < w; ++j)
      z[j] = standardized_residual(normal.actual[s + j], normal.mean[s + j], normal.std[s + j]);
    normal_peaks[t] = peak_excursion(z, options.drift);
  }
  for (std::size_t t = 0; t < options.trials; ++t) {
    Engine eng(derive_seed(seed, "fn-trial", {t}));
    const FaultModel& fault = faults[t % faults.size()];
    const std::size_t s = uniform_index(eng, starts);
    const double u = fault.draw_magnitude(eng);
    for (std::size_t j = 0; j < w; ++j) {
      const double a = normal.actual[s + j];
      z[j] = standardized_residual(a + u * a, normal.mean[s + j], normal.std[s + j]);
    }
    fault_peaks[t] = peak_excursion(z, options.drift);
  }

  std::sort(normal_peaks.begin(), normal_peaks.end());
  std::sort(fault_peaks.begin(), fault_peaks.end());
  const double trials = static_cast<double>(options.trials);
  std::vector<double> fp(grid.size());
  std::vector<double> fn(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    // alarm iff peak > eta
    const auto above_n = normal_peaks.end() - std::upper_bound(normal_peaks.begin(), normal_peaks.end(), grid[i]);
    const auto at_or_below_f = std::upper_bound(fault_peaks.begin(), fault_peaks.end(), grid[i]) - fault_peaks.begin();
    fp[i] = static_cast<double>(above_n) / trials;
    fn[i] = static_cast<double>(at_or_below_f) / trials;
  }
  // Isotonic clipping.
  for (std::size_t i = 1; i < grid.size(); ++i) {
    fp[i] = std::min(fp[i], fp[i - 1]);
    fn[i] = std::max(fn[i], fn[i - 1]);
  }
  return TradeoffCurve(grid, std::move(fp), std::move(fn), w, options.trials);
}

TradeoffCurve estimate_curve(const GpModel& model, const Eigen::MatrixXd& neighbor_values,
                             std::span<const double> actual, std::span<const FaultModel> faults,
                             const CurveOptions& options, std::uint64_t seed) {
  return estimate_curve(predict_held_out(model, neighbor_values, actual), faults, options, seed);
}

void write_curves_csv(std::ostream& out, const std::map<SensorId, TradeoffCurve>& curves) {
  out << "sensor_id,eta,fp,fn\n";
  for (const auto& [sensor, curve] : curves)
    for (std::size_t i = 0; i < curve.grid().size(); ++i)
      out << sensor.value << ',' << format_double(curve.grid()[i]) << ',' << format_double(curve.fp()[i]) << ','
          << format_double(curve.fn()[i]) << '\n';
}

std::map<SensorId, TradeoffCurve> read_curves_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "sensor_id,eta,fp,fn")
    throw ArtifactError("curves CSV: unexpected header");
  std::map<SensorId, std::vector<std::array<double, 3>>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) throw ArtifactError("curves CSV line " + std::to_string(lineno) + ": expected 4 fields");
    try {
      rows[SensorId{std::stoull(fields[0])}].push_back(
          {std::stod(fields[1]), std::stod(fields[2]), std::stod(fields[3])});
    } catch (const std::exception&) {
      throw ArtifactError("curves CSV line " + std::to_string(lineno) + ": malformed number");
    }
  }
  std::map<SensorId, TradeoffCurve> out;
  for (auto& [sensor, r] : rows) {
    std::vector<double> g, fp, fn;
    for (const auto& row : r) {
      g.push_back(row[0]);
      fp.push_back(row[1]);
      fn.push_back(row[2]);
    }
    // Window and trial count are not part of the CSV schema.
    out.emplace(sensor, TradeoffCurve(std::move(g), std::move(fp), std::move(fn), 0, 0));
  }
  return out;
}

}  // namespace roadwatch
