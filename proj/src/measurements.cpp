#include "roadwatch/measurements.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "roadwatch/error.hpp"
#include "roadwatch/format.hpp"
#include "roadwatch/rng.hpp"

namespace roadwatch {

MeasurementStore::MeasurementStore(std::vector<SensorId> sensors, std::size_t timesteps, std::int64_t start_time,
                                   std::int64_t cadence_s)
    : sensors_(std::move(sensors)), timesteps_(timesteps), start_time_(start_time), cadence_s_(cadence_s) {
  if (cadence_s_ <= 0) throw ParseError("cadence must be positive");
  std::sort(sensors_.begin(), sensors_.end());
  for (std::size_t i = 0; i < sensors_.size(); ++i) {
    if (!row_.emplace(sensors_[i], i).second) throw ParseError("duplicate sensor " + std::to_string(sensors_[i].value));
  }
  values_.assign(sensors_.size() * timesteps_, 0.0);
}

std::span<const double> MeasurementStore::series(SensorId s) const {
  auto it = row_.find(s);
  if (it == row_.end()) throw MissingMeasurement("no measurements for sensor " + std::to_string(s.value));
  return {values_.data() + it->second * timesteps_, timesteps_};
}

std::span<double> MeasurementStore::series(SensorId s) {
  auto it = row_.find(s);
  if (it == row_.end()) throw MissingMeasurement("no measurements for sensor " + std::to_string(s.value));
  return {values_.data() + it->second * timesteps_, timesteps_};
}

SpeedMap MeasurementStore::snapshot(std::size_t k) const {
  if (k >= timesteps_) throw MissingMeasurement("timestep " + std::to_string(k) + " out of range");
  SpeedMap out;
  for (std::size_t i = 0; i < sensors_.size(); ++i) out.emplace(sensors_[i], values_[i * timesteps_ + k]);
  return out;
}

void MeasurementStore::write_csv(std::ostream& out) const {
  out << "timestamp,sensor_id,value_mps\n";
  for (std::size_t k = 0; k < timesteps_; ++k) {
    const std::string ts = format_timestamp(start_time_ + static_cast<std::int64_t>(k) * cadence_s_);
    for (std::size_t i = 0; i < sensors_.size(); ++i) {
      out << ts << ',' << sensors_[i].value << ',' << format_double(values_[i * timesteps_ + k]) << '\n';
    }
  }
}

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

std::int64_t parse_timestamp(const std::string& text) {
  const std::string t = trim(text);
  std::int64_t epoch = 0;
  if (parse_int(t, epoch)) return epoch;

  int a = 0, b = 0, c = 0, hh = 0, mm = 0, ss = 0;
  char sep = 0;
  std::int64_t year = 0;
  unsigned month = 0, day = 0;
  if (std::sscanf(t.c_str(), "%d-%d-%d%c%d:%d:%d", &a, &b, &c, &sep, &hh, &mm, &ss) == 7 &&
      (sep == ' ' || sep == 'T')) {
    year = a;
    month = static_cast<unsigned>(b);
    day = static_cast<unsigned>(c);
  } else if (std::sscanf(t.c_str(), "%d/%d/%d %d:%d:%d", &a, &b, &c, &hh, &mm, &ss) == 6) {
    month = static_cast<unsigned>(a);
    day = static_cast<unsigned>(b);
    year = c;
  } else {
    throw ParseError("unrecognized timestamp '" + t + "'");
  }
  if (month < 1 || month > 12 || day < 1 || day > 31 || hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 ||
      ss > 60) {
    throw ParseError("timestamp out of range '" + t + "'");
  }
  return days_from_civil(year, month, day) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string format_timestamp(std::int64_t epoch_s) {
  std::int64_t days = epoch_s / 86400;
  std::int64_t rem = epoch_s % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t y = 0;
  unsigned m = 0, d = 0;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u %02lld:%02lld:%02lld", static_cast<long long>(y), m, d,
                static_cast<long long>(rem / 3600), static_cast<long long>(rem / 60 % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

MeasurementStore parse_measurements(std::istream& in, const RoadNetwork* network, std::int64_t cadence_s) {
  if (cadence_s <= 0) throw ParseError("cadence must be positive");
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;

  struct Cell {
    double sum = 0.0;
    int count = 0;
  };
  std::map<SensorId, std::map<std::int64_t, Cell>> raw;
  std::int64_t t_min = 0, t_max = 0;
  bool any = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != 3 || trim(fields[0]) != "timestamp" || trim(fields[1]) != "sensor_id" ||
          trim(fields[2]) != "value_mps") {
        throw ParseError("line 1: expected header timestamp,sensor_id,value_mps");
      }
      continue;
    }
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != 3) throw ParseError(where + "expected 3 fields");
    std::int64_t ts = 0;
    try {
      ts = parse_timestamp(fields[0]);
    } catch (const ParseError& e) {
      throw ParseError(where + e.what());
    }
    std::int64_t sid = 0;
    if (!parse_int(trim(fields[1]), sid) || sid < 0) throw ParseError(where + "bad sensor_id");
    const std::string v_text = trim(fields[2]);
    double value = 0.0;
    auto [p, ec] = std::from_chars(v_text.data(), v_text.data() + v_text.size(), value);
    if (ec != std::errc() || p != v_text.data() + v_text.size() || !std::isfinite(value) || value < 0.0) {
      throw ParseError(where + "bad value_mps '" + v_text + "'");
    }
    const SensorId sensor{static_cast<std::uint64_t>(sid)};
    if (network && !network->has_sensor(sensor)) {
      throw ParseError(where + "sensor " + std::to_string(sid) + " is not in the network");
    }
    // Floor division onto the cadence grid.
    std::int64_t bucket = ts / cadence_s;
    if (ts % cadence_s < 0) --bucket;
    auto& cell = raw[sensor][bucket];
    cell.sum += value;
    ++cell.count;
    if (!any) {
      t_min = t_max = bucket;
      any = true;
    } else {
      t_min = std::min(t_min, bucket);
      t_max = std::max(t_max, bucket);
    }
  }
  if (!header_seen) throw ParseError("line 1: missing header");
  if (!any) return MeasurementStore({}, 0, 0, cadence_s);

  std::vector<SensorId> sensors;
  for (const auto& [s, _] : raw) sensors.push_back(s);
  const auto steps = static_cast<std::size_t>(t_max - t_min + 1);
  MeasurementStore store(sensors, steps, t_min * cadence_s, cadence_s);

  for (const auto& [sensor, cells] : raw) {
    auto out = store.series(sensor);
    std::vector<bool> have(steps, false);
    for (const auto& [bucket, cell] : cells) {
      const auto k = static_cast<std::size_t>(bucket - t_min);
      out[k] = cell.sum / cell.count;
      have[k] = true;
    }
    std::size_t k = 0;
    while (k < steps) {
      if (have[k]) {
        ++k;
        continue;
      }
      std::size_t j = k;
      while (j < steps && !have[j]) ++j;
      const std::size_t gap = j - k;
      if (gap > kMaxGapFill) {
        throw ParseError("sensor " + std::to_string(sensor.value) + ": gap of " + std::to_string(gap) +
                         " steps starting at " + format_timestamp(store.start_time() +
                                                                 static_cast<std::int64_t>(k) * cadence_s));
      }
      if (k == 0) {
        for (std::size_t i = k; i < j; ++i) out[i] = out[j];
      } else if (j == steps) {
        for (std::size_t i = k; i < j; ++i) out[i] = out[k - 1];
      } else {
        const double lo = out[k - 1], hi = out[j];
        const double span = static_cast<double>(j - (k - 1));
        for (std::size_t i = k; i < j; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i - (k - 1)) / span;
      }
      k = j;
    }
  }
  return store;
}

MeasurementStore load_measurements(const std::filesystem::path& path, const RoadNetwork* network,
                                   std::int64_t cadence_s) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open measurements file " + path.string());
  try {
    return parse_measurements(in, network, cadence_s);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

MeasurementStore generate_synthetic(const RoadNetwork& network, std::size_t horizon, std::uint64_t seed,
                                    const SyntheticOptions& options) {
  if (horizon < 2) throw ConfigError("synthetic horizon must be at least 2 steps");
  const auto& sensors = network.sensors();
  const std::size_t n = sensors.size();
  MeasurementStore store(sensors, horizon, options.start_time, options.cadence_s);
  if (n == 0) return store;

  // Spatial covariance over sensor distances, factorized once.
  Eigen::MatrixXd cov(n, n);
  const double l2 = options.field_length_m * options.field_length_m;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = i == j ? 0.0 : network.sensor_distance_m(sensors[i], sensors[j]);
      cov(i, j) = std::exp(-0.5 * d * d / l2);
    }
    cov(i, i) += 1e-9;
  }
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();

  std::vector<double> freeflow(n);
  for (std::size_t i = 0; i < n; ++i) {
    freeflow[i] = network.edges()[network.sensor_edge_index(sensors[i])].freeflow_mps;
  }

  Engine field_eng(derive_seed(seed, "synthetic.field"));
  Engine noise_eng(derive_seed(seed, "synthetic.noise"));
  const double rho = options.field_persistence;
  const double innovation = std::sqrt(std::max(0.0, 1.0 - rho * rho));

  Eigen::VectorXd field = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd xi(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t i = 0; i < n; ++i) xi(static_cast<Eigen::Index>(i)) = standard_normal(field_eng);
    const Eigen::VectorXd draw = chol * xi;
    field = k == 0 ? draw : Eigen::VectorXd(rho * field + innovation * draw);
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(options.period);
    // Slowest around the start of the day's second half, fastest at night.
    const double daily = options.mean_ratio - options.daily_amplitude * std::sin(phase);
    for (std::size_t i = 0; i < n; ++i) {
      const double ff = freeflow[i];
      double v = ff * (daily + options.field_ratio * field(static_cast<Eigen::Index>(i)));
      if (options.noise_ratio > 0.0) v += ff * options.noise_ratio * standard_normal(noise_eng);
      store.series(sensors[i])[k] = std::clamp(v, 1.0, 1.5 * ff);
    }
  }
  return store;
}

RoadNetwork make_grid_network(std::size_t rows, std::size_t cols, std::size_t sensor_count, std::uint64_t seed,
                              double spacing_m) {
  if (rows == 0 || cols == 0) throw ConfigError("grid needs at least one row and column");
  Engine eng(derive_seed(seed, "grid"));
  const double deg_lat = spacing_m / 111195.0;
  const double base_lat = 34.05, base_lon = -118.25;
  const double deg_lon = deg_lat / std::cos(base_lat * std::numbers::pi / 180.0);

  std::vector<Vertex> vertices;
  auto vid = [&](std::size_t r, std::size_t c) { return VertexId{r * cols + c + 1}; };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      vertices.push_back({vid(r, c), base_lat + deg_lat * static_cast<double>(r),
                          base_lon + deg_lon * static_cast<double>(c)});
    }
  }
  constexpr std::array<double, 3> kFreeflow{15.6, 17.9, 20.1};
  std::vector<Edge> edges;
  auto add_link = [&](VertexId a, VertexId b) {
    const double length = spacing_m * uniform(eng, 0.95, 1.05);
    const double ff = kFreeflow[uniform_index(eng, kFreeflow.size())];
    edges.push_back({EdgeId{edges.size() + 1}, a, b, length, ff, std::nullopt});
    edges.push_back({EdgeId{edges.size() + 1}, b, a, length, ff, std::nullopt});
  };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) add_link(vid(r, c), vid(r, c + 1));
      if (r + 1 < rows) add_link(vid(r, c), vid(r + 1, c));
    }
  }
  if (sensor_count > edges.size()) throw ConfigError("more sensors than grid edges");
  // Partial Fisher-Yates to choose the monitored edges.
  std::vector<std::size_t> order(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < sensor_count; ++i) {
    const std::size_t j = i + uniform_index(eng, order.size() - i);
    std::swap(order[i], order[j]);
  }
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sensor_count));
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t i = 0; i < chosen.size(); ++i) edges[chosen[i]].sensor = SensorId{700001 + i};
  return RoadNetwork(std::move(vertices), std::move(edges));
}

}  // namespace roadwatch
