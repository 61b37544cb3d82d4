#include "roadwatch/fault.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "roadwatch/error.hpp"

namespace roadwatch {

std::string to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::None: return "none";
    case FaultKind::ConstantRelativeOvercount: return "constant_relative_overcount";
    case FaultKind::ConditionalUndercount: return "conditional_undercount";
  }
  return "none";
}

FaultKind parse_fault_kind(const std::string& text) {
  if (text == "none") return FaultKind::None;
  if (text == "constant_relative_overcount" || text == "overcount") return FaultKind::ConstantRelativeOvercount;
  if (text == "conditional_undercount" || text == "undercount") return FaultKind::ConditionalUndercount;
  throw InvalidFault("unknown fault kind '" + text + "'");
}

FaultModel FaultModel::none() { return {}; }

FaultModel FaultModel::overcount(std::size_t start, std::size_t end, double u_lo, double u_hi) {
  FaultModel f{FaultKind::ConstantRelativeOvercount, u_lo, u_hi, start, end};
  f.validate();
  return f;
}

FaultModel FaultModel::undercount(std::size_t start, std::size_t end, double u_lo, double u_hi) {
  FaultModel f{FaultKind::ConditionalUndercount, u_lo, u_hi, start, end};
  f.validate();
  return f;
}

void FaultModel::validate() const {
  if (start > end) throw InvalidFault("fault episode starts after it ends");
  if (kind == FaultKind::None) return;
  if (!std::isfinite(u_lo) || !std::isfinite(u_hi) || u_lo > u_hi)
    throw InvalidFault("fault magnitude range must satisfy u_lo <= u_hi");
  if (kind == FaultKind::ConstantRelativeOvercount && !(u_lo > 0.0))
    throw InvalidFault("overcount magnitudes must be positive");
  if (kind == FaultKind::ConditionalUndercount && !(u_hi < 0.0 && u_lo > -1.0))
    throw InvalidFault("undercount magnitudes must lie in (-1, 0)");
}

double FaultModel::draw_magnitude(Engine& eng) const {
  if (kind == FaultKind::None) return 0.0;
  return uniform(eng, u_lo, u_hi);
}

SensorSeries apply_fault(const SensorSeries& actual, const FaultModel& fault, double u) {
  fault.validate();
  SensorSeries out = actual;
  out.kind = SeriesKind::Measured;
  if (fault.kind == FaultKind::None) return out;
  if (fault.end >= actual.values.size()) {
    std::ostringstream os;
    os << "fault episode [" << fault.start << ", " << fault.end << "] outside series of length "
       << actual.values.size() << " for sensor " << actual.sensor;
    throw EpisodeBounds(os.str());
  }
  for (std::size_t k = fault.start; k <= fault.end; ++k) out.values[k] = actual.values[k] + u * actual.values[k];
  return out;
}

SensorSeries inject(const SensorSeries& actual, const FaultModel& fault, std::uint64_t seed) {
  if (actual.kind != SeriesKind::Actual) throw InvalidFault("inject expects an actual (fault-free) series");
  Engine eng(derive_seed(seed, "fault-magnitude", {actual.sensor.value}));
  return apply_fault(actual, fault, fault.draw_magnitude(eng));
}

FaultPrior fault_prior(double p_fault) {
  if (!(p_fault > 0.0 && p_fault < 1.0)) throw InvalidPrior("fault probability must lie in (0, 1)");
  return {p_fault, 1.0 - p_fault};
}

std::vector<ScenarioEntry> parse_fault_scenario(const nlohmann::json& doc) {
  if (!doc.is_array()) throw InvalidFault("fault scenario must be a JSON array");
  std::vector<ScenarioEntry> out;
  for (const auto& e : doc) {
    try {
      for (const auto& [key, _] : e.items())
        if (key != "sensor_id" && key != "kind" && key != "u_lo" && key != "u_hi" && key != "start" &&
            key != "end" && key != "seed")
          throw InvalidFault("fault scenario: unknown field '" + key + "'");
      ScenarioEntry entry;
      entry.sensor = SensorId{e.at("sensor_id").get<std::uint64_t>()};
      entry.fault.kind = parse_fault_kind(e.at("kind").get<std::string>());
      entry.fault.u_lo = e.at("u_lo").get<double>();
      entry.fault.u_hi = e.at("u_hi").get<double>();
      entry.fault.start = e.at("start").get<std::size_t>();
      entry.fault.end = e.at("end").get<std::size_t>();
      entry.seed = e.at("seed").get<std::uint64_t>();
      entry.fault.validate();
      out.push_back(entry);
    } catch (const nlohmann::json::exception& ex) {
      throw InvalidFault(std::string("fault scenario: ") + ex.what());
    }
  }
  return out;
}

std::vector<ScenarioEntry> load_fault_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidFault("cannot open fault scenario " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidFault("fault scenario " + path.string() + ": " + e.what());
  }
  return parse_fault_scenario(doc);
}

nlohmann::json to_json(const std::vector<ScenarioEntry>& scenario) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : scenario)
    out.push_back({{"sensor_id", e.sensor.value},
                   {"kind", to_string(e.fault.kind)},
                   {"u_lo", e.fault.u_lo},
                   {"u_hi", e.fault.u_hi},
                   {"start", e.fault.start},
                   {"end", e.fault.end},
                   {"seed", e.seed}});
  return out;
}

}  // namespace roadwatch
