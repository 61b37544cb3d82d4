#include "roadwatch/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "roadwatch/error.hpp"
#include "roadwatch/format.hpp"

namespace roadwatch {

namespace {

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
  T out{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + text + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& text) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || p != text.data() + text.size() || !std::isfinite(out)) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field integer_field(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_integer<T>(k, v);
          },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(double ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*member = parse_real(k, v); },
          [member](const ExperimentConfig& c) { return format_double(c.*member); }};
}

Field text_field(std::string ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string&, const std::string& v) { c.*member = v; },
          [member](const ExperimentConfig& c) { return c.*member; }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"network", text_field(&ExperimentConfig::network)},
      {"grid_rows", integer_field(&ExperimentConfig::grid_rows)},
      {"grid_cols", integer_field(&ExperimentConfig::grid_cols)},
      {"grid_sensors", integer_field(&ExperimentConfig::grid_sensors)},
      {"measurements", text_field(&ExperimentConfig::measurements)},
      {"horizon", integer_field(&ExperimentConfig::horizon)},
      {"synthetic_noise", real_field(&ExperimentConfig::synthetic_noise)},
      {"cadence_s", integer_field(&ExperimentConfig::cadence_s)},
      {"split", integer_field(&ExperimentConfig::split)},
      {"d", integer_field(&ExperimentConfig::d)},
      {"b", real_field(&ExperimentConfig::b)},
      {"p_f", real_field(&ExperimentConfig::p_f)},
      {"grid_min", real_field(&ExperimentConfig::grid_min)},
      {"grid_max", real_field(&ExperimentConfig::grid_max)},
      {"grid_points", integer_field(&ExperimentConfig::grid_points)},
      {"window", integer_field(&ExperimentConfig::window)},
      {"trials", integer_field(&ExperimentConfig::trials)},
      {"alpha", real_field(&ExperimentConfig::alpha)},
      {"gamma", real_field(&ExperimentConfig::gamma)},
      {"restarts", integer_field(&ExperimentConfig::restarts)},
      {"gp_restarts", integer_field(&ExperimentConfig::gp_restarts)},
      {"queries_per_hour", integer_field(&ExperimentConfig::queries_per_hour)},
      {"queries_file", text_field(&ExperimentConfig::queries_file)},
      {"delta", real_field(&ExperimentConfig::delta)},
      {"seed", integer_field(&ExperimentConfig::seed)},
      {"fault_kind",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          try {
            c.fault_kind = parse_fault_kind(v);
          } catch (const Error&) {
            throw ConfigError("config key '" + k + "': unknown fault kind '" + v + "'");
          }
        },
        [](const ExperimentConfig& c) { return to_string(c.fault_kind); }}},
      {"restart_sampling",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          if (v == "anchored") {
            c.restart_sampling = RestartSampling::Anchored;
          } else if (v == "uniform") {
            c.restart_sampling = RestartSampling::Uniform;
          } else {
            throw ConfigError("config key '" + k + "': expected anchored or uniform, got '" + v + "'");
          }
        },
        [](const ExperimentConfig& c) {
          return std::string(c.restart_sampling == RestartSampling::Anchored ? "anchored" : "uniform");
        }}},
      {"fault_scenario", text_field(&ExperimentConfig::fault_scenario)},
      {"episode_length", integer_field(&ExperimentConfig::episode_length)},
      {"plot_timestep", integer_field(&ExperimentConfig::plot_timestep)},
  };
  return table;
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

}  // namespace

std::filesystem::path ExperimentConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

std::size_t ExperimentConfig::queries_per_step() const {
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(queries_per_hour) * static_cast<double>(cadence_s) / 3600.0));
}

std::size_t ExperimentConfig::plot_step() const {
  return plot_timestep < 0 ? split : static_cast<std::size_t>(plot_timestep);
}

void ExperimentConfig::validate() const {
  if (network.empty()) invalid("network", "must be a path or 'grid'");
  if (network == "grid") {
    if (grid_rows < 2 || grid_cols < 2) invalid("grid_rows", "grid needs at least 2 x 2 junctions");
    const std::size_t links = 2 * (grid_rows * (grid_cols - 1) + grid_cols * (grid_rows - 1));
    if (grid_sensors < 2 || grid_sensors > links) invalid("grid_sensors", "must be in [2, number of grid edges]");
  }
  if (measurements.empty()) invalid("measurements", "must be a path or 'synthetic'");
  if (measurements == "synthetic" && horizon < 2) invalid("horizon", "must be at least 2");
  if (!(synthetic_noise >= 0.0)) invalid("synthetic_noise", "must be >= 0");
  if (cadence_s <= 0) invalid("cadence_s", "must be positive");
  if (split < 2) invalid("split", "must leave at least 2 training steps");
  if (measurements == "synthetic" && split >= horizon) invalid("split", "must be inside the horizon");
  if (d < 1) invalid("d", "must be >= 1");
  if (!(b > 0.0)) invalid("b", "must be > 0");
  if (!(p_f > 0.0 && p_f < 1.0)) invalid("p_f", "must be in (0, 1)");
  if (!(grid_min > 0.0 && grid_max > grid_min)) invalid("grid_min", "need 0 < grid_min < grid_max");
  if (grid_points < 2) invalid("grid_points", "must be >= 2");
  if (window < 1) invalid("window", "must be >= 1");
  if (trials < 100) invalid("trials", "must be >= 100");
  if (!(alpha > 0.0)) invalid("alpha", "must be > 0");
  if (!(gamma > 0.0)) invalid("gamma", "must be > 0");
  if (restarts < 1) invalid("restarts", "must be >= 1");
  if (gp_restarts < 1) invalid("gp_restarts", "must be >= 1");
  if (queries_file.empty() && queries_per_step() < 1) invalid("queries_per_hour", "gives no queries per timestep");
  if (!(delta >= 0.0)) invalid("delta", "must be >= 0");
  if (fault_kind == FaultKind::None && fault_scenario.empty()) invalid("fault_kind", "must name a fault model");
  if (episode_length < 1) invalid("episode_length", "must be >= 1");
  if (plot_timestep < -1) invalid("plot_timestep", "must be -1 or a timestep");
  if (plot_timestep >= 0 && static_cast<std::size_t>(plot_timestep) < split) {
    invalid("plot_timestep", "must be a test-period timestep");
  }
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [key, field] : fields()) out.emplace(key, field.get(*this));
  return out;
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [key, value] : to_map()) os << key << " = " << value << '\n';
  return os.str();
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig config;
  config.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (auto [pos, fresh] = seen.emplace(key, line_no); !fresh) {
      throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key + "' already set on line " +
                        std::to_string(pos->second));
    }
    it->second.set(config, key, value);
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace roadwatch
