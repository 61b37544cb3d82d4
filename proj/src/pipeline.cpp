#include "roadwatch/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <deque>
#include <fstream>
#include <ostream>
#include <sstream>

#include "roadwatch/error.hpp"
#include "roadwatch/format.hpp"
#include "roadwatch/rng.hpp"

namespace roadwatch {

namespace fs = std::filesystem;

namespace {

// Re-throws any toolkit error with the module, sensor and timestep prepended.
template <typename Fn>
auto in_context(const std::string& module, std::optional<SensorId> sensor, std::optional<std::size_t> k, Fn&& fn)
    -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    std::string where = module;
    if (sensor) where += " sensor " + std::to_string(sensor->value);
    if (k) where += " timestep " + std::to_string(*k);
    throw Error(where + ": " + e.what());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << bytes;
  if (!out) throw ArtifactError("write failed for " + path.string());
}

std::string eta_text(const Threshold& t) { return t.is_disabled() ? "DISABLED" : format_double(t.value()); }

std::vector<Query> parse_queries(const fs::path& path, const RoadNetwork& network) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  std::vector<Query> out;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (!header) {
      header = true;
      if (f.size() != 2 || trim(f[0]) != "origin" || trim(f[1]) != "destination")
        throw ParseError(path.string() + ": expected header origin,destination");
      continue;
    }
    if (f.size() != 2) throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": expected 2 fields");
    std::uint64_t o = 0, d = 0;
    const std::string a = trim(f[0]), b = trim(f[1]);
    auto r1 = std::from_chars(a.data(), a.data() + a.size(), o);
    auto r2 = std::from_chars(b.data(), b.data() + b.size(), d);
    if (r1.ec != std::errc() || r1.ptr != a.data() + a.size() || r2.ec != std::errc() ||
        r2.ptr != b.data() + b.size())
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": bad vertex id");
    const Query q{VertexId{o}, VertexId{d}};
    if (!network.has_vertex(q.origin) || !network.has_vertex(q.destination))
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": unknown vertex");
    out.push_back(q);
  }
  if (out.empty()) throw ParseError(path.string() + ": no queries");
  return out;
}

// Vertex indices reachable from `origin` (by index).
std::vector<char> reachable_from(const RoadNetwork& net, std::size_t origin) {
  std::vector<char> seen(net.vertex_count(), 0);
  std::deque<std::size_t> todo{origin};
  seen[origin] = 1;
  while (!todo.empty()) {
    const std::size_t v = todo.front();
    todo.pop_front();
    for (std::size_t e : net.out_edges(v)) {
      const std::size_t w = net.vertex_index(net.edges()[e].to);
      if (!seen[w]) {
        seen[w] = 1;
        todo.push_back(w);
      }
    }
  }
  return seen;
}

FaultModel with_kind(FaultKind kind) {
  switch (kind) {
    case FaultKind::ConstantRelativeOvercount: return FaultModel::overcount(0, 0);
    case FaultKind::ConditionalUndercount: return FaultModel::undercount(0, 0);
    case FaultKind::None: break;
  }
  return FaultModel::none();
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(label_hash(bytes)));
  return buf;
}

std::string file_hash(const fs::path& path) { return fnv1a_hex(read_file(path)); }

std::vector<ScenarioEntry> default_scenario(const std::vector<SensorId>& sensors, FaultKind kind, std::size_t split,
                                            std::size_t horizon, std::size_t episode_length, std::uint64_t seed) {
  if (split >= horizon) throw ConfigError("no test period to place fault episodes in");
  const std::size_t test = horizon - split;
  const std::size_t len = std::min(episode_length, test);
  const std::size_t slack = test - len;
  const std::size_t n = sensors.size();
  std::vector<ScenarioEntry> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = split + (n > 1 ? i * slack / (n - 1) : 0);
    ScenarioEntry e;
    e.sensor = sensors[i];
    e.fault = with_kind(kind);
    e.fault.start = start;
    e.fault.end = start + len - 1;
    e.seed = derive_seed(seed, "fault", {sensors[i].value});
    out.push_back(e);
  }
  return out;
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::uint64_t seed = config_.seed;
  input_hashes_["config"] = fnv1a_hex(config_.to_text());

  in_context("network", std::nullopt, std::nullopt, [&] {
    if (config_.network == "grid") {
      network_ = make_grid_network(config_.grid_rows, config_.grid_cols, config_.grid_sensors,
                                   derive_seed(seed, "network"));
      input_hashes_["network"] = fnv1a_hex(network_.to_json().dump());
    } else {
      const fs::path p = config_.resolve(config_.network);
      network_ = RoadNetwork::load(p);
      input_hashes_["network"] = file_hash(p);
    }
  });
  if (network_.sensors().size() < 2) throw ConfigError("network needs at least two sensors");
  if (config_.d >= network_.sensors().size())
    throw ConfigError("config key 'd': must be below the number of sensors (" +
                      std::to_string(network_.sensors().size()) + ")");

  in_context("measurements", std::nullopt, std::nullopt, [&] {
    if (config_.measurements == "synthetic") {
      SyntheticOptions opts;
      opts.noise_ratio = config_.synthetic_noise;
      opts.cadence_s = config_.cadence_s;
      actual_ = generate_synthetic(network_, config_.horizon, derive_seed(seed, "measurements"), opts);
      std::ostringstream csv;
      actual_.write_csv(csv);
      input_hashes_["measurements"] = fnv1a_hex(csv.str());
    } else {
      const fs::path p = config_.resolve(config_.measurements);
      actual_ = load_measurements(p, &network_, config_.cadence_s);
      input_hashes_["measurements"] = file_hash(p);
    }
  });
  for (SensorId s : network_.sensors()) {
    if (!actual_.has_sensor(s)) throw MissingMeasurement("no measurements for sensor " + std::to_string(s.value));
  }
  const std::size_t horizon = actual_.timesteps();
  if (config_.split >= horizon)
    throw ConfigError("config key 'split': " + std::to_string(config_.split) + " is not inside the " +
                      std::to_string(horizon) + "-step data range");
  if (config_.plot_step() >= horizon) throw ConfigError("config key 'plot_timestep': outside the data range");

  in_context("fault_injection", std::nullopt, std::nullopt, [&] {
    if (config_.fault_scenario.empty()) {
      scenario_ = default_scenario(network_.sensors(), config_.fault_kind, config_.split, horizon,
                                   config_.episode_length, seed);
    } else {
      scenario_ = load_fault_scenario(config_.resolve(config_.fault_scenario));
    }
    for (const auto& e : scenario_) {
      if (!network_.has_sensor(e.sensor))
        throw InvalidFault("scenario sensor " + std::to_string(e.sensor.value) + " is not in the network");
    }
  });
  input_hashes_["scenario"] = fnv1a_hex(to_json(scenario_).dump());

  measured_ = actual_;
  for (const auto& e : scenario_) {
    in_context("fault_injection", e.sensor, std::nullopt, [&] {
      const auto src = actual_.series(e.sensor);
      SensorSeries series{e.sensor, std::vector<double>(src.begin(), src.end()), SeriesKind::Actual};
      // Overlapping episodes on one sensor compound.
      const auto cur = measured_.series(e.sensor);
      series.values.assign(cur.begin(), cur.end());
      const SensorSeries out = inject(series, e.fault, e.seed);
      std::copy(out.values.begin(), out.values.end(), measured_.series(e.sensor).begin());
    });
  }

  if (!config_.queries_file.empty()) {
    const fs::path p = config_.resolve(config_.queries_file);
    fixed_queries_ = parse_queries(p, network_);
    input_hashes_["queries"] = file_hash(p);
  }
  for (const Vertex& v : network_.vertices()) vertex_ids_.push_back(v.id);
}

std::vector<Query> Experiment::queries_at(std::size_t k) const {
  if (!fixed_queries_.empty()) return fixed_queries_;
  Engine eng(derive_seed(config_.seed, "queries", {k}));
  const std::size_t n = vertex_ids_.size();
  const std::size_t count = config_.queries_per_step();
  std::vector<Query> out;
  out.reserve(count);
  std::map<std::size_t, std::vector<char>> reach;
  while (out.size() < count) {
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
      const std::size_t o = uniform_index(eng, n);
      const std::size_t d = uniform_index(eng, n);
      if (o == d) continue;
      auto it = reach.find(o);
      if (it == reach.end()) it = reach.emplace(o, reachable_from(network_, o)).first;
      if (!it->second[d]) continue;
      out.push_back({vertex_ids_[o], vertex_ids_[d]});
      placed = true;
    }
    if (!placed) throw Unreachable("could not draw a connected origin/destination pair");
  }
  return out;
}

std::vector<std::size_t> Experiment::training_rows(bool fit_rows) const {
  std::vector<std::size_t> rows;
  for (std::size_t k = fit_rows ? 0 : 1; k < config_.split; k += 2) rows.push_back(k);
  if (rows.size() > kMaxTrainingRows) rows.erase(rows.begin(), rows.end() - kMaxTrainingRows);
  return rows;
}

Eigen::MatrixXd Experiment::neighbor_matrix(SensorId sensor, std::span<const std::size_t> timesteps) const {
  const auto& neighbors = models_.at(sensor).neighbor_ids();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(timesteps.size()), static_cast<Eigen::Index>(neighbors.size()));
  for (std::size_t j = 0; j < neighbors.size(); ++j) {
    const auto series = measured_.series(neighbors[j]);
    for (std::size_t i = 0; i < timesteps.size(); ++i)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = series[timesteps[i]];
  }
  return x;
}

void Experiment::fit_models() {
  if (!models_.empty()) return;
  const auto rows = training_rows(true);
  for (SensorId s : network_.sensors()) {
    in_context("gp_predictor", s, std::nullopt, [&] {
      const auto neighbors = select_neighbors(network_, s, config_.d);
      Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(neighbors.size()));
      Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
      const auto target = measured_.series(s);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        y(static_cast<Eigen::Index>(i)) = target[rows[i]];
        for (std::size_t j = 0; j < neighbors.size(); ++j)
          x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = measured_.at(neighbors[j], rows[i]);
      }
      FitOptions opts;
      opts.restarts = config_.gp_restarts;
      opts.seed = derive_seed(config_.seed, "gp", {s.value});
      models_.emplace(s, GpModel::fit(std::move(x), std::move(y), opts).with_sensors(neighbors, s));
    });
  }
}

void Experiment::estimate_curves() {
  if (!curves_.empty()) return;
  fit_models();
  const auto rows = training_rows(false);
  CurveOptions opts;
  opts.drift = config_.b;
  opts.grid = log_spaced_grid(config_.grid_min, config_.grid_max, config_.grid_points);
  opts.window = config_.window;
  opts.trials = config_.trials;
  for (SensorId s : network_.sensors()) {
    in_context("tradeoff", s, std::nullopt, [&] {
      std::vector<FaultModel> faults;
      for (const auto& e : scenario_)
        if (e.sensor == s && e.fault.kind != FaultKind::None) faults.push_back(e.fault);
      if (faults.empty()) faults.push_back(with_kind(config_.fault_kind));
      std::vector<double> actual;
      for (std::size_t k : rows) actual.push_back(measured_.at(s, k));
      curves_.emplace(s, estimate_curve(models_.at(s), neighbor_matrix(s, rows), actual, faults, opts,
                                        derive_seed(config_.seed, "curve", {s.value})));
    });
  }
}

void Experiment::optimize() {
  if (!records_.empty()) return;
  estimate_curves();
  const FaultPrior prior = fault_prior(config_.p_f);
  OptimizerOptions opt;
  opt.tolerance = config_.alpha;
  opt.step = config_.gamma;
  opt.restarts = config_.restarts;
  opt.sampling = config_.restart_sampling;

  const auto& sensors = network_.sensors();
  std::map<SensorId, DetectorState> state;
  std::map<SensorId, std::vector<LossFunction>> losses;
  for (SensorId s : sensors) state.emplace(s, make_detector(config_.b));

  for (std::size_t k = config_.split; k < measured_.timesteps(); ++k) {
    const auto queries = in_context("pipeline", std::nullopt, k, [&] { return queries_at(k); });
    CostEvaluator evaluator(network_, measured_.snapshot(k));
    for (SensorId s : sensors) {
      in_context("threshold_optimizer", s, k, [&] {
        const GpModel& model = models_.at(s);
        std::vector<double> x;
        for (SensorId n : model.neighbor_ids()) x.push_back(measured_.at(n, k));
        const Prediction p = model.predict(x);

        StepRecord r;
        r.timestep = k;
        r.sensor = s;
        r.measured = measured_.at(s, k);
        r.mean = p.mean;
        r.std = p.std;
        r.z = standardized_residual(r.measured, p.mean, p.std);
        r.queries = queries.size();
        for (const QueryCosts& c : evaluator.evaluate(s, p.mean, queries)) {
          r.fp_cost_sum += c.fp;
          r.fn_cost_sum += c.fn;
        }
        const LossFunction& loss =
            losses[s].emplace_back(curves_.at(s), r.fp_cost_sum, r.fn_cost_sum, prior);
        const ThresholdSolution sol = find_threshold(s, k, r.z, config_.b, loss, opt,
                                                     derive_seed(config_.seed, "threshold", {s.value, k}));
        r.eta_star = sol.eta_star;
        r.loss_star = r.eta_star.is_disabled() ? optimal_loss(loss) : sol.loss_star;

        DetectorState& d = state.at(s);
        d = cusum_step(d, r.z);
        r.detector = d;
        r.decision = decide(d, r.eta_star);
        if (r.decision == Decision::Fault) d = reset(d);
        records_.push_back(r);
      });
    }
  }

  std::map<SensorId, StaticBaseline> baselines;
  for (SensorId s : sensors) {
    baselines.emplace(s, in_context("threshold_optimizer", s, std::nullopt,
                                    [&] { return static_baseline(losses.at(s)); }));
  }
  std::map<SensorId, std::size_t> seen;
  for (StepRecord& r : records_) {
    const StaticBaseline& base = baselines.at(r.sensor);
    std::size_t& i = seen[r.sensor];
    r.eta_static = base.eta;
    r.loss_static = base.per_timestep[i++];
    SensorSummary& sum = summaries_[r.sensor];
    sum.mean_dynamic_loss += r.loss_star;
    sum.mean_static_loss += r.loss_static;
    if (r.decision == Decision::Fault) ++sum.alarms;
  }
  for (auto& [s, sum] : summaries_) {
    const double n = static_cast<double>(seen.at(s));
    sum.mean_dynamic_loss /= n;
    sum.mean_static_loss /= n;
    sum.eta_static = baselines.at(s).eta;
    for (const auto& e : scenario_) {
      if (e.sensor != s || e.fault.kind == FaultKind::None) continue;
      for (std::size_t k = std::max(e.fault.start, config_.split); k <= e.fault.end && k < measured_.timesteps(); ++k)
        ++sum.fault_steps;
    }
  }
}

CriticalReport Experiment::critical() const {
  std::map<SensorId, double> avg;
  for (const auto& [s, sum] : summaries_) avg.emplace(s, sum.mean_dynamic_loss);
  return critical_sensors(avg, config_.delta);
}

namespace {

std::string models_json(const Experiment& ex) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& [s, m] : ex.models()) models.push_back(m.to_json());
  return nlohmann::json{{"models", std::move(models)}}.dump(2) + "\n";
}

std::string curves_csv(const Experiment& ex) {
  std::ostringstream os;
  write_curves_csv(os, ex.curves());
  return os.str();
}

std::string trace_csv(const Experiment& ex) {
  std::ostringstream os;
  os << kTraceHeader << '\n';
  for (const StepRecord& r : ex.records()) {
    os << r.timestep << ',' << r.sensor.value << ',' << format_double(r.z) << ',' << format_double(r.detector.upper)
       << ',' << format_double(r.detector.lower) << ',' << eta_text(r.eta_star) << ',' << to_string(r.decision)
       << '\n';
  }
  return os.str();
}

std::string loss_report_csv(const Experiment& ex) {
  std::ostringstream os;
  os << kLossReportHeader << '\n';
  for (const StepRecord& r : ex.records()) {
    os << r.timestep << ',' << r.sensor.value << ',' << eta_text(r.eta_star) << ',' << format_double(r.loss_star)
       << ',' << format_double(r.eta_static) << ',' << format_double(r.loss_static) << '\n';
  }
  return os.str();
}

std::string costs_csv(const Experiment& ex) {
  std::ostringstream os;
  os << kCostsHeader << '\n';
  for (const StepRecord& r : ex.records()) {
    os << r.timestep << ',' << r.sensor.value << ',' << format_double(r.z) << ',' << r.queries << ','
       << format_double(r.fp_cost_sum) << ',' << format_double(r.fn_cost_sum) << '\n';
  }
  return os.str();
}

void write_manifest(const Experiment& ex, const fs::path& out, const std::vector<std::string>& outputs) {
  nlohmann::json files = nlohmann::json::object();
  for (const auto& name : outputs) files[name] = file_hash(out / name);
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [name, hash] : ex.input_hashes()) inputs[name] = hash;
  std::string combined;
  for (const auto& [name, hash] : ex.input_hashes()) combined += name + "=" + hash + "\n";
  nlohmann::json doc{{"config", ex.config().to_map()},
                     {"seed", ex.config().seed},
                     {"inputs", std::move(inputs)},
                     {"input_hash", fnv1a_hex(combined)},
                     {"outputs", std::move(files)}};
  write_file(out / artifact::kManifest, doc.dump(2) + "\n");
}

}  // namespace

void run_stage(const ExperimentConfig& config, Stage stage, const fs::path& out, std::ostream& log) {
  Experiment ex(config);
  fs::create_directories(out);
  std::vector<std::string> written;
  auto emit = [&](const char* name, const std::string& bytes) {
    write_file(out / name, bytes);
    written.emplace_back(name);
  };

  emit(artifact::kScenario, to_json(ex.scenario()).dump(2) + "\n");
  log << "fitting " << ex.network().sensors().size() << " predictors\n";
  ex.fit_models();
  emit(artifact::kModels, models_json(ex));
  if (stage != Stage::Fit) {
    log << "estimating trade-off curves\n";
    ex.estimate_curves();
    emit(artifact::kCurves, curves_csv(ex));
  }
  if (stage == Stage::Optimize || stage == Stage::Simulate) {
    log << "optimizing thresholds over " << ex.measured().timesteps() - config.split << " test steps\n";
    ex.optimize();
    emit(artifact::kLossReport, loss_report_csv(ex));
    emit(artifact::kCosts, costs_csv(ex));
  }
  if (stage == Stage::Simulate) {
    emit(artifact::kTrace, trace_csv(ex));
    emit(artifact::kCritical, ex.critical().to_json().dump(2) + "\n");
    emit_plots_data(out, config.plot_step(), config.p_f);
    for (const auto& [s, sum] : ex.summaries()) {
      log << "sensor " << s.value << ": dynamic " << format_double(sum.mean_dynamic_loss) << " s, static "
          << format_double(sum.mean_static_loss) << " s, alarms " << sum.alarms << "\n";
    }
  }
  write_manifest(ex, out, written);
}

void run_experiment(const ExperimentConfig& config, const fs::path& out, std::ostream& log) {
  run_stage(config, Stage::Simulate, out, log);
}

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_table(const fs::path& path, const char* expected_header) {
  if (!fs::exists(path)) throw ArtifactError("missing artifact " + path.string());
  std::istringstream in(read_file(path));
  std::string line;
  CsvTable t;
  if (!std::getline(in, line) || line != expected_header)
    throw ArtifactError(path.string() + ": unexpected header");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != t.header.size()) throw ArtifactError(path.string() + ": ragged row");
    t.rows.push_back(std::move(f));
  }
  return t;
}

double to_real(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ArtifactError("bad number '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ArtifactError("bad integer '" + s + "'");
  return v;
}

}  // namespace

CriticalReport report_from_artifacts(const fs::path& out, double delta) {
  const CsvTable t = read_table(out / artifact::kLossReport, kLossReportHeader);
  std::map<SensorId, std::pair<double, std::size_t>> acc;
  for (const auto& row : t.rows) {
    auto& [sum, n] = acc[SensorId{to_u64(row[1])}];
    sum += to_real(row[3]);
    ++n;
  }
  std::map<SensorId, double> avg;
  for (const auto& [s, p] : acc) avg.emplace(s, p.first / static_cast<double>(p.second));
  CriticalReport report = critical_sensors(avg, delta);
  write_file(out / artifact::kCritical, report.to_json().dump(2) + "\n");
  return report;
}

void emit_plots_data(const fs::path& out, std::size_t timestep, double p_f) {
  const fs::path curves_path = out / artifact::kCurves;
  if (!fs::exists(curves_path)) throw ArtifactError("missing artifact " + curves_path.string());
  std::map<SensorId, TradeoffCurve> curves;
  {
    std::istringstream in(read_file(curves_path));
    curves = read_curves_csv(in);
  }
  const CsvTable costs = read_table(out / artifact::kCosts, kCostsHeader);
  const fs::path dir = out / artifact::kPlotsDir;
  fs::create_directories(dir);
  const FaultPrior prior = fault_prior(p_f);

  for (const auto& [s, curve] : curves) {
    std::ostringstream os;
    os << "eta,fn,fp\n";
    for (std::size_t i = 0; i < curve.grid().size(); ++i)
      os << format_double(curve.grid()[i]) << ',' << format_double(curve.fn()[i]) << ','
         << format_double(curve.fp()[i]) << '\n';
    write_file(dir / ("tradeoff_" + std::to_string(s.value) + ".csv"), os.str());
  }

  bool found = false;
  for (const auto& row : costs.rows) {
    if (to_u64(row[0]) != timestep) continue;
    found = true;
    const SensorId s{to_u64(row[1])};
    const auto it = curves.find(s);
    if (it == curves.end()) throw ArtifactError("no trade-off curve for sensor " + row[1]);
    const LossFunction loss(it->second, to_real(row[4]), to_real(row[5]), prior);
    std::ostringstream os;
    os << "eta,loss\n";
    for (double eta : it->second.grid()) os << format_double(eta) << ',' << format_double(loss(eta)) << '\n';
    write_file(dir / ("loss_" + row[1] + "_k" + std::to_string(timestep) + ".csv"), os.str());
  }
  if (!found) throw ArtifactError("costs.csv has no rows for timestep " + std::to_string(timestep));
}

void write_synthetic_inputs(const ExperimentConfig& config, const fs::path& out) {
  ExperimentConfig c = config;
  c.measurements = "synthetic";
  Experiment ex(c);
  fs::create_directories(out);
  write_file(out / "network.json", ex.network().to_json().dump(2) + "\n");
  std::ostringstream csv;
  ex.actual().write_csv(csv);
  write_file(out / "measurements.csv", csv.str());
  write_file(out / artifact::kScenario, to_json(ex.scenario()).dump(2) + "\n");
}

}  // namespace roadwatch
