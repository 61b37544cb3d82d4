#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "roadwatch/config.hpp"
#include "roadwatch/error.hpp"
#include "roadwatch/format.hpp"
#include "roadwatch/pipeline.hpp"

namespace rw = roadwatch;

int main(int argc, char** argv) {
  CLI::App app{"roadwatch: sensor fault detection tuned to routing cost"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  app.add_option("--config", config_path, "experiment config (key = value)");
  app.add_option("--seed", seed, "master seed, overrides the config");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();

  auto* fit = app.add_subcommand("fit", "fit one predictor per sensor");
  auto* curves = app.add_subcommand("curves", "fit, then estimate FP/FN trade-off curves");
  auto* optimize = app.add_subcommand("optimize", "curves, then per-timestep thresholds and losses");
  auto* simulate = app.add_subcommand("simulate", "full run: thresholds, detectors, reports, plot data");
  auto* report = app.add_subcommand("report", "rebuild critical.json and plot data from an earlier run");
  auto* synth = app.add_subcommand("synth", "write a synthetic network, measurements and fault scenario");

  std::optional<double> delta;
  std::optional<std::size_t> plot_step;
  report->add_option("--delta", delta, "critical-sensor loss threshold (seconds)");
  report->add_option("--timestep", plot_step, "timestep of the exported loss curves");

  CLI11_PARSE(app, argc, argv);

  try {
    rw::ExperimentConfig config;
    if (!config_path.empty()) config = rw::load_config(config_path);
    if (seed) config.seed = *seed;
    config.validate();
    const std::filesystem::path out(out_dir);

    if (*synth) {
      rw::write_synthetic_inputs(config, out);
      std::cout << "wrote network.json, measurements.csv, scenario.json to " << out.string() << "\n";
    } else if (*report) {
      const auto r = rw::report_from_artifacts(out, delta.value_or(config.delta));
      rw::emit_plots_data(out, plot_step.value_or(config.plot_step()), config.p_f);
      std::cout << "critical sensors (delta " << rw::format_double(r.delta) << "):";
      for (auto s : r.critical) std::cout << ' ' << s.value;
      std::cout << "\n";
    } else {
      rw::Stage stage = rw::Stage::Simulate;
      if (*fit) stage = rw::Stage::Fit;
      if (*curves) stage = rw::Stage::Curves;
      if (*optimize) stage = rw::Stage::Optimize;
      (void)simulate;
      rw::run_stage(config, stage, out, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "roadwatch: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
