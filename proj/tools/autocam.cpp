// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "autocam/cli.hpp"
#include "autocam/config.hpp"
#include "autocam/error.hpp"
#include "autocam/pgm.hpp"

namespace {

constexpr int kUsageExit = 64;
constexpr int kInternalExit = 1;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string scene;
  std::string grid;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--out", f.out, "output directory");
  app->add_option("--seed", f.seed, "sensor noise seed");
  app->add_option("--scene", f.scene, "scene name, e.g. indoor_window");
  app->add_option("--grid", f.grid, "attribute grid as <exposures>x<gains>");
}

autocam::RunConfig resolve(const CommonFlags& f) {
  autocam::RunConfig cfg;
  if (!f.config.empty()) cfg = autocam::parse_run_config(autocam::read_text_file(f.config));
  if (!f.out.empty()) cfg.out = f.out;
  if (f.seed) cfg.sensor.rng_seed = *f.seed;
  if (!f.scene.empty()) cfg.scene = f.scene;
  if (!f.grid.empty()) cfg.grid = autocam::parse_grid(f.grid);
  cfg.validate();
  return cfg;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("autocam");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("AUTOCAM_LOG")) {
    const auto lvl = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only honour it when asked for.
    if (lvl != spdlog::level::off || std::string(env) == "off") spdlog::set_level(lvl);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Exposure and gain control with synthetic image evaluation"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string dataset;

  auto* simulate = app.add_subcommand("simulate", "capture a PGM+JSON stack over an attribute grid");
  add_common(simulate, flags);

  auto* crf = app.add_subcommand("crf", "camera response tools");
  crf->require_subcommand(1);
  auto* crf_fit = crf->add_subcommand("fit", "fit the inverse CRF from a dataset");
  add_common(crf_fit, flags);
  crf_fit->add_option("dataset", dataset, "dataset directory")->required();

  auto* metric = app.add_subcommand("metric", "metric tools");
  metric->require_subcommand(1);
  auto* sweep = metric->add_subcommand("sweep", "score every image of a dataset");
  add_common(sweep, flags);
  sweep->add_option("dataset", dataset, "dataset directory")->required();

  auto* synth = app.add_subcommand("synth", "synthesis tools");
  synth->require_subcommand(1);
  auto* validate = synth->add_subcommand("validate", "compare synthetic and real captures");
  add_common(validate, flags);
  validate->add_option("dataset", dataset, "dataset directory")->required();

  auto* optimize = app.add_subcommand("optimize", "run the controller against the simulator");
  add_common(optimize, flags);

  auto* exhaustive = app.add_subcommand("exhaustive", "score every grid point with real captures");
  add_common(exhaustive, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  try {
    const auto cfg = resolve(flags);
    const std::filesystem::path out = cfg.out;
    if (simulate->parsed()) {
      const auto ds = autocam::cli::cmd_simulate(cfg, out);
      spdlog::info("wrote {} images to {}", ds.images.size(), out.string());
    } else if (crf_fit->parsed()) {
      const auto c = autocam::cli::cmd_crf_fit(cfg, dataset, out);
      std::cout << "alpha=" << autocam::cli::num(c.alpha) << "\n";
    } else if (sweep->parsed()) {
      const auto r = autocam::cli::cmd_metric_sweep(cfg, dataset, out);
      spdlog::info("scored {} images", r.scores.size());
    } else if (validate->parsed()) {
      const auto s = autocam::cli::cmd_synth_validate(cfg, dataset, out);
      std::cout << s.summary_line() << "\n";
    } else if (optimize->parsed()) {
      const auto r = autocam::cli::cmd_optimize(cfg, out);
      spdlog::info("optimizer {:.3f} ms, synthesis {:.3f} ms, metric {:.3f} ms", r.wall_times.optimizer_ms(),
                   r.wall_times.synthesis_ms, r.wall_times.metric_ms);
      std::cout << "best exposure_ms=" << autocam::cli::num(r.best.exposure_ms)
                << " gain_db=" << autocam::cli::num(r.best.gain_db) << "\n";
    } else if (exhaustive->parsed()) {
      const auto r = autocam::cli::cmd_exhaustive(cfg, out);
      std::cout << "best exposure_ms=" << autocam::cli::num(r.best.exposure_ms)
                << " gain_db=" << autocam::cli::num(r.best.gain_db) << "\n";
    }
  } catch (const autocam::Error& e) {
    spdlog::error("{}", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kInternalExit;
  }
  return 0;
}
