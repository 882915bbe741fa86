// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "app/commands.hpp"
#include "app/config.hpp"

namespace app = specfunnel::app;

int main(int argc, char** argv) {
  CLI::App cli{"Speculative agentic routing: funnel serving simulator and calibration toolkit"};
  cli.require_subcommand(1);
  cli.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> endpoint;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  cli.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  cli.add_option("--seed", seed, "Top-level seed");
  cli.add_option("--endpoint", endpoint, "Remote backend base URL (else $SPEC_FUNNEL_ENDPOINT)");
  cli.add_option("--set", overrides, "Override a config field: path=value")->take_all();
  cli.add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto* run = cli.add_subcommand("run", "Serve the configured workload through the funnel");
  std::string bypass = "on";
  std::string calibration;
  run->add_option("--bypass", bypass, "on: full funnel; off: agentic-only baseline")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  run->add_option("--calibration", calibration, "calibration.json whose tau to use")->check(CLI::ExistingFile);

  auto* calibrate = cli.add_subcommand("calibrate", "Collect scores, sweep thresholds, pick tau");

  auto* ablate = cli.add_subcommand("ablate", "Sweep one hyperparameter");
  std::string axis;
  ablate->add_option("--axis", axis, "threshold | batch_size | top_k")
      ->required()
      ->check(CLI::IsMember({"threshold", "batch_size", "top_k"}));

  auto* report = cli.add_subcommand("report", "Summarize an output directory");

  auto* replay = cli.add_subcommand("replay", "Re-run a logged remote session offline");
  std::string replay_log;
  replay->add_option("log", replay_log, "Exchange log (JSONL)")->required()->check(CLI::ExistingFile);
  replay->add_option("--bypass", bypass, "on | off")->check(CLI::IsMember({"on", "off"}));

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : app::kExitConfig;
  }

  if (report->parsed()) {
    return app::guarded([&] { return app::cmd_report(out_dir, std::cout); }, std::cerr);
  }

  app::AppConfig config;
  const int loaded = app::guarded(
      [&] {
        app::LoadOptions options;
        if (!config_path.empty()) options.config_path = config_path;
        options.overrides = overrides;
        options.seed = seed;
        options.endpoint = endpoint;
        config = app::load_config(options);
        return app::kExitOk;
      },
      std::cerr);
  if (loaded != app::kExitOk) return loaded;

  app::RunOptions run_options;
  run_options.out_dir = out_dir;
  run_options.bypass = bypass == "on";
  if (!calibration.empty()) run_options.calibration = calibration;

  return app::guarded(
      [&] {
        if (run->parsed()) return app::cmd_run(config, run_options, std::cerr);
        if (calibrate->parsed()) return app::cmd_calibrate(config, out_dir, std::cerr);
        if (ablate->parsed()) return app::cmd_ablate(config, app::parse_axis(axis), out_dir, std::cerr);
        return app::cmd_replay(config, replay_log, run_options, std::cerr);
      },
      std::cerr);
}
