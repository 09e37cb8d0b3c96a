// walkidx: command-line driver for the walkability index pipeline.
//
//   walkidx <components|index|aggregate|moran|render|pipeline> --config FILE
//           [--threads N] [--force] [--allow-degenerate]
//
// Exit codes: 0 success, 2 config/validation error, 3 data error,
// 4 degenerate statistics.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "walkidx/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDegenerate = 4;

int exit_code(walkidx::ErrorClass c) {
  switch (c) {
    case walkidx::ErrorClass::config: return kExitConfig;
    case walkidx::ErrorClass::data: return kExitData;
    case walkidx::ErrorClass::degenerate: return kExitDegenerate;
  }
  return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Walkability index over a regular 100 m grid"};
  app.require_subcommand(1);

  std::string config_path;
  unsigned threads = 0;
  bool force = false;
  bool allow_degenerate = false;
  app.add_option("--config", config_path, "Pipeline config file (key = value)")->required();
  app.add_option("--threads", threads, "Worker threads (default: config or available cores)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--force", force, "Recompute stages even when outputs are up to date");
  app.add_flag("--allow-degenerate", allow_degenerate, "Map constant components to z = 0 instead of failing");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"components", "Compute the eight raw component rasters"},
      {"index", "Smooth, standardize and compose the index and deciles"},
      {"aggregate", "Population-weighted unit aggregates, strata, CDF and correlations"},
      {"moran", "Global Moran's I per administrative unit"},
      {"render", "Render the decile map as a PPM image"},
      {"pipeline", "Run all stages in dependency order"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const walkidx::PipelineConfig cfg = walkidx::load_config(config_path);
    walkidx::RunOptions opt;
    if (threads > 0) opt.threads = threads;
    opt.force = force;
    opt.allow_degenerate = allow_degenerate;

    const std::string cmd = app.get_subcommands().front()->get_name();
    std::vector<walkidx::StageReport> reports;
    if (cmd == "pipeline") {
      reports = walkidx::cmd_pipeline(cfg, opt);
    } else {
      walkidx::validate_inputs(cfg);
      if (cmd == "components") reports.push_back(walkidx::cmd_components(cfg, opt));
      else if (cmd == "index") reports.push_back(walkidx::cmd_index(cfg, opt));
      else if (cmd == "aggregate") reports.push_back(walkidx::cmd_aggregate(cfg, opt));
      else if (cmd == "moran") reports.push_back(walkidx::cmd_moran(cfg, opt));
      else reports.push_back(walkidx::cmd_render(cfg, opt));
      walkidx::write_manifest(cfg, reports, opt.threads.value_or(cfg.threads));
    }
    for (const auto& r : reports)
      std::cerr << r.name << ": " << (r.ran ? "ran" : "skipped") << " (" << r.seconds << " s)\n";
    return 0;
  } catch (const walkidx::Error& e) {
    std::cerr << "walkidx: error: " << e.what() << '\n';
    return exit_code(e.error_class());
  } catch (const std::exception& e) {
    std::cerr << "walkidx: error: " << e.what() << '\n';
    return kExitData;
  }
}
