// lab: run the numerical experiments E1..E6 from a TOML-style config, list
// the scenario registry, or replay a manifest. Exit codes: 0 all checks
// passed, 2 check failures, 1 errors.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sdelab/errors.hpp"
#include "sdelab/experiments.hpp"
#include "sdelab/labcfg.hpp"

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for localized SDE density estimates"};
  app.require_subcommand(1);

  std::string config_path;
  std::string manifest_path;
  std::string outdir_override;

  CLI::App* run = app.add_subcommand("run", "run an experiment from a config");
  run->add_option("config", config_path, "config file (TOML-style)")
      ->required();
  run->add_option("--outdir", outdir_override,
                  "override the configured output directory");

  CLI::App* list = app.add_subcommand("list", "print the scenario registry");

  CLI::App* rerun =
      app.add_subcommand("rerun", "re-execute the config stored in a manifest");
  rerun->add_option("manifest", manifest_path, "manifest.json path")
      ->required();
  rerun->add_option("--outdir", outdir_override,
                    "override the manifest output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const sdelab::Config cfg = sdelab::Config::parse_file(config_path);
      const sdelab::ExperimentOutcome out =
          sdelab::run_experiment(cfg, outdir_override);
      std::cout << "manifest: " << out.manifest_path << "\n";
      for (const auto& f : out.outputs) std::cout << "output: " << f << "\n";
      if (out.exit_code != 0) std::cout << "CHECK FAILURES (see manifest)\n";
      return out.exit_code;
    }
    if (list->parsed()) {
      std::cout << sdelab::list_scenarios_text();
      return 0;
    }
    if (rerun->parsed()) {
      const sdelab::ExperimentOutcome out =
          sdelab::rerun_manifest(manifest_path, outdir_override);
      std::cout << "manifest: " << out.manifest_path << "\n";
      if (out.exit_code != 0) std::cout << "CHECK FAILURES (see manifest)\n";
      return out.exit_code;
    }
  } catch (const sdelab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
