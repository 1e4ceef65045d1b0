#pragma once

#include <string>
#include <vector>

#include "sdelab/labcfg.hpp"
#include "sdelab/scenario.hpp"

namespace sdelab {

struct ExperimentOutcome {
  int exit_code = 0;  // 0 = all checks passed, 2 = some check failed
  std::vector<std::string> outputs;
  std::string manifest_path;
};

// Resolves the scenario for a config: an inline [scenario] section (new or
// overriding a registry entry by name), else the [experiment] scenario key.
Scenario scenario_from_config(const Config& cfg, const ScenarioRegistry& reg);

// Runs one of E1..E6 per the [experiment] section, writes CSV/JSON/SVG
// artifacts plus manifest.json into the output directory. Errors throw;
// check failures are recorded in the manifest and set exit code 2.
ExperimentOutcome run_experiment(const Config& cfg,
                                 const std::string& outdir_override = "");

// Re-executes the config embedded in a manifest (byte-identical CSVs).
ExperimentOutcome rerun_manifest(const std::string& manifest_path,
                                 const std::string& outdir_override = "");

std::string list_scenarios_text();

}  // namespace sdelab
