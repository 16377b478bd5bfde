#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddsde/config.hpp"

namespace ddsde {

struct RunOverrides {
  std::string out_dir;                // empty keeps the config's
  std::optional<std::uint64_t> seed;  // replaces [particles].seed
  std::string density_source;         // "", "kde", or "coupled"
};

struct RunOutcome {
  int exit_code = 0;  // 0 all claims pass, 1 at least one failed
  std::string out_dir;
  std::vector<std::string> failed_claims;
  std::string summary;  // one [PASS]/[FAIL] line per claim
};

// Executes the configured engines and diagnostics, writing grids, curves,
// certificates, and manifest.json under the output directory. base_dir
// resolves relative paths inside the config (initial density files).
RunOutcome run_experiment(const ExperimentConfig& config,
                          const std::string& base_dir = ".",
                          const RunOverrides& overrides = {});
// Loads, validates (config_error on bad fields), then runs; base_dir is the
// config file's directory.
RunOutcome run_experiment_file(const std::string& config_path,
                               const RunOverrides& overrides = {});

struct CompareOutcome {
  int exit_code = 0;  // 0 pass, 1 over threshold
  std::string metric;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string text;
};

// metric: "l1" | "sup" | "weak-residual". Terminal densities are compared on
// the common grid (nested refinements restricted); weak-residual evaluates
// each run's stored trajectory against its own drift. Thresholds come from
// run_a's tolerances.
CompareOutcome compare_runs(const std::string& dir_a, const std::string& dir_b,
                            const std::string& metric);

// Renders one section per run from its manifest: claim tables with the bound
// each certifies, curve slopes, artifact checksum verification.
std::string report_runs(const std::vector<std::string>& run_dirs);

}  // namespace ddsde
