#ifndef LYLAB_RUNNER_HPP
#define LYLAB_RUNNER_HPP

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace lylab {

/// CLI-facing orchestration: strict JSON configs, per-experiment execution,
/// bit-stable result emission.
///
/// Exit codes: 0 success, 2 validation error, 3 numerical failure.
struct RunnerOptions {
    std::string output_override;  // empty = use config's output_dir
    int jobs = 0;                 // 0 = hardware concurrency
    std::uint64_t seed_offset = 0;
};

struct RunOutcome {
    int exit_code = 0;
    std::vector<std::string> diagnostics;
};

/// Full validation without execution; returns every violation found.
std::vector<std::string> validate_config(const nlohmann::json& config);

/// Executes the selected experiment, writing results.json, aggregates.csv
/// and manifest.json under the output directory.
RunOutcome run_config(const nlohmann::json& config, const RunnerOptions& opts);

/// Ready-made demo config for one experiment name.
nlohmann::json demo_config(const std::string& experiment);

std::vector<std::string> known_experiments();

}  // namespace lylab

#endif
