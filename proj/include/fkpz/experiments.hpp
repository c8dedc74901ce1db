#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "fkpz/config.hpp"

namespace fkpz {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kCsvSchemaVersion = 1;

// Exit policy: 0 success, 2 validated-divergence verdicts (nonexistence or
// blow-up, which are expected scientific outcomes), 1 software/config errors.
struct RunOutcome {
  int exit_code = 0;
  std::string verdict = "ok";
  nlohmann::json manifest;
  std::vector<std::string> csv_files;
};

RunOutcome run_experiment(const ExperimentConfig& cfg);

// Parses, runs, writes the manifest; maps library errors to exit code 1.
RunOutcome run_config_file(const std::string& path);

// One sub-run per value; parameter is one of alpha, s, h, m. FKPZ_THREADS
// caps the parallel sub-runs.
RunOutcome scan(const ExperimentConfig& base, const std::string& param,
                const std::vector<double>& values);
RunOutcome scan_config_file(const std::string& path, const std::string& param,
                            const std::vector<double>& values);

}  // namespace fkpz
