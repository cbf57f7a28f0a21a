#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "conecraft/config.hpp"
#include "json.hpp"

namespace conecraft {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
};

struct RunResult {
  /// COMPLETE, PASS, FAIL, INCONCLUSIVE or CENSORING.
  std::string status;
  /// 0 for COMPLETE/PASS, 2 for INCONCLUSIVE/CENSORING, 1 for FAIL.
  int exit_status = 0;
  std::filesystem::path out_dir;
  nlohmann::json manifest;
};

/// Runs one experiment, writes its CSV/JSON outputs and manifest.json into the
/// output directory and returns the manifest. Module errors propagate as Error.
RunResult run(ExperimentConfig config, const RunOptions& options = {});

int exit_status_for(const std::string& status);

}  // namespace conecraft
