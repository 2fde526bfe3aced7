#pragma once

#include <filesystem>

#include "json.hpp"

#include "mi_contrast/harness.hpp"

namespace mic {

// JSON-configurable run: the benchmark settings plus the sweep grid and
// the SMILE clip used when the objective is "smile". Parsing is strict —
// unknown keys are rejected so typos fail before any computation — and
// config_to_json(config_from_json(j)) round-trips every setting.
struct RunConfig {
  BenchmarkConfig bench;
  SweepGrid sweep;
  double smile_clip = 5.0;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace mic
