#pragma once

#include <filesystem>
#include <string>

#include "embedhalluc/harness/experiment.hpp"

namespace embedhalluc::harness {

// JSON experiment configs. Omitted keys keep their defaults; unknown keys,
// wrong types and bad enum names throw ConfigError naming the key path.
// Relative paths are resolved against `base_dir`.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Every field, so the output reloads to the same config.
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace embedhalluc::harness
