#pragma once

#include <filesystem>

#include "hadid/evaluation.hpp"
#include "hadid/prosody.hpp"

namespace hadid {

inline constexpr const char* kToolkitVersion = "1.0.0";

// Every tunable of the pipeline in one place; the CLI loads this from an
// optional JSON file and then applies flag overrides on top.
struct ToolkitConfig {
    PipelineConfig pipeline;
    LcpnConfig lcpn;
    int k_folds = 5;
    int flat_feature_k = 7;
    int jobs = 0;  // 0 = hardware concurrency
};

ToolkitConfig load_toolkit_config(const std::filesystem::path& path);
void save_toolkit_config(const std::filesystem::path& path, const ToolkitConfig& config);

// Validates against the module preconditions (gate < 0 dB, pitch band sane,
// nucleus thresholds positive, train config usable). Throws InvalidConfig.
void validate(const ToolkitConfig& config);

}  // namespace hadid
