#pragma once

#include <cstdint>
#include <string>

#include "grpolab/datagen.hpp"
#include "grpolab/embedding.hpp"
#include "grpolab/grpo.hpp"
#include "grpolab/policy.hpp"

namespace grpolab {

/// Everything a run needs. JSON keys mirror the nested field names; unknown
/// keys are rejected. Precedence: built-in defaults, then the config file,
/// then GRPOLAB_* environment variables, then command-line flags.
struct RunConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "runs/default";
    DatagenConfig datagen;
    EmbeddingConfig embedding;
    PolicyConfig policy;  // vocab_size 0 means "derive from the dataset"
    SamplingConfig sampling;
    AlignStageConfig align;
    SftStageConfig sft;
    GrpoConfig grpo;

    void validate() const;
};

std::string run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const std::string& content);

RunConfig load_run_config(const std::string& path);

/// Apply GRPOLAB_-prefixed environment variables: a nested key like
/// grpo.learning_rate maps to GRPOLAB_GRPO_LEARNING_RATE. Values parse by
/// the field's JSON type; parse failures raise ConfigError.
void apply_env_overrides(RunConfig& config);

}  // namespace grpolab
