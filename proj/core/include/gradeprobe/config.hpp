#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gradeprobe/environment.hpp"
#include "gradeprobe/grader.hpp"
#include "gradeprobe/policy.hpp"
#include "gradeprobe/ppo.hpp"
#include "gradeprobe/trainer.hpp"

namespace gradeprobe {

inline constexpr int kConfigSchemaVersion = 1;

[[nodiscard]] std::string library_version();

struct AnalysisConfig {
    double top_fraction = 0.05;
    std::size_t window = 200;
    std::size_t episodes_per_run = 18'250;
};

// One JSON document with sections env / grader / ppo / run / analysis. Every
// field has a default, so {"experiment": 1} is a complete config.
struct ExperimentConfig {
    int experiment_id = 1;
    EpisodeLimits limits;
    RewardSpec reward;
    bool include_step_feature = false;
    GraderBinding grader = GraderBinding::mock();
    PpoConfig ppo;
    TrainRunConfig run;
    AnalysisConfig analysis;
    std::string responses_path;  // empty = shipped synthetic seed file

    [[nodiscard]] TrainEnvironment train_environment(std::vector<std::string> seed_responses) const;
};

// Throws ConfigError whose message starts with the offending field path,
// e.g. "experiment: must be 1, 2 or 3" or "ppo.clip_epsilon: must lie in (0, 1)".
[[nodiscard]] ExperimentConfig parse_experiment_config(std::string_view json_text);
[[nodiscard]] ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Fully resolved snapshot; parse_experiment_config accepts it back unchanged.
[[nodiscard]] std::string config_to_json(const ExperimentConfig& cfg);

// One response per line, blank lines skipped, whitespace normalized.
[[nodiscard]] std::vector<std::string> load_seed_responses(const std::filesystem::path& path);

// Location of the shipped seed_responses.txt (overridable via GRADEPROBE_DATA_DIR).
[[nodiscard]] std::filesystem::path default_seed_responses_path();

} // namespace gradeprobe
