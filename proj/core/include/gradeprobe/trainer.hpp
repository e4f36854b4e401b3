#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gradeprobe/environment.hpp"
#include "gradeprobe/policy.hpp"
#include "gradeprobe/ppo.hpp"

namespace gradeprobe {

struct TrainRunConfig {
    long total_timesteps = 75'000;  // environment steps per run
    int num_runs = 10;
    std::uint64_t rng_seed = 0;     // master seed; run r uses run_seed(rng_seed, r)
    int experiment_id = 1;
    long max_episodes = 0;          // optional episode cap per run, 0 = none

    void validate() const;
};

// Runs differ only in seed: master + run index.
[[nodiscard]] constexpr std::uint64_t run_seed(std::uint64_t master, int run_id) noexcept {
    return master + static_cast<std::uint64_t>(run_id);
}

struct TrainEnvironment {
    EpisodeLimits limits;
    RewardSpec reward;
    PpoConfig ppo;
    FeaturizerConfig featurizer = FeaturizerConfig::defaults();
    std::vector<std::string> seed_responses;
};

struct UpdateSummary {
    long update_index = 0;
    long episodes_so_far = 0;
    long steps_so_far = 0;
    double batch_mean_return = 0.0;
    ObjectiveTerms first_epoch;
    ObjectiveTerms last_epoch;
};

struct TrainResult {
    PolicyParameters params;
    long episodes = 0;
    long steps = 0;
    long updates = 0;
};

using EpisodeSink = std::function<void(const EpisodeRecord&)>;
using UpdateObserver = std::function<void(const UpdateSummary&)>;

// One training run. Each batch collects episodes_per_batch episodes (seed
// responses drawn uniformly), hands every finished episode to `sink`, then
// applies one PPO update. Stops once cumulative environment steps reach
// total_timesteps or the episode cap is hit; the final batch may be short.
// Grader failures propagate after the already-logged episodes were emitted.
[[nodiscard]] TrainResult train_run(const TrainRunConfig& cfg, int run_id, const TrainEnvironment& env,
                                    Grader& grader, const EpisodeSink& sink,
                                    const UpdateObserver& observer = {});

} // namespace gradeprobe
