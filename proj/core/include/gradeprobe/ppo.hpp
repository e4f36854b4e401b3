#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gradeprobe/environment.hpp"
#include "gradeprobe/policy.hpp"

namespace gradeprobe {

struct PpoConfig {
    double clip_epsilon = 0.2;
    int epochs_per_batch = 4;
    int episodes_per_batch = 16;
    double learning_rate = 0.005;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double grad_norm_clip = 5.0;
    double gamma = 1.0;
    bool advantage_normalization = true;

    void validate() const;
};

// G_t = sum_{u >= t} gamma^(u - t) r_u
[[nodiscard]] std::vector<double> returns_to_go(std::span<const double> rewards, double gamma);
[[nodiscard]] std::vector<double> returns_to_go(const EpisodeRecord& episode, double gamma);

struct PpoSample {
    FeatureVector features;
    std::size_t action = 0;
    double old_prob = 0.0;
    double advantage = 0.0;
    double return_to_go = 0.0;
};

// Flattens episodes into per-step samples. Old probabilities and the value
// baseline come from `params`, which must be the policy that collected them.
// Advantages are G_t - V(s_t), normalized to mean 0 / std 1 when enabled.
[[nodiscard]] std::vector<PpoSample> build_ppo_samples(const PolicyParameters& params, const Featurizer& featurizer,
                                                       std::span<const EpisodeRecord> episodes,
                                                       const PpoConfig& cfg);

struct ObjectiveTerms {
    double objective = 0.0;   // surrogate + c_H * entropy - c_V * value_loss
    double surrogate = 0.0;   // mean clipped surrogate
    double entropy = 0.0;     // mean policy entropy
    double value_loss = 0.0;  // mean squared (V - G)
    double mean_ratio = 0.0;
    double clip_fraction = 0.0;  // share of samples with ratio outside [1-eps, 1+eps]
};

// Evaluates the PPO objective (to be maximized). When `gradient` is non-null it
// receives dObjective/dParams, shaped like `params`.
[[nodiscard]] ObjectiveTerms ppo_objective(const PolicyParameters& params, std::span<const PpoSample> samples,
                                           const PpoConfig& cfg, PolicyParameters* gradient = nullptr);

struct PpoUpdateResult {
    PolicyParameters params;
    std::vector<ObjectiveTerms> epochs;  // terms at the start of each epoch
    std::vector<double> grad_norms;      // pre-clip global norm per epoch
};

// epochs_per_batch full-batch gradient ascent steps with global-norm clipping.
// Throws TrainingError (with a diagnostic dump) on non-finite objective,
// gradient or parameters.
[[nodiscard]] PpoUpdateResult ppo_update(const PolicyParameters& params, const Featurizer& featurizer,
                                         std::span<const EpisodeRecord> episodes, const PpoConfig& cfg);

[[nodiscard]] PpoUpdateResult ppo_update(const PolicyParameters& params, std::vector<PpoSample> samples,
                                         const PpoConfig& cfg);

} // namespace gradeprobe
