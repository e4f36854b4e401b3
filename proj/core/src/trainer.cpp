#include "gradeprobe/trainer.hpp"

#include "gradeprobe/errors.hpp"
#include "gradeprobe/presets.hpp"

namespace gradeprobe {

void TrainRunConfig::validate() const {
    if (total_timesteps < 1) throw ConfigError("run.total_timesteps: must be >= 1");
    if (num_runs < 1) throw ConfigError("run.num_runs: must be >= 1");
    if (max_episodes < 0) throw ConfigError("run.max_episodes: must be >= 0");
    if (!is_known_preset(experiment_id)) throw ConfigError("experiment: must be 1, 2 or 3");
}

TrainResult train_run(const TrainRunConfig& cfg, int run_id, const TrainEnvironment& env, Grader& grader,
                      const EpisodeSink& sink, const UpdateObserver& observer) {
    cfg.validate();
    env.limits.validate();
    env.reward.validate();
    env.ppo.validate();
    if (env.seed_responses.empty()) throw ConfigError("seed responses: at least one response is required");

    const ExperimentPreset& preset = experiment_preset(cfg.experiment_id);
    const Featurizer featurizer(preset.phrases, env.featurizer);
    const EpisodeContext ctx{preset.phrases, env.limits, env.reward};
    const std::uint64_t seed = run_seed(cfg.rng_seed, run_id);

    Rng init_rng(derive_seed(seed, 0));
    TrainResult result;
    result.params = PolicyParameters::initialize(featurizer.dimension(), preset.action_count(), init_rng);

    auto budget_left = [&] {
        if (result.steps >= cfg.total_timesteps) return false;
        return cfg.max_episodes == 0 || result.episodes < cfg.max_episodes;
    };

    std::vector<EpisodeRecord> batch;
    while (budget_left()) {
        batch.clear();
        const FeaturePolicy policy(result.params, featurizer);
        while (static_cast<int>(batch.size()) < env.ppo.episodes_per_batch && budget_left()) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(result.episodes) + 1));
            const std::string& seed_text = env.seed_responses[uniform_index(rng, env.seed_responses.size())];
            EpisodeRecord rec = run_episode(seed_text, policy, grader, ctx, rng);
            rec.experiment_id = cfg.experiment_id;
            rec.run_id = run_id;
            rec.episode_index = result.episodes;
            result.episodes += 1;
            result.steps += static_cast<long>(rec.transitions.size());
            if (sink) sink(rec);
            batch.push_back(std::move(rec));
        }

        PpoUpdateResult update = ppo_update(result.params, featurizer, batch, env.ppo);
        result.params = std::move(update.params);
        result.updates += 1;

        if (observer && !update.epochs.empty()) {
            UpdateSummary summary;
            summary.update_index = result.updates - 1;
            summary.episodes_so_far = result.episodes;
            summary.steps_so_far = result.steps;
            double total = 0.0;
            for (const auto& ep : batch) total += ep.episode_return;
            summary.batch_mean_return = total / static_cast<double>(batch.size());
            summary.first_epoch = update.epochs.front();
            summary.last_epoch = update.epochs.back();
            observer(summary);
        }
    }
    return result;
}

} // namespace gradeprobe
