#include "gradeprobe/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

void PpoConfig::validate() const {
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("ppo.clip_epsilon: must lie in (0, 1)");
    if (epochs_per_batch < 1) throw ConfigError("ppo.epochs_per_batch: must be >= 1");
    if (episodes_per_batch < 1) throw ConfigError("ppo.episodes_per_batch: must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("ppo.learning_rate: must be > 0");
    if (!(entropy_coef >= 0.0)) throw ConfigError("ppo.entropy_coef: must be >= 0");
    if (!(value_coef >= 0.0)) throw ConfigError("ppo.value_coef: must be >= 0");
    if (!(grad_norm_clip > 0.0)) throw ConfigError("ppo.grad_norm_clip: must be > 0");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma: must lie in (0, 1]");
}

std::vector<double> returns_to_go(std::span<const double> rewards, double gamma) {
    std::vector<double> g(rewards.size());
    double running = 0.0;
    for (std::size_t i = rewards.size(); i-- > 0;) {
        running = rewards[i] + gamma * running;
        g[i] = running;
    }
    return g;
}

std::vector<double> returns_to_go(const EpisodeRecord& episode, double gamma) {
    std::vector<double> rewards;
    rewards.reserve(episode.transitions.size());
    for (const auto& t : episode.transitions) rewards.push_back(t.reward);
    return returns_to_go(rewards, gamma);
}

std::vector<PpoSample> build_ppo_samples(const PolicyParameters& params, const Featurizer& featurizer,
                                         std::span<const EpisodeRecord> episodes, const PpoConfig& cfg) {
    const ActionSpace space(featurizer.phrase_count());
    if (space.size() != params.action_count) {
        throw ConfigError("action space of size " + std::to_string(space.size()) + " does not match policy with " +
                          std::to_string(params.action_count) + " actions");
    }

    std::vector<PpoSample> samples;
    for (const auto& ep : episodes) {
        const auto g = returns_to_go(ep, cfg.gamma);
        for (std::size_t t = 0; t < ep.transitions.size(); ++t) {
            const auto& tr = ep.transitions[t];
            PpoSample s;
            s.features = featurizer(ResponseState(tr.state_text, static_cast<int>(t)));
            s.action = space.encode(tr.action);
            const auto fwd = policy_forward(params, s.features);
            s.old_prob = fwd.probs[s.action];
            s.return_to_go = g[t];
            s.advantage = g[t] - fwd.value;
            samples.push_back(std::move(s));
        }
    }

    if (cfg.advantage_normalization && !samples.empty()) {
        const double n = static_cast<double>(samples.size());
        double mean = 0.0;
        for (const auto& s : samples) mean += s.advantage;
        mean /= n;
        double var = 0.0;
        for (const auto& s : samples) var += (s.advantage - mean) * (s.advantage - mean);
        const double sd = std::sqrt(var / n);
        for (auto& s : samples) s.advantage = (s.advantage - mean) / (sd + 1e-8);
    }
    return samples;
}

ObjectiveTerms ppo_objective(const PolicyParameters& params, std::span<const PpoSample> samples,
                             const PpoConfig& cfg, PolicyParameters* gradient) {
    ObjectiveTerms terms;
    if (gradient) *gradient = PolicyParameters::zeros(params.input_dim, params.action_count, params.hidden_dim);
    if (samples.empty()) return terms;

    const std::size_t d_in = params.input_dim;
    const std::size_t h_dim = params.hidden_dim;
    const std::size_t a_dim = params.action_count;
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    const double lo = 1.0 - cfg.clip_epsilon;
    const double hi = 1.0 + cfg.clip_epsilon;

    std::vector<double> log_probs(a_dim);
    std::vector<double> d_logits(a_dim);
    std::vector<double> d_hidden(h_dim);
    std::size_t clipped = 0;

    for (const auto& s : samples) {
        const PolicyForward fwd = policy_forward(params, s.features);

        const double max_logit = *std::max_element(fwd.logits.begin(), fwd.logits.end());
        double z = 0.0;
        for (double l : fwd.logits) z += std::exp(l - max_logit);
        const double log_z = max_logit + std::log(z);
        double entropy = 0.0;
        for (std::size_t a = 0; a < a_dim; ++a) {
            log_probs[a] = fwd.logits[a] - log_z;
            entropy -= fwd.probs[a] * log_probs[a];
        }

        const double ratio = std::exp(log_probs[s.action] - std::log(s.old_prob));
        const double unclipped = ratio * s.advantage;
        const double clipped_term = std::clamp(ratio, lo, hi) * s.advantage;
        const double surrogate = std::min(unclipped, clipped_term);
        if (ratio < lo || ratio > hi) ++clipped;

        const double value_err = fwd.value - s.return_to_go;

        terms.surrogate += surrogate * inv_n;
        terms.entropy += entropy * inv_n;
        terms.value_loss += value_err * value_err * inv_n;
        terms.mean_ratio += ratio * inv_n;

        if (!gradient) continue;

        // dSurrogate/dRatio is A on the unclipped branch, 0 where the clip binds.
        const double d_ratio = unclipped <= clipped_term ? s.advantage : 0.0;
        for (std::size_t a = 0; a < a_dim; ++a) {
            const double indicator = a == s.action ? 1.0 : 0.0;
            const double d_surr = d_ratio * ratio * (indicator - fwd.probs[a]);
            const double d_ent = -fwd.probs[a] * (log_probs[a] + entropy);
            d_logits[a] = inv_n * (d_surr + cfg.entropy_coef * d_ent);
        }

        std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
        for (std::size_t j = 0; j < h_dim; ++j) {
            const double h = fwd.hidden[j];
            double* g_row = &gradient->output_weights[j * a_dim];
            const double* w_row = &params.output_weights[j * a_dim];
            double acc = 0.0;
            for (std::size_t a = 0; a < a_dim; ++a) {
                g_row[a] += h * d_logits[a];
                acc += w_row[a] * d_logits[a];
            }
            d_hidden[j] = acc * (1.0 - h * h);
        }
        for (std::size_t a = 0; a < a_dim; ++a) gradient->output_bias[a] += d_logits[a];
        for (std::size_t d = 0; d < d_in; ++d) {
            const double x = s.features[d];
            if (x == 0.0) continue;
            double* g_row = &gradient->hidden_weights[d * h_dim];
            for (std::size_t j = 0; j < h_dim; ++j) g_row[j] += x * d_hidden[j];
        }
        for (std::size_t j = 0; j < h_dim; ++j) gradient->hidden_bias[j] += d_hidden[j];

        const double d_value = -cfg.value_coef * 2.0 * value_err * inv_n;
        for (std::size_t d = 0; d < d_in; ++d) gradient->value_weights[d] += d_value * s.features[d];
        gradient->value_bias += d_value;
    }

    terms.clip_fraction = static_cast<double>(clipped) * inv_n;
    terms.objective = terms.surrogate + cfg.entropy_coef * terms.entropy - cfg.value_coef * terms.value_loss;
    return terms;
}

namespace {

double global_norm(const PolicyParameters& g) {
    double sq = 0.0;
    g.for_each_block([&](std::string_view, std::span<const double> block) {
        for (double v : block) sq += v * v;
    });
    return std::sqrt(sq);
}

[[noreturn]] void fail(const std::string& what, const ObjectiveTerms& t, double grad_norm, int epoch) {
    std::ostringstream msg;
    msg << "PPO update failed at epoch " << epoch << ": " << what << " (objective=" << t.objective
        << ", surrogate=" << t.surrogate << ", entropy=" << t.entropy << ", value_loss=" << t.value_loss
        << ", mean_ratio=" << t.mean_ratio << ", clip_fraction=" << t.clip_fraction << ", grad_norm=" << grad_norm
        << ")";
    throw TrainingError(msg.str());
}

} // namespace

PpoUpdateResult ppo_update(const PolicyParameters& params, std::vector<PpoSample> samples, const PpoConfig& cfg) {
    cfg.validate();
    PpoUpdateResult result;
    result.params = params;
    if (samples.empty()) return result;

    PolicyParameters grad;
    for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
        const ObjectiveTerms terms = ppo_objective(result.params, samples, cfg, &grad);
        const double norm = global_norm(grad);
        if (!std::isfinite(terms.objective)) fail("non-finite objective", terms, norm, epoch);
        if (!std::isfinite(norm)) fail("non-finite gradient", terms, norm, epoch);
        result.epochs.push_back(terms);
        result.grad_norms.push_back(norm);

        const double scale = cfg.learning_rate * (norm > cfg.grad_norm_clip ? cfg.grad_norm_clip / norm : 1.0);
        std::vector<std::span<const double>> grad_blocks;
        grad.for_each_block([&](std::string_view, std::span<const double> b) { grad_blocks.push_back(b); });
        std::size_t block = 0;
        result.params.for_each_block([&](std::string_view, std::span<double> p) {
            const auto g = grad_blocks[block++];
            for (std::size_t i = 0; i < p.size(); ++i) p[i] += scale * g[i];
        });
        if (!result.params.all_finite()) fail("non-finite parameters after step", terms, norm, epoch);
    }
    return result;
}

PpoUpdateResult ppo_update(const PolicyParameters& params, const Featurizer& featurizer,
                           std::span<const EpisodeRecord> episodes, const PpoConfig& cfg) {
    cfg.validate();
    return ppo_update(params, build_ppo_samples(params, featurizer, episodes, cfg), cfg);
}

} // namespace gradeprobe
