#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gradeprobe/environment.hpp"
#include "gradeprobe/grader.hpp"
#include "gradeprobe/random.hpp"

namespace gradeprobe {

inline constexpr std::size_t kHiddenWidth = 32;

// Features are sparse counts in [0,1]; a wide init keeps the tanh units from
// collapsing onto the bias direction.
inline constexpr double kHiddenInitScale = 2.0;

using FeatureVector = std::vector<double>;

struct FeaturizerConfig {
    std::vector<std::string> trap_ngrams;
    std::vector<std::string> relevance_unigrams;
    bool include_step_feature = false;
    int max_steps = 8;  // normalizes the optional step feature

    // Trap and relevance vocabularies taken from the mock rubric defaults.
    [[nodiscard]] static FeaturizerConfig defaults();

    bool operator==(const FeaturizerConfig&) const = default;
};

// Text-only state encoding, dimension P + 4 (P + 5 with the step feature):
//   [0, P)  min(count of phrase j, 3) / 3
//   P       min(token count, 50) / 50
//   P + 1   min(trap n-gram count, 5) / 5
//   P + 2   min(relevance unigram count, 10) / 10
//   P + 3   bias, always 1
//   P + 4   steps_taken / max_steps (optional)
// Counting uses rubric_tokens, the same tokenization as the mock grader.
class Featurizer {
public:
    Featurizer(std::span<const std::string> phrases, FeaturizerConfig cfg);

    [[nodiscard]] std::size_t dimension() const noexcept;
    [[nodiscard]] std::size_t phrase_count() const noexcept { return phrase_tokens_.size(); }
    [[nodiscard]] const FeaturizerConfig& config() const noexcept { return cfg_; }

    [[nodiscard]] FeatureVector operator()(const ResponseState& state) const;

private:
    FeaturizerConfig cfg_;
    std::vector<std::vector<std::string>> phrase_tokens_;
    std::vector<std::vector<std::string>> trap_tokens_;
};

// Softmax policy with one tanh hidden layer plus a linear value baseline on
// the raw features. Matrices are row-major: hidden_weights[d * H + j],
// output_weights[j * A + a].
struct PolicyParameters {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t action_count = 0;

    std::vector<double> hidden_weights;
    std::vector<double> hidden_bias;
    std::vector<double> output_weights;
    std::vector<double> output_bias;
    std::vector<double> value_weights;
    double value_bias = 0.0;

    [[nodiscard]] static PolicyParameters zeros(std::size_t input_dim, std::size_t action_count,
                                                std::size_t hidden_dim = kHiddenWidth);

    // Hidden layer ~ U(-kHiddenInitScale, kHiddenInitScale); output and value
    // layers zero, so the initial policy is exactly uniform.
    [[nodiscard]] static PolicyParameters initialize(std::size_t input_dim, std::size_t action_count, Rng& rng,
                                                     std::size_t hidden_dim = kHiddenWidth);

    [[nodiscard]] std::size_t parameter_count() const noexcept;
    [[nodiscard]] bool all_finite() const noexcept;

    // Visits each parameter block in a fixed order: hidden W, hidden b, output W,
    // output b, value w, value b.
    void for_each_block(const std::function<void(std::string_view, std::span<double>)>& fn);
    void for_each_block(const std::function<void(std::string_view, std::span<const double>)>& fn) const;

    bool operator==(const PolicyParameters&) const = default;
};

struct PolicyForward {
    std::vector<double> hidden;  // tanh activations
    std::vector<double> logits;
    std::vector<double> probs;
    double value = 0.0;
};

// Throws ConfigError when the feature dimension does not match the parameters.
[[nodiscard]] PolicyForward policy_forward(const PolicyParameters& params, std::span<const double> features);

[[nodiscard]] std::vector<double> action_distribution(const PolicyParameters& params,
                                                      std::span<const double> features);

[[nodiscard]] double state_value(const PolicyParameters& params, std::span<const double> features);

// Binds parameters and a featurizer into an ActionPolicy for run_episode.
class FeaturePolicy final : public ActionPolicy {
public:
    FeaturePolicy(const PolicyParameters& params, const Featurizer& featurizer);

    [[nodiscard]] std::size_t action_count() const override { return params_.action_count; }
    [[nodiscard]] std::vector<double> action_probabilities(const ResponseState& state) const override;

private:
    const PolicyParameters& params_;
    const Featurizer& featurizer_;
};

// Versioned JSON document for trained parameters.
struct PolicyDocument {
    static constexpr int kFormatVersion = 1;

    PolicyParameters params;
    FeaturizerConfig featurizer;
    int experiment_id = 0;
    std::uint64_t rng_seed = 0;
};

[[nodiscard]] std::string policy_to_json(const PolicyDocument& doc);

// Throws ConfigError on unknown versions or inconsistent dimensions.
[[nodiscard]] PolicyDocument policy_from_json(std::string_view text);

} // namespace gradeprobe
