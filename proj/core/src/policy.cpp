#include "gradeprobe/policy.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "gradeprobe/errors.hpp"
#include "gradeprobe/text.hpp"

namespace gradeprobe {

// ─── Featurizer ───────────────────────────────────────────────────────────────

FeaturizerConfig FeaturizerConfig::defaults() {
    const auto rubric = MockRubricConfig::defaults();
    FeaturizerConfig cfg;
    for (const auto& t : rubric.trap_ngrams) cfg.trap_ngrams.push_back(t.ngram);
    cfg.relevance_unigrams = rubric.relevance_unigrams;
    return cfg;
}

Featurizer::Featurizer(std::span<const std::string> phrases, FeaturizerConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.include_step_feature && cfg_.max_steps < 1) {
        throw ConfigError("featurizer.max_steps: must be >= 1 when the step feature is enabled");
    }
    for (const auto& p : phrases) phrase_tokens_.push_back(rubric_tokens(p));
    for (const auto& t : cfg_.trap_ngrams) trap_tokens_.push_back(rubric_tokens(t));
}

std::size_t Featurizer::dimension() const noexcept {
    return phrase_tokens_.size() + 4 + (cfg_.include_step_feature ? 1 : 0);
}

FeatureVector Featurizer::operator()(const ResponseState& state) const {
    const auto tokens = rubric_tokens(state.text());
    const std::size_t p = phrase_tokens_.size();
    FeatureVector f(dimension(), 0.0);

    auto capped = [](std::size_t count, double cap) { return std::min(static_cast<double>(count), cap) / cap; };

    for (std::size_t j = 0; j < p; ++j) f[j] = capped(count_occurrences(tokens, phrase_tokens_[j]), 3.0);
    f[p] = capped(tokens.size(), 50.0);

    std::size_t traps = 0;
    for (const auto& t : trap_tokens_) traps += count_occurrences(tokens, t);
    f[p + 1] = capped(traps, 5.0);

    std::size_t relevant = 0;
    for (const auto& w : cfg_.relevance_unigrams) {
        relevant += static_cast<std::size_t>(std::count(tokens.begin(), tokens.end(), w));
    }
    f[p + 2] = capped(relevant, 10.0);
    f[p + 3] = 1.0;

    if (cfg_.include_step_feature) {
        f[p + 4] = std::clamp(static_cast<double>(state.steps_taken()) / cfg_.max_steps, 0.0, 1.0);
    }
    return f;
}

// ─── Parameters ───────────────────────────────────────────────────────────────

PolicyParameters PolicyParameters::zeros(std::size_t input_dim, std::size_t action_count, std::size_t hidden_dim) {
    if (input_dim == 0 || action_count == 0 || hidden_dim == 0) throw ConfigError("policy dimensions must be positive");
    PolicyParameters p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.action_count = action_count;
    p.hidden_weights.assign(input_dim * hidden_dim, 0.0);
    p.hidden_bias.assign(hidden_dim, 0.0);
    p.output_weights.assign(hidden_dim * action_count, 0.0);
    p.output_bias.assign(action_count, 0.0);
    p.value_weights.assign(input_dim, 0.0);
    return p;
}

PolicyParameters PolicyParameters::initialize(std::size_t input_dim, std::size_t action_count, Rng& rng,
                                              std::size_t hidden_dim) {
    PolicyParameters p = zeros(input_dim, action_count, hidden_dim);
    for (double& w : p.hidden_weights) w = (2.0 * uniform01(rng) - 1.0) * kHiddenInitScale;
    for (double& b : p.hidden_bias) b = (2.0 * uniform01(rng) - 1.0) * kHiddenInitScale;
    return p;
}

std::size_t PolicyParameters::parameter_count() const noexcept {
    return hidden_weights.size() + hidden_bias.size() + output_weights.size() + output_bias.size() +
           value_weights.size() + 1;
}

bool PolicyParameters::all_finite() const noexcept {
    bool ok = true;
    for_each_block([&](std::string_view, std::span<const double> block) {
        for (double v : block) ok = ok && std::isfinite(v);
    });
    return ok;
}

void PolicyParameters::for_each_block(const std::function<void(std::string_view, std::span<double>)>& fn) {
    fn("hidden_weights", hidden_weights);
    fn("hidden_bias", hidden_bias);
    fn("output_weights", output_weights);
    fn("output_bias", output_bias);
    fn("value_weights", value_weights);
    fn("value_bias", std::span<double>(&value_bias, 1));
}

void PolicyParameters::for_each_block(
    const std::function<void(std::string_view, std::span<const double>)>& fn) const {
    fn("hidden_weights", hidden_weights);
    fn("hidden_bias", hidden_bias);
    fn("output_weights", output_weights);
    fn("output_bias", output_bias);
    fn("value_weights", value_weights);
    fn("value_bias", std::span<const double>(&value_bias, 1));
}

// ─── Forward ──────────────────────────────────────────────────────────────────

namespace {

void check_dims(const PolicyParameters& params, std::span<const double> features) {
    if (features.size() != params.input_dim) {
        throw ConfigError("feature dimension " + std::to_string(features.size()) +
                          " does not match policy input dimension " + std::to_string(params.input_dim));
    }
}

} // namespace

PolicyForward policy_forward(const PolicyParameters& params, std::span<const double> features) {
    check_dims(params, features);
    const std::size_t d_in = params.input_dim;
    const std::size_t h_dim = params.hidden_dim;
    const std::size_t a_dim = params.action_count;

    PolicyForward out;
    out.hidden.assign(params.hidden_bias.begin(), params.hidden_bias.end());
    for (std::size_t d = 0; d < d_in; ++d) {
        const double x = features[d];
        if (x == 0.0) continue;
        const double* row = &params.hidden_weights[d * h_dim];
        for (std::size_t j = 0; j < h_dim; ++j) out.hidden[j] += x * row[j];
    }
    for (double& h : out.hidden) h = std::tanh(h);

    out.logits.assign(params.output_bias.begin(), params.output_bias.end());
    for (std::size_t j = 0; j < h_dim; ++j) {
        const double h = out.hidden[j];
        const double* row = &params.output_weights[j * a_dim];
        for (std::size_t a = 0; a < a_dim; ++a) out.logits[a] += h * row[a];
    }

    const double max_logit = *std::max_element(out.logits.begin(), out.logits.end());
    out.probs.resize(a_dim);
    double z = 0.0;
    for (std::size_t a = 0; a < a_dim; ++a) {
        out.probs[a] = std::exp(out.logits[a] - max_logit);
        z += out.probs[a];
    }
    for (double& p : out.probs) p /= z;

    out.value = params.value_bias;
    for (std::size_t d = 0; d < d_in; ++d) out.value += params.value_weights[d] * features[d];
    return out;
}

std::vector<double> action_distribution(const PolicyParameters& params, std::span<const double> features) {
    return policy_forward(params, features).probs;
}

double state_value(const PolicyParameters& params, std::span<const double> features) {
    check_dims(params, features);
    double v = params.value_bias;
    for (std::size_t d = 0; d < params.input_dim; ++d) v += params.value_weights[d] * features[d];
    return v;
}

FeaturePolicy::FeaturePolicy(const PolicyParameters& params, const Featurizer& featurizer)
    : params_(params), featurizer_(featurizer) {
    if (featurizer_.dimension() != params_.input_dim) {
        throw ConfigError("featurizer dimension " + std::to_string(featurizer_.dimension()) +
                          " does not match policy input dimension " + std::to_string(params_.input_dim));
    }
}

std::vector<double> FeaturePolicy::action_probabilities(const ResponseState& state) const {
    return action_distribution(params_, featurizer_(state));
}

// ─── Serialization ────────────────────────────────────────────────────────────

using nlohmann::ordered_json;

std::string policy_to_json(const PolicyDocument& doc) {
    const auto& p = doc.params;
    ordered_json j;
    j["format"] = "gradeprobe.policy";
    j["version"] = PolicyDocument::kFormatVersion;
    j["experiment_id"] = doc.experiment_id;
    j["rng_seed"] = doc.rng_seed;
    j["dimensions"] = {{"input", p.input_dim}, {"hidden", p.hidden_dim}, {"actions", p.action_count}};
    j["featurizer"] = {{"trap_ngrams", doc.featurizer.trap_ngrams},
                       {"relevance_unigrams", doc.featurizer.relevance_unigrams},
                       {"include_step_feature", doc.featurizer.include_step_feature},
                       {"max_steps", doc.featurizer.max_steps}};
    j["hidden_weights"] = p.hidden_weights;
    j["hidden_bias"] = p.hidden_bias;
    j["output_weights"] = p.output_weights;
    j["output_bias"] = p.output_bias;
    j["value_weights"] = p.value_weights;
    j["value_bias"] = p.value_bias;
    return j.dump(2) + "\n";
}

PolicyDocument policy_from_json(std::string_view text) {
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("policy file is not a JSON object");
    try {
        if (j.at("format").get<std::string>() != "gradeprobe.policy") throw ConfigError("policy file: wrong format tag");
        const int version = j.at("version").get<int>();
        if (version != PolicyDocument::kFormatVersion) {
            throw ConfigError("policy file: unsupported version " + std::to_string(version));
        }
        PolicyDocument doc;
        doc.experiment_id = j.at("experiment_id").get<int>();
        doc.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        const auto& dims = j.at("dimensions");
        doc.params = PolicyParameters::zeros(dims.at("input").get<std::size_t>(), dims.at("actions").get<std::size_t>(),
                                             dims.at("hidden").get<std::size_t>());
        const auto& fz = j.at("featurizer");
        doc.featurizer.trap_ngrams = fz.at("trap_ngrams").get<std::vector<std::string>>();
        doc.featurizer.relevance_unigrams = fz.at("relevance_unigrams").get<std::vector<std::string>>();
        doc.featurizer.include_step_feature = fz.at("include_step_feature").get<bool>();
        doc.featurizer.max_steps = fz.at("max_steps").get<int>();

        auto load = [&](const char* key, std::vector<double>& dst) {
            auto values = j.at(key).get<std::vector<double>>();
            if (values.size() != dst.size()) {
                throw ConfigError(std::string("policy file: ") + key + " has " + std::to_string(values.size()) +
                                  " entries, expected " + std::to_string(dst.size()));
            }
            dst = std::move(values);
        };
        load("hidden_weights", doc.params.hidden_weights);
        load("hidden_bias", doc.params.hidden_bias);
        load("output_weights", doc.params.output_weights);
        load("output_bias", doc.params.output_bias);
        load("value_weights", doc.params.value_weights);
        doc.params.value_bias = j.at("value_bias").get<double>();
        if (!doc.params.all_finite()) throw ConfigError("policy file: non-finite parameter");
        return doc;
    } catch (const ordered_json::exception& e) {
        throw ConfigError(std::string("policy file: ") + e.what());
    }
}

} // namespace gradeprobe
