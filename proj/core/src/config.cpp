#include "gradeprobe/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gradeprobe/errors.hpp"
#include "gradeprobe/presets.hpp"
#include "gradeprobe/text.hpp"

#ifndef GRADEPROBE_VERSION
#define GRADEPROBE_VERSION "0.0.0"
#endif
#ifndef GRADEPROBE_DEFAULT_DATA_DIR
#define GRADEPROBE_DEFAULT_DATA_DIR "data"
#endif
#ifndef GRADEPROBE_INSTALLED_DATA_DIR
#define GRADEPROBE_INSTALLED_DATA_DIR "/usr/local/share/gradeprobe"
#endif

namespace gradeprobe {

using nlohmann::ordered_json;

std::string library_version() {
    return GRADEPROBE_VERSION;
}

TrainEnvironment ExperimentConfig::train_environment(std::vector<std::string> seed_responses) const {
    TrainEnvironment env;
    env.limits = limits;
    env.reward = reward;
    env.ppo = ppo;
    env.featurizer = FeaturizerConfig::defaults();
    env.featurizer.include_step_feature = include_step_feature;
    env.featurizer.max_steps = limits.max_steps;
    env.seed_responses = std::move(seed_responses);
    return env;
}

namespace {

// Reads typed fields out of one JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const ordered_json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(display() + ": must be an object");
    }

    template <typename T>
    void read(const char* key, T& dst) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        const std::string field = join(key);
        if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) throw ConfigError(field + ": expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!it->is_number_integer()) throw ConfigError(field + ": expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (it->is_number_integer() && !it->is_number_unsigned() && it->get<long long>() < 0) {
                    throw ConfigError(field + ": must be non-negative");
                }
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) throw ConfigError(field + ": expected a number");
        } else {
            if (!it->is_string()) throw ConfigError(field + ": expected a string");
        }
        dst = it->get<T>();
    }

    [[nodiscard]] const ordered_json* child(const char* key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void reject_unknown() const {
        for (const auto& [key, _] : obj_.items()) {
            if (!seen_.count(key)) throw ConfigError(join(key.c_str()) + ": unknown field");
        }
    }

    [[nodiscard]] std::string join(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    [[nodiscard]] std::string display() const { return path_.empty() ? "config" : path_; }

    const ordered_json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename Fn>
void with_section(Section& parent, const char* key, Fn&& fn) {
    if (const auto* node = parent.child(key)) {
        Section s(*node, parent.join(key));
        fn(s);
        s.reject_unknown();
    }
}

} // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text) {
    ordered_json doc = ordered_json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config: not valid JSON");

    ExperimentConfig cfg;
    Section root(doc, "");
    int schema_version = kConfigSchemaVersion;
    root.read("schema_version", schema_version);
    if (schema_version != kConfigSchemaVersion) {
        throw ConfigError("schema_version: unsupported version " + std::to_string(schema_version));
    }
    if (!doc.contains("experiment")) throw ConfigError("experiment: required field missing");
    root.read("experiment", cfg.experiment_id);
    if (!is_known_preset(cfg.experiment_id)) {
        throw ConfigError("experiment: must be 1, 2 or 3 (got " + std::to_string(cfg.experiment_id) + ")");
    }
    root.read("responses", cfg.responses_path);

    with_section(root, "env", [&](Section& s) {
        s.read("max_steps", cfg.limits.max_steps);
        s.read("rating_threshold", cfg.limits.rating_threshold);
        s.read("reward_scale", cfg.reward.scale);
        s.read("step_penalty", cfg.reward.step_penalty);
        s.read("include_step_feature", cfg.include_step_feature);
    });

    with_section(root, "grader", [&](Section& s) {
        std::string kind = "mock";
        s.read("kind", kind);
        if (kind == "mock") {
            cfg.grader.kind = GraderBinding::Kind::Mock;
        } else if (kind == "remote") {
            cfg.grader.kind = GraderBinding::Kind::Remote;
        } else {
            throw ConfigError("grader.kind: must be \"mock\" or \"remote\"");
        }
        s.read("endpoint", cfg.grader.endpoint);
        s.read("cache", cfg.grader.cache_enabled);
        with_section(s, "mock", [&](Section& m) {
            m.read("helpful_weight", cfg.grader.mock_config.helpful_weight);
            m.read("relevance_weight", cfg.grader.mock_config.relevance_weight);
            m.read("temperature", cfg.grader.mock_config.temperature);
        });
        if (cfg.grader.kind == GraderBinding::Kind::Remote && cfg.grader.endpoint.empty()) {
            throw ConfigError("grader.endpoint: required when grader.kind is \"remote\"");
        }
    });

    with_section(root, "ppo", [&](Section& s) {
        s.read("clip_epsilon", cfg.ppo.clip_epsilon);
        s.read("epochs_per_batch", cfg.ppo.epochs_per_batch);
        s.read("episodes_per_batch", cfg.ppo.episodes_per_batch);
        s.read("learning_rate", cfg.ppo.learning_rate);
        s.read("entropy_coef", cfg.ppo.entropy_coef);
        s.read("value_coef", cfg.ppo.value_coef);
        s.read("grad_norm_clip", cfg.ppo.grad_norm_clip);
        s.read("gamma", cfg.ppo.gamma);
        s.read("advantage_normalization", cfg.ppo.advantage_normalization);
    });

    with_section(root, "run", [&](Section& s) {
        s.read("total_timesteps", cfg.run.total_timesteps);
        s.read("num_runs", cfg.run.num_runs);
        s.read("seed", cfg.run.rng_seed);
        s.read("max_episodes", cfg.run.max_episodes);
    });

    with_section(root, "analysis", [&](Section& s) {
        s.read("top_fraction", cfg.analysis.top_fraction);
        s.read("window", cfg.analysis.window);
        s.read("episodes_per_run", cfg.analysis.episodes_per_run);
    });
    root.reject_unknown();

    cfg.run.experiment_id = cfg.experiment_id;
    cfg.limits.validate();
    cfg.reward.validate();
    cfg.grader.validate();
    cfg.ppo.validate();
    cfg.run.validate();
    if (!(cfg.analysis.top_fraction > 0.0 && cfg.analysis.top_fraction <= 1.0)) {
        throw ConfigError("analysis.top_fraction: must lie in (0, 1]");
    }
    if (cfg.analysis.window < 1) throw ConfigError("analysis.window: must be >= 1");
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["experiment"] = cfg.experiment_id;
    if (!cfg.responses_path.empty()) j["responses"] = cfg.responses_path;
    j["env"] = {{"max_steps", cfg.limits.max_steps},
                {"rating_threshold", cfg.limits.rating_threshold},
                {"reward_scale", cfg.reward.scale},
                {"step_penalty", cfg.reward.step_penalty},
                {"include_step_feature", cfg.include_step_feature}};
    ordered_json grader;
    grader["kind"] = cfg.grader.kind == GraderBinding::Kind::Mock ? "mock" : "remote";
    if (cfg.grader.kind == GraderBinding::Kind::Remote) grader["endpoint"] = cfg.grader.endpoint;
    grader["cache"] = cfg.grader.cache_enabled;
    grader["mock"] = {{"helpful_weight", cfg.grader.mock_config.helpful_weight},
                      {"relevance_weight", cfg.grader.mock_config.relevance_weight},
                      {"temperature", cfg.grader.mock_config.temperature}};
    j["grader"] = std::move(grader);
    j["ppo"] = {{"clip_epsilon", cfg.ppo.clip_epsilon},
                {"epochs_per_batch", cfg.ppo.epochs_per_batch},
                {"episodes_per_batch", cfg.ppo.episodes_per_batch},
                {"learning_rate", cfg.ppo.learning_rate},
                {"entropy_coef", cfg.ppo.entropy_coef},
                {"value_coef", cfg.ppo.value_coef},
                {"grad_norm_clip", cfg.ppo.grad_norm_clip},
                {"gamma", cfg.ppo.gamma},
                {"advantage_normalization", cfg.ppo.advantage_normalization}};
    j["run"] = {{"total_timesteps", cfg.run.total_timesteps},
                {"num_runs", cfg.run.num_runs},
                {"seed", cfg.run.rng_seed},
                {"max_episodes", cfg.run.max_episodes}};
    j["analysis"] = {{"top_fraction", cfg.analysis.top_fraction},
                     {"window", cfg.analysis.window},
                     {"episodes_per_run", cfg.analysis.episodes_per_run}};
    return j.dump(2) + "\n";
}

std::vector<std::string> load_seed_responses(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("responses: cannot open " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto norm = normalize_whitespace(line);
        if (!norm.empty()) out.push_back(std::move(norm));
    }
    if (out.empty()) throw ConfigError("responses: " + path.string() + " contains no responses");
    return out;
}

std::filesystem::path default_seed_responses_path() {
    if (const char* dir = std::getenv("GRADEPROBE_DATA_DIR"); dir && *dir) {
        return std::filesystem::path(dir) / "seed_responses.txt";
    }
    const auto source_tree = std::filesystem::path(GRADEPROBE_DEFAULT_DATA_DIR) / "seed_responses.txt";
    if (std::filesystem::exists(source_tree)) return source_tree;
    return std::filesystem::path(GRADEPROBE_INSTALLED_DATA_DIR) / "seed_responses.txt";
}

} // namespace gradeprobe
