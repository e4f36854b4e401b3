#include "gradeprobe/presets.hpp"

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

namespace {

const std::vector<std::string>& helpful_phrases() {
    static const std::vector<std::string> phrases = {
        "sound moves faster in air",   "sound moves slower in water", "water is more dense",
        "water has more mass",         "higher frequency in air",     "pitch is lower in water",
        "pitch higher in empty glass", "air is less dense",           "less vibration in water",
        "the pitch is different",
    };
    return phrases;
}

const std::vector<std::string>& unhelpful_phrases() {
    static const std::vector<std::string> phrases = {
        "I am not sure",           "tapping the glass",           "sound bounces in the glass",
        "sound sinks in water",    "sound will echo in glass",    "the pitch is the same",
        "water blocks the sound",  "frequency is height of wave", "amplitude is number of waves",
        "sound is more dense",
    };
    return phrases;
}

ExperimentPreset make_preset(int id) {
    ExperimentPreset p;
    p.id = id;
    if (id == 1) {
        p.phrases = helpful_phrases();
    } else if (id == 2) {
        p.phrases = unhelpful_phrases();
    } else {
        p.phrases = helpful_phrases();
        p.phrases.insert(p.phrases.end(), unhelpful_phrases().begin(), unhelpful_phrases().end());
        p.groups.assign(helpful_phrases().size(), PhraseGroup::Helpful);
        p.groups.insert(p.groups.end(), unhelpful_phrases().size(), PhraseGroup::Unhelpful);
    }
    return p;
}

} // namespace

bool is_known_preset(int id) noexcept {
    return id >= 1 && id <= 3;
}

const ExperimentPreset& experiment_preset(int id) {
    static const ExperimentPreset presets[3] = {make_preset(1), make_preset(2), make_preset(3)};
    if (!is_known_preset(id)) {
        throw ConfigError("experiment: unknown preset id " + std::to_string(id) + " (expected 1, 2 or 3)");
    }
    return presets[id - 1];
}

} // namespace gradeprobe
