#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace gradeprobe {

enum class PhraseGroup { Helpful, Unhelpful };

// Phrase inventory for one experiment. Preset 1 = helpful rubric phrases,
// preset 2 = unhelpful distractor phrases, preset 3 = both (helpful first).
struct ExperimentPreset {
    int id = 0;
    std::vector<std::string> phrases;
    // Per-phrase partition label; empty unless the preset mixes both groups.
    std::vector<PhraseGroup> groups;

    [[nodiscard]] bool has_partition() const noexcept { return !groups.empty(); }
    [[nodiscard]] std::size_t action_count() const noexcept { return 2 * phrases.size() + 5; }
};

// Throws ConfigError for ids other than 1, 2, 3.
[[nodiscard]] const ExperimentPreset& experiment_preset(int id);

[[nodiscard]] bool is_known_preset(int id) noexcept;

} // namespace gradeprobe
