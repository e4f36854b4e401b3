#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradeprobe/environment.hpp"
#include "gradeprobe/presets.hpp"

namespace gradeprobe {

// ⌈fraction·N⌉ highest-return episodes; ties broken by (run_id, episode_index)
// ascending. Throws InputError unless fraction lies in (0, 1].
[[nodiscard]] std::size_t top_count(std::size_t n, double fraction);
[[nodiscard]] std::vector<EpisodeRecord> top_percentile(std::span<const EpisodeRecord> episodes, double fraction);

struct RepeatStats {
    double repeat_sequence_fraction = 0.0;     // some phrase inserted >= 2 times (any location)
    double triple_consecutive_fraction = 0.0;  // same phrase inserted by 3 consecutive actions

    bool operator==(const RepeatStats&) const = default;
};

[[nodiscard]] RepeatStats repeat_stats(std::span<const EpisodeRecord> subset);

struct ActionFrequency {
    std::map<std::size_t, double> per_action;  // flat action index -> share of all actions
    double delete_sequence_fraction = 0.0;     // sequences with at least one delete
    double mean_actions = 0.0;
    std::size_t total_actions = 0;

    bool operator==(const ActionFrequency&) const = default;
};

// Action indices follow ActionSpace(phrase_count).
[[nodiscard]] ActionFrequency action_frequency(std::span<const EpisodeRecord> subset, std::size_t phrase_count);

// Share of insert actions using each phrase index.
[[nodiscard]] std::map<std::size_t, double> insert_phrase_frequency(std::span<const EpisodeRecord> subset);

struct InventorySplit {
    double helpful = 0.0;
    double unhelpful = 0.0;

    bool operator==(const InventorySplit&) const = default;
};

// Over insert actions only. nullopt when the preset has no helpful/unhelpful
// partition or the subset contains no inserts.
[[nodiscard]] std::optional<InventorySplit> inventory_split(std::span<const EpisodeRecord> subset,
                                                            const ExperimentPreset& preset);

// Inserted phrases in [brackets] at their position, deleted tokens in ~~tildes~~.
[[nodiscard]] std::string render_revision(const EpisodeRecord& episode, std::span<const std::string> phrases);

struct ExemplarSequence {
    int run_id = 0;
    long episode_index = 0;
    double episode_return = 0.0;
    std::size_t actions = 0;
    std::string rendered;

    bool operator==(const ExemplarSequence&) const = default;
};

struct AuditReport {
    int experiment_id = 0;
    std::size_t n_episodes_pooled = 0;
    std::size_t n_episodes_analyzed = 0;
    double top_fraction = 0.05;
    double mean_actions = 0.0;
    double delete_sequence_fraction = 0.0;
    double repeat_sequence_fraction = 0.0;
    double triple_consecutive_fraction = 0.0;
    std::map<std::size_t, double> per_action_frequency;
    std::map<std::size_t, double> insert_phrase_frequency;
    std::optional<InventorySplit> helpful_vs_unhelpful_split;
    std::vector<ExemplarSequence> exemplar_sequences;

    bool operator==(const AuditReport&) const = default;
};

// Pools `episodes` (all runs of one experiment), takes the top fraction and
// computes every statistic over that subset.
[[nodiscard]] AuditReport build_audit_report(std::span<const EpisodeRecord> episodes, double top_fraction,
                                             const ExperimentPreset& preset, std::size_t exemplar_count = 5);

struct LearningCurve {
    std::size_t window = 200;
    std::size_t episodes_per_run = 0;
    std::size_t runs = 0;
    bool degenerate_band = false;  // fewer than two runs; band collapsed onto the mean
    std::vector<double> mean;
    std::vector<double> lower;
    std::vector<double> upper;
};

// Per run: trailing rolling mean of `window` returns (shorter prefix windows at
// the start). Across runs at each index: mean m and m ± 1.96·sd/√R with the
// population standard deviation. Every run must hold at least episodes_per_run
// returns; extra episodes are ignored.
[[nodiscard]] LearningCurve learning_curve(const std::vector<std::vector<double>>& run_returns, std::size_t window,
                                           std::size_t episodes_per_run);

[[nodiscard]] std::string report_to_json(const AuditReport& report, std::span<const std::string> phrases = {});
[[nodiscard]] AuditReport report_from_json(std::string_view text);

// Header row: episode_index,mean,lower,upper
[[nodiscard]] std::string curve_to_csv(const LearningCurve& curve);

} // namespace gradeprobe
