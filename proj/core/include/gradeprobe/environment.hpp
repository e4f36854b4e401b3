#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gradeprobe/action.hpp"
#include "gradeprobe/grader.hpp"
#include "gradeprobe/random.hpp"
#include "gradeprobe/rating.hpp"

namespace gradeprobe {

// The response being revised. Tokens are always derived from the text.
class ResponseState {
public:
    ResponseState() = default;
    explicit ResponseState(std::string text, int steps_taken = 0)
        : text_(std::move(text)), steps_taken_(steps_taken) {}

    [[nodiscard]] const std::string& text() const noexcept { return text_; }
    [[nodiscard]] int steps_taken() const noexcept { return steps_taken_; }
    [[nodiscard]] std::vector<std::string> tokens() const;

    bool operator==(const ResponseState&) const = default;

private:
    std::string text_;
    int steps_taken_ = 0;
};

// Half-open token index range.
struct TokenRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
    [[nodiscard]] bool empty() const noexcept { return begin == end; }
    bool operator==(const TokenRange&) const = default;
};

using SegmentBounds = std::array<TokenRange, kSegmentCount>;

// Segment i = [floor(i*n/5), floor((i+1)*n/5)).
[[nodiscard]] SegmentBounds segment_bounds(std::size_t token_count) noexcept;
[[nodiscard]] SegmentBounds segment_bounds(const ResponseState& state);

// Pure. Throws InvalidActionError for an out-of-range phrase or segment index.
[[nodiscard]] ResponseState apply_action(const ResponseState& state, const RevisionAction& action,
                                         std::span<const std::string> phrases);

struct EpisodeLimits {
    int max_steps = 8;
    double rating_threshold = 3.5;  // on the 0..4 expected-rating scale

    void validate() const;
};

struct RewardSpec {
    double scale = 3.0;
    double step_penalty = 1.0;

    void validate() const;
};

// scale * (E[new] - E[old]) - step_penalty
[[nodiscard]] double step_reward(const RatingDistribution& old_dist, const RatingDistribution& new_dist,
                                 const RewardSpec& spec) noexcept;

enum class Termination { ThresholdReached, MaxSteps };

struct Transition {
    std::string state_text;  // text the action was applied to
    RevisionAction action;
    RatingDistribution rating = RatingDistribution::uniform();  // grade of the revised text
    double reward = 0.0;

    bool operator==(const Transition&) const = default;
};

struct EpisodeRecord {
    int experiment_id = 0;
    int run_id = 0;
    long episode_index = 0;
    std::string initial_text;
    RatingDistribution initial_rating = RatingDistribution::uniform();
    std::vector<Transition> transitions;
    double episode_return = 0.0;
    Termination termination = Termination::MaxSteps;

    [[nodiscard]] std::string final_text(std::span<const std::string> phrases) const;

    bool operator==(const EpisodeRecord&) const = default;
};

// Anything that maps a state to a distribution over the flat action indices.
class ActionPolicy {
public:
    virtual ~ActionPolicy() = default;

    [[nodiscard]] virtual std::size_t action_count() const = 0;
    [[nodiscard]] virtual std::vector<double> action_probabilities(const ResponseState& state) const = 0;
};

enum class ActionSelection { Sample, Greedy };

struct EpisodeContext {
    std::span<const std::string> phrases;
    EpisodeLimits limits;
    RewardSpec reward;
};

// Grades the seed once, then repeats choose -> apply -> grade -> reward until the
// expected rating reaches the threshold or max_steps revisions were made.
// The seed is whitespace-normalized first; an empty seed raises InputError.
// Grader failures propagate (TransportError) and no record is produced.
[[nodiscard]] EpisodeRecord run_episode(std::string_view seed_response, const ActionPolicy& policy,
                                        Grader& grader, const EpisodeContext& ctx, Rng& rng,
                                        ActionSelection selection = ActionSelection::Sample);

} // namespace gradeprobe
