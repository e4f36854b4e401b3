#include "gradeprobe/environment.hpp"

#include <cmath>

#include "gradeprobe/errors.hpp"
#include "gradeprobe/text.hpp"

namespace gradeprobe {

std::vector<std::string> ResponseState::tokens() const {
    return split_whitespace(text_);
}

SegmentBounds segment_bounds(std::size_t token_count) noexcept {
    SegmentBounds bounds{};
    for (std::size_t i = 0; i < kSegmentCount; ++i) {
        bounds[i].begin = i * token_count / kSegmentCount;
        bounds[i].end = (i + 1) * token_count / kSegmentCount;
    }
    return bounds;
}

SegmentBounds segment_bounds(const ResponseState& state) {
    return segment_bounds(state.tokens().size());
}

ResponseState apply_action(const ResponseState& state, const RevisionAction& action,
                           std::span<const std::string> phrases) {
    std::string text;
    if (const auto* ins = std::get_if<InsertPhrase>(&action)) {
        if (ins->phrase_index >= phrases.size()) {
            throw InvalidActionError("phrase index " + std::to_string(ins->phrase_index) +
                                     " outside inventory of size " + std::to_string(phrases.size()));
        }
        const std::string& phrase = phrases[ins->phrase_index];
        if (state.text().empty()) {
            text = phrase;
        } else if (ins->location == InsertLocation::Front) {
            text = phrase + " " + state.text();
        } else {
            text = state.text() + " " + phrase;
        }
    } else {
        const auto& del = std::get<DeleteSegment>(action);
        if (del.segment_index >= kSegmentCount) {
            throw InvalidActionError("segment index " + std::to_string(del.segment_index) + " outside 0..4");
        }
        auto tokens = state.tokens();
        const TokenRange cut = segment_bounds(tokens.size())[del.segment_index];
        tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(cut.begin),
                     tokens.begin() + static_cast<std::ptrdiff_t>(cut.end));
        text = join_tokens(tokens);
    }
    return ResponseState(std::move(text), state.steps_taken() + 1);
}

void EpisodeLimits::validate() const {
    if (max_steps < 1) throw ConfigError("env.max_steps: must be >= 1");
    if (!(rating_threshold >= 0.0 && rating_threshold <= 4.0)) {
        throw ConfigError("env.rating_threshold: must lie in [0, 4]");
    }
}

void RewardSpec::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("env.reward_scale: must be > 0");
    if (!(step_penalty >= 0.0) || !std::isfinite(step_penalty)) {
        throw ConfigError("env.step_penalty: must be >= 0");
    }
}

double step_reward(const RatingDistribution& old_dist, const RatingDistribution& new_dist,
                   const RewardSpec& spec) noexcept {
    return spec.scale * (expected_rating(new_dist) - expected_rating(old_dist)) - spec.step_penalty;
}

std::string EpisodeRecord::final_text(std::span<const std::string> phrases) const {
    if (transitions.empty()) return initial_text;
    const auto& last = transitions.back();
    return apply_action(ResponseState(last.state_text), last.action, phrases).text();
}

EpisodeRecord run_episode(std::string_view seed_response, const ActionPolicy& policy, Grader& grader,
                          const EpisodeContext& ctx, Rng& rng, ActionSelection selection) {
    ctx.limits.validate();
    const ActionSpace space(ctx.phrases.size());
    if (policy.action_count() != space.size()) {
        throw ConfigError("policy emits " + std::to_string(policy.action_count()) +
                          " actions but the inventory needs " + std::to_string(space.size()));
    }

    EpisodeRecord record;
    record.initial_text = normalize_whitespace(seed_response);
    if (record.initial_text.empty()) throw InputError("seed response is empty after whitespace normalization");

    std::string batch[1] = {record.initial_text};
    record.initial_rating = grader.grade(batch).at(0);

    ResponseState state(record.initial_text);
    RatingDistribution previous = record.initial_rating;
    record.termination = Termination::MaxSteps;

    while (state.steps_taken() < ctx.limits.max_steps) {
        const auto probs = policy.action_probabilities(state);
        const std::size_t index =
            selection == ActionSelection::Greedy ? argmax_action(probs) : sample_action(probs, rng);
        const RevisionAction action = space.decode(index);

        ResponseState next = apply_action(state, action, ctx.phrases);
        batch[0] = next.text();
        const RatingDistribution rating = grader.grade(batch).at(0);
        const double reward = step_reward(previous, rating, ctx.reward);

        record.transitions.push_back(Transition{state.text(), action, rating, reward});
        record.episode_return += reward;
        previous = rating;
        state = std::move(next);

        if (expected_rating(rating) >= ctx.limits.rating_threshold) {
            record.termination = Termination::ThresholdReached;
            break;
        }
    }
    return record;
}

} // namespace gradeprobe
