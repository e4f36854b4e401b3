#include "gradeprobe/action.hpp"

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

RevisionAction ActionSpace::decode(std::size_t index) const {
    if (index < phrase_count_) return InsertPhrase{index, InsertLocation::Front};
    if (index < 2 * phrase_count_) return InsertPhrase{index - phrase_count_, InsertLocation::End};
    if (index < size()) return DeleteSegment{index - 2 * phrase_count_};
    throw InvalidActionError("action index " + std::to_string(index) + " outside action space of size " +
                             std::to_string(size()));
}

std::size_t ActionSpace::encode(const RevisionAction& action) const {
    if (const auto* ins = std::get_if<InsertPhrase>(&action)) {
        if (ins->phrase_index >= phrase_count_) {
            throw InvalidActionError("phrase index " + std::to_string(ins->phrase_index) +
                                     " outside inventory of size " + std::to_string(phrase_count_));
        }
        return ins->location == InsertLocation::Front ? ins->phrase_index : phrase_count_ + ins->phrase_index;
    }
    const auto& del = std::get<DeleteSegment>(action);
    if (del.segment_index >= kSegmentCount) {
        throw InvalidActionError("segment index " + std::to_string(del.segment_index) + " outside 0..4");
    }
    return 2 * phrase_count_ + del.segment_index;
}

std::string describe_action(const RevisionAction& action, std::span<const std::string> phrases) {
    if (const auto* ins = std::get_if<InsertPhrase>(&action)) {
        std::string where = ins->location == InsertLocation::Front ? "insert-front" : "insert-end";
        if (ins->phrase_index < phrases.size()) return where + " \"" + phrases[ins->phrase_index] + "\"";
        return where + " #" + std::to_string(ins->phrase_index);
    }
    return "delete-" + std::to_string(std::get<DeleteSegment>(action).segment_index);
}

} // namespace gradeprobe
