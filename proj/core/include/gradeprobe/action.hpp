#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>

namespace gradeprobe {

inline constexpr std::size_t kSegmentCount = 5;

enum class InsertLocation { Front, End };

struct InsertPhrase {
    std::size_t phrase_index = 0;
    InsertLocation location = InsertLocation::Front;

    bool operator==(const InsertPhrase&) const = default;
};

struct DeleteSegment {
    std::size_t segment_index = 0;

    bool operator==(const DeleteSegment&) const = default;
};

using RevisionAction = std::variant<InsertPhrase, DeleteSegment>;

[[nodiscard]] inline bool is_insert(const RevisionAction& a) noexcept {
    return std::holds_alternative<InsertPhrase>(a);
}
[[nodiscard]] inline bool is_delete(const RevisionAction& a) noexcept {
    return std::holds_alternative<DeleteSegment>(a);
}

// Flat indexing of the discrete action set for a phrase inventory of size P:
//   [0, P)        insert phrase i at the front
//   [P, 2P)       insert phrase i-P at the end
//   [2P, 2P + 5)  delete segment i-2P
class ActionSpace {
public:
    explicit ActionSpace(std::size_t phrase_count) : phrase_count_(phrase_count) {}

    [[nodiscard]] std::size_t phrase_count() const noexcept { return phrase_count_; }
    [[nodiscard]] std::size_t size() const noexcept { return 2 * phrase_count_ + kSegmentCount; }

    // Both throw InvalidActionError when out of range.
    [[nodiscard]] RevisionAction decode(std::size_t index) const;
    [[nodiscard]] std::size_t encode(const RevisionAction& action) const;

private:
    std::size_t phrase_count_;
};

// Human-readable label, e.g. `insert-end "water is more dense"` or `delete-2`.
[[nodiscard]] std::string describe_action(const RevisionAction& action,
                                          std::span<const std::string> phrases);

} // namespace gradeprobe
