#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gradeprobe {

// Split on ASCII whitespace; no empty tokens.
[[nodiscard]] std::vector<std::string> split_whitespace(std::string_view text);

[[nodiscard]] std::string join_tokens(std::span<const std::string> tokens);

// Collapse whitespace runs to one space and trim both ends.
[[nodiscard]] std::string normalize_whitespace(std::string_view text);

// Tokenization shared by the mock grader and the policy featurizer:
// ASCII-lowercase, whitespace split, strip . , ! ? ; : from both token
// edges, and drop tokens left empty by stripping.
[[nodiscard]] std::vector<std::string> rubric_tokens(std::string_view text);

// Left-to-right count of non-overlapping occurrences of `needle` in `haystack`.
// An empty needle never matches.
[[nodiscard]] std::size_t count_occurrences(std::span<const std::string> haystack,
                                            std::span<const std::string> needle);

} // namespace gradeprobe
