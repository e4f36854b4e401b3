#include "gradeprobe/text.hpp"

#include <algorithm>

namespace gradeprobe {

namespace {

constexpr bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

constexpr bool is_edge_punct(char c) noexcept {
    return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
}

constexpr char ascii_lower(char c) noexcept {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

} // namespace

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) tokens.emplace_back(text.substr(start, i - start));
    }
    return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

std::string normalize_whitespace(std::string_view text) {
    auto tokens = split_whitespace(text);
    return join_tokens(tokens);
}

std::vector<std::string> rubric_tokens(std::string_view text) {
    std::vector<std::string> out;
    for (auto& tok : split_whitespace(text)) {
        std::size_t b = 0;
        std::size_t e = tok.size();
        while (b < e && is_edge_punct(tok[b])) ++b;
        while (e > b && is_edge_punct(tok[e - 1])) --e;
        if (b == e) continue;
        std::string t = tok.substr(b, e - b);
        std::transform(t.begin(), t.end(), t.begin(), ascii_lower);
        out.push_back(std::move(t));
    }
    return out;
}

std::size_t count_occurrences(std::span<const std::string> haystack, std::span<const std::string> needle) {
    if (needle.empty() || needle.size() > haystack.size()) return 0;
    std::size_t count = 0;
    std::size_t i = 0;
    while (i + needle.size() <= haystack.size()) {
        if (std::equal(needle.begin(), needle.end(), haystack.begin() + static_cast<std::ptrdiff_t>(i))) {
            ++count;
            i += needle.size();
        } else {
            ++i;
        }
    }
    return count;
}

} // namespace gradeprobe
