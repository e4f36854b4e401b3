#include <gtest/gtest.h>

#include "gradeprobe/text.hpp"

using namespace gradeprobe;

namespace {

std::vector<std::string> toks(std::initializer_list<const char*> xs) {
    return {xs.begin(), xs.end()};
}

} // namespace

TEST(Text, SplitDropsEmptyTokens) {
    EXPECT_EQ(split_whitespace("  a\tb \n c  "), toks({"a", "b", "c"}));
    EXPECT_TRUE(split_whitespace(" \t\n").empty());
}

TEST(Text, NormalizeCollapsesRuns) {
    EXPECT_EQ(normalize_whitespace("  water \t is\n\nmore   dense "), "water is more dense");
    EXPECT_EQ(normalize_whitespace(""), "");
}

TEST(Text, RubricTokensLowercaseAndStripEdges) {
    EXPECT_EQ(rubric_tokens("Water IS more, dense!"), toks({"water", "is", "more", "dense"}));
    EXPECT_EQ(rubric_tokens("?!  ...  dense."), toks({"dense"}));
    // interior punctuation is kept
    EXPECT_EQ(rubric_tokens("don't e.g."), toks({"don't", "e.g"}));
}

TEST(Text, CountOccurrencesIsNonOverlapping) {
    const auto hay = toks({"a", "a", "a", "b", "a", "a"});
    EXPECT_EQ(count_occurrences(hay, toks({"a", "a"})), 2u);
    EXPECT_EQ(count_occurrences(hay, toks({"a"})), 5u);
    EXPECT_EQ(count_occurrences(hay, toks({"b", "a"})), 1u);
    EXPECT_EQ(count_occurrences(hay, toks({})), 0u);
    EXPECT_EQ(count_occurrences(toks({}), toks({"a"})), 0u);
}
