#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gradeprobe/rating.hpp"

namespace gradeprobe {

inline constexpr std::size_t kMaxGradeTextChars = 10'000;

// Uniform grading interface. Implementations must be stateless with respect to
// results: grading a batch equals grading each text alone, in order.
class Grader {
public:
    virtual ~Grader() = default;

    [[nodiscard]] virtual std::vector<RatingDistribution> grade(std::span<const std::string> texts) = 0;

    // Stable identity string; two graders with equal identity grade identically.
    [[nodiscard]] virtual std::string identity() const = 0;
};

// Throws InputError for an empty batch or any text over kMaxGradeTextChars bytes.
void validate_grade_request(std::span<const std::string> texts);

// ─── Mock rubric grader ───────────────────────────────────────────────────────
//
// Deterministic stand-in grader with two deliberately seeded weaknesses: every
// repetition of a phrase earns credit again, and distractor n-grams such as
// "more dense" earn credit regardless of correctness.

struct WeightedNgram {
    std::string ngram;
    double weight = 0.0;

    bool operator==(const WeightedNgram&) const = default;
};

struct MockRubricConfig {
    std::vector<std::string> helpful_phrases;
    double helpful_weight = 0.8;
    std::vector<WeightedNgram> trap_ngrams;
    std::vector<std::string> relevance_unigrams;
    double relevance_weight = 0.15;
    double temperature = 0.5;

    // Helpful phrases = the ten experiment-1 phrases; traps {"more dense": 0.5,
    // "height of wave": 0.3}; ten relevance unigrams at 0.15; temperature 0.5.
    [[nodiscard]] static MockRubricConfig defaults();

    // Throws ConfigError on non-positive weights or temperature.
    void validate() const;

    bool operator==(const MockRubricConfig&) const = default;
};

// Raw rubric score s >= 0 over rubric_tokens(text).
[[nodiscard]] double mock_raw_score(std::string_view text, const MockRubricConfig& cfg);

// softmax_k( -(s - k)^2 / temperature ), k = 0..4.
[[nodiscard]] RatingDistribution mock_distribution(double raw_score, double temperature);

class MockGrader final : public Grader {
public:
    explicit MockGrader(MockRubricConfig cfg = MockRubricConfig::defaults());

    [[nodiscard]] std::vector<RatingDistribution> grade(std::span<const std::string> texts) override;
    [[nodiscard]] std::string identity() const override;

    [[nodiscard]] double raw_score(std::string_view text) const;
    [[nodiscard]] RatingDistribution grade_one(std::string_view text) const;
    [[nodiscard]] const MockRubricConfig& config() const noexcept { return cfg_; }

private:
    MockRubricConfig cfg_;
    std::vector<std::vector<std::string>> helpful_tokens_;
    std::vector<std::pair<std::vector<std::string>, double>> trap_tokens_;
};

// ─── Remote grader ────────────────────────────────────────────────────────────

struct Endpoint {
    std::string scheme;  // "http" or "https"
    std::string host;
    int port = 80;
    std::string base_path;  // no trailing slash; "" for root

    [[nodiscard]] std::string to_string() const;
};

// Throws ConfigError unless `url` looks like scheme://host[:port][/path].
[[nodiscard]] Endpoint parse_endpoint(std::string_view url);

// Client for POST {base}/v1/grade. A failed connection is retried once;
// malformed replies and non-200 statuses are not retried.
class RemoteGrader final : public Grader {
public:
    explicit RemoteGrader(std::string url, double timeout_seconds = 30.0);

    [[nodiscard]] std::vector<RatingDistribution> grade(std::span<const std::string> texts) override;
    [[nodiscard]] std::string identity() const override;

private:
    std::string url_;
    Endpoint endpoint_;
    double timeout_seconds_;
};

// ─── Cache ────────────────────────────────────────────────────────────────────

// Exact-match cache keyed on (binding identity, text bytes). Concurrent readers,
// serialized inserts. Errors are never cached.
class GradeCache {
public:
    [[nodiscard]] std::optional<RatingDistribution> find(std::string_view binding_id,
                                                         std::string_view text) const;
    void insert(std::string_view binding_id, std::string_view text, const RatingDistribution& dist);
    [[nodiscard]] std::size_t size() const;
    void clear();

private:
    [[nodiscard]] static std::string make_key(std::string_view binding_id, std::string_view text);

    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, RatingDistribution> entries_;
};

[[nodiscard]] RatingDistribution cache_lookup_or_grade(const std::string& text, Grader& backend,
                                                       GradeCache& cache);

// Decorator that consults a GradeCache and forwards only distinct misses.
class CachingGrader final : public Grader {
public:
    CachingGrader(std::shared_ptr<Grader> backend, std::shared_ptr<GradeCache> cache);

    [[nodiscard]] std::vector<RatingDistribution> grade(std::span<const std::string> texts) override;
    [[nodiscard]] std::string identity() const override { return backend_->identity(); }

    [[nodiscard]] const GradeCache& cache() const noexcept { return *cache_; }

private:
    std::shared_ptr<Grader> backend_;
    std::shared_ptr<GradeCache> cache_;
};

// ─── Binding ──────────────────────────────────────────────────────────────────

struct GraderBinding {
    enum class Kind { Mock, Remote };

    Kind kind = Kind::Mock;
    std::string endpoint;  // Remote only
    MockRubricConfig mock_config = MockRubricConfig::defaults();  // Mock only
    bool cache_enabled = true;

    [[nodiscard]] static GraderBinding mock(MockRubricConfig cfg = MockRubricConfig::defaults());
    [[nodiscard]] static GraderBinding remote(std::string url);

    void validate() const;
};

// Builds the backend for a binding and wraps it in a CachingGrader when enabled.
// A fresh cache is created when none is supplied.
[[nodiscard]] std::shared_ptr<Grader> make_grader(const GraderBinding& binding,
                                                  std::shared_ptr<GradeCache> cache = nullptr);

} // namespace gradeprobe
