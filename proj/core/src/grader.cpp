#include "gradeprobe/grader.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>

#include "gradeprobe/errors.hpp"
#include "gradeprobe/presets.hpp"
#include "gradeprobe/text.hpp"

namespace gradeprobe {

void validate_grade_request(std::span<const std::string> texts) {
    if (texts.empty()) throw InputError("grade request contains no texts");
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (texts[i].size() > kMaxGradeTextChars) {
            throw InputError("text " + std::to_string(i) + " exceeds " + std::to_string(kMaxGradeTextChars) +
                             " characters");
        }
    }
}

// ─── Mock rubric ──────────────────────────────────────────────────────────────

MockRubricConfig MockRubricConfig::defaults() {
    MockRubricConfig cfg;
    const auto& helpful = experiment_preset(1).phrases;
    cfg.helpful_phrases.assign(helpful.begin(), helpful.end());
    cfg.trap_ngrams = {{"more dense", 0.5}, {"height of wave", 0.3}};
    cfg.relevance_unigrams = {"dense",      "density",    "frequency", "amplitude", "vibration",
                              "vibrations", "pitch",      "wave",      "waves",     "mass"};
    return cfg;
}

void MockRubricConfig::validate() const {
    if (!(helpful_weight > 0.0)) throw ConfigError("grader.mock.helpful_weight: must be > 0");
    if (!(relevance_weight > 0.0)) throw ConfigError("grader.mock.relevance_weight: must be > 0");
    if (!(temperature > 0.0)) throw ConfigError("grader.mock.temperature: must be > 0");
    for (const auto& trap : trap_ngrams) {
        if (!(trap.weight > 0.0)) throw ConfigError("grader.mock.trap_ngrams[" + trap.ngram + "]: weight must be > 0");
    }
}

namespace {

double score_tokens(std::span<const std::string> tokens, const MockRubricConfig& cfg,
                    std::span<const std::vector<std::string>> helpful,
                    std::span<const std::pair<std::vector<std::string>, double>> traps) {
    double s = 0.0;
    for (const auto& phrase : helpful) {
        s += cfg.helpful_weight * static_cast<double>(count_occurrences(tokens, phrase));
    }
    for (const auto& [ngram, weight] : traps) {
        s += weight * static_cast<double>(count_occurrences(tokens, ngram));
    }
    for (const auto& word : cfg.relevance_unigrams) {
        s += cfg.relevance_weight * static_cast<double>(std::count(tokens.begin(), tokens.end(), word));
    }
    return s;
}

std::string shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace

double mock_raw_score(std::string_view text, const MockRubricConfig& cfg) {
    return MockGrader(cfg).raw_score(text);
}

RatingDistribution mock_distribution(double raw_score, double temperature) {
    std::array<double, kRatingClasses> logits{};
    double max_logit = -INFINITY;
    for (std::size_t k = 0; k < kRatingClasses; ++k) {
        const double d = raw_score - static_cast<double>(k);
        logits[k] = -(d * d) / temperature;
        max_logit = std::max(max_logit, logits[k]);
    }
    RatingDistribution::Probabilities p{};
    double z = 0.0;
    for (std::size_t k = 0; k < kRatingClasses; ++k) {
        p[k] = std::exp(logits[k] - max_logit);
        z += p[k];
    }
    for (double& v : p) v /= z;
    return RatingDistribution::from_probs(p);
}

MockGrader::MockGrader(MockRubricConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    for (const auto& phrase : cfg_.helpful_phrases) helpful_tokens_.push_back(rubric_tokens(phrase));
    for (const auto& trap : cfg_.trap_ngrams) trap_tokens_.emplace_back(rubric_tokens(trap.ngram), trap.weight);
}

double MockGrader::raw_score(std::string_view text) const {
    const auto tokens = rubric_tokens(text);
    return score_tokens(tokens, cfg_, helpful_tokens_, trap_tokens_);
}

RatingDistribution MockGrader::grade_one(std::string_view text) const {
    return mock_distribution(raw_score(text), cfg_.temperature);
}

std::vector<RatingDistribution> MockGrader::grade(std::span<const std::string> texts) {
    validate_grade_request(texts);
    std::vector<RatingDistribution> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(grade_one(t));
    return out;
}

std::string MockGrader::identity() const {
    std::string id = "mock-rubric;h=" + shortest(cfg_.helpful_weight);
    for (const auto& p : cfg_.helpful_phrases) id += "|" + p;
    id += ";t";
    for (const auto& t : cfg_.trap_ngrams) id += "|" + t.ngram + "=" + shortest(t.weight);
    id += ";r=" + shortest(cfg_.relevance_weight);
    for (const auto& u : cfg_.relevance_unigrams) id += "|" + u;
    id += ";T=" + shortest(cfg_.temperature);
    return id;
}

// ─── Cache ────────────────────────────────────────────────────────────────────

std::string GradeCache::make_key(std::string_view binding_id, std::string_view text) {
    std::string key;
    key.reserve(binding_id.size() + text.size() + 1);
    key.append(binding_id);
    key.push_back('\0');
    key.append(text);
    return key;
}

std::optional<RatingDistribution> GradeCache::find(std::string_view binding_id, std::string_view text) const {
    const auto key = make_key(binding_id, text);
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void GradeCache::insert(std::string_view binding_id, std::string_view text, const RatingDistribution& dist) {
    auto key = make_key(binding_id, text);
    std::unique_lock lock(mutex_);
    entries_.emplace(std::move(key), dist);
}

std::size_t GradeCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void GradeCache::clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
}

RatingDistribution cache_lookup_or_grade(const std::string& text, Grader& backend, GradeCache& cache) {
    const std::string id = backend.identity();
    if (auto hit = cache.find(id, text)) return *hit;
    const std::string batch[1] = {text};
    auto dist = backend.grade(batch).at(0);
    cache.insert(id, text, dist);
    return dist;
}

CachingGrader::CachingGrader(std::shared_ptr<Grader> backend, std::shared_ptr<GradeCache> cache)
    : backend_(std::move(backend)), cache_(std::move(cache)) {
    if (!backend_) throw ConfigError("CachingGrader: null backend");
    if (!cache_) cache_ = std::make_shared<GradeCache>();
}

std::vector<RatingDistribution> CachingGrader::grade(std::span<const std::string> texts) {
    validate_grade_request(texts);
    const std::string id = backend_->identity();

    std::vector<std::optional<RatingDistribution>> results(texts.size());
    std::vector<std::string> misses;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        results[i] = cache_->find(id, texts[i]);
        if (!results[i] && std::find(misses.begin(), misses.end(), texts[i]) == misses.end()) {
            misses.push_back(texts[i]);
        }
    }
    if (!misses.empty()) {
        auto graded = backend_->grade(misses);
        if (graded.size() != misses.size()) {
            throw TransportError(id, "backend returned " + std::to_string(graded.size()) + " distributions for " +
                                         std::to_string(misses.size()) + " texts");
        }
        for (std::size_t m = 0; m < misses.size(); ++m) cache_->insert(id, misses[m], graded[m]);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (results[i]) continue;
            auto pos = std::find(misses.begin(), misses.end(), texts[i]) - misses.begin();
            results[i] = graded[static_cast<std::size_t>(pos)];
        }
    }

    std::vector<RatingDistribution> out;
    out.reserve(texts.size());
    for (auto& r : results) out.push_back(*r);
    return out;
}

// ─── Binding ──────────────────────────────────────────────────────────────────

GraderBinding GraderBinding::mock(MockRubricConfig cfg) {
    GraderBinding b;
    b.kind = Kind::Mock;
    b.mock_config = std::move(cfg);
    return b;
}

GraderBinding GraderBinding::remote(std::string url) {
    GraderBinding b;
    b.kind = Kind::Remote;
    b.endpoint = std::move(url);
    return b;
}

void GraderBinding::validate() const {
    if (kind == Kind::Remote) {
        (void)parse_endpoint(endpoint);
    } else {
        mock_config.validate();
    }
}

std::shared_ptr<Grader> make_grader(const GraderBinding& binding, std::shared_ptr<GradeCache> cache) {
    binding.validate();
    std::shared_ptr<Grader> backend;
    if (binding.kind == GraderBinding::Kind::Mock) {
        backend = std::make_shared<MockGrader>(binding.mock_config);
    } else {
        backend = std::make_shared<RemoteGrader>(binding.endpoint);
    }
    if (!binding.cache_enabled) return backend;
    return std::make_shared<CachingGrader>(std::move(backend), std::move(cache));
}

} // namespace gradeprobe
