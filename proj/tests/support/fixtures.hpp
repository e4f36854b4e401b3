#pragma once

// Shared test doubles and independent oracles. Nothing here calls into the
// code under test except to build inputs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "gradeprobe/analytics.hpp"
#include "gradeprobe/environment.hpp"
#include "gradeprobe/errors.hpp"
#include "gradeprobe/grader.hpp"
#include "gradeprobe/presets.hpp"

namespace gradeprobe::testing {

// Distribution with the given expected rating, spread over two adjacent classes.
inline RatingDistribution dist_with_mean(double mean) {
    RatingDistribution::Probabilities p{};
    const auto lo = static_cast<std::size_t>(std::min(3.0, std::floor(mean)));
    const double frac = mean - static_cast<double>(lo);
    p[lo] = 1.0 - frac;
    p[lo + 1] += frac;
    return RatingDistribution::from_probs(p);
}

class ConstantGrader final : public Grader {
public:
    explicit ConstantGrader(RatingDistribution d) : d_(d) {}
    std::vector<RatingDistribution> grade(std::span<const std::string> texts) override {
        calls += 1;
        return std::vector<RatingDistribution>(texts.size(), d_);
    }
    std::string identity() const override { return "constant"; }
    std::atomic<int> calls{0};

private:
    RatingDistribution d_;
};

// Rates the first text it grades (the episode baseline) at `low` and every
// later text at `high`, whatever the revision did.
class JumpGrader final : public Grader {
public:
    JumpGrader(double low, double high) : low_(dist_with_mean(low)), high_(dist_with_mean(high)) {}
    std::vector<RatingDistribution> grade(std::span<const std::string> texts) override {
        std::vector<RatingDistribution> out;
        for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(seen_++ == 0 ? low_ : high_);
        return out;
    }
    std::string identity() const override { return "jump"; }

private:
    long seen_ = 0;
    RatingDistribution low_;
    RatingDistribution high_;
};

// Counts backend invocations and texts seen; delegates to the mock rubric.
class CountingGrader final : public Grader {
public:
    std::vector<RatingDistribution> grade(std::span<const std::string> texts) override {
        calls += 1;
        texts_seen += static_cast<int>(texts.size());
        return inner_.grade(texts);
    }
    std::string identity() const override { return "counting"; }
    int calls = 0;
    int texts_seen = 0;

private:
    MockGrader inner_;
};

class FailingGrader final : public Grader {
public:
    std::vector<RatingDistribution> grade(std::span<const std::string>) override {
        throw TransportError("test://down", "connection refused");
    }
    std::string identity() const override { return "failing"; }
};

// Picks script[steps_taken] with probability one.
class ScriptedPolicy final : public ActionPolicy {
public:
    ScriptedPolicy(std::size_t action_count, std::vector<std::size_t> script)
        : n_(action_count), script_(std::move(script)) {}
    std::size_t action_count() const override { return n_; }
    std::vector<double> action_probabilities(const ResponseState& s) const override {
        std::vector<double> p(n_, 0.0);
        p[script_.at(static_cast<std::size_t>(s.steps_taken()) % script_.size())] = 1.0;
        return p;
    }

private:
    std::size_t n_;
    std::vector<std::size_t> script_;
};

class UniformPolicy final : public ActionPolicy {
public:
    explicit UniformPolicy(std::size_t n) : n_(n) {}
    std::size_t action_count() const override { return n_; }
    std::vector<double> action_probabilities(const ResponseState&) const override {
        return std::vector<double>(n_, 1.0 / static_cast<double>(n_));
    }

private:
    std::size_t n_;
};

// ─── Handcrafted log ──────────────────────────────────────────────────────────

// Flat preset-3 action index (P = 20) written out by hand, not via ActionSpace.
inline RevisionAction hand_action(char kind, std::size_t index) {
    if (kind == 'F') return InsertPhrase{index, InsertLocation::Front};
    if (kind == 'E') return InsertPhrase{index, InsertLocation::End};
    return DeleteSegment{index};
}

struct HandStep {
    char kind;  // F, E or D
    std::size_t index;
};

struct HandEpisode {
    int run;
    long index;
    double ret;
    const char* seed;
    std::vector<HandStep> steps;
};

inline std::vector<HandEpisode> hand_episodes() {
    return {
        {0, 0, 2.5, "i dont know", {{'F', 0}}},
        {0, 1, 7.0, "the empty glass is louder", {{'F', 3}, {'E', 3}}},
        {0, 2, -3.0, "sound goes faster in water", {{'D', 2}, {'E', 12}}},
        {0, 3, 7.0, "the full glass rings lower", {{'F', 1}, {'D', 2}, {'F', 1}}},
        {0, 4, 4.25, "i dont know", {{'F', 15}, {'F', 15}, {'E', 15}}},
        {0, 5, -8.0, "water makes it different",
         {{'D', 0}, {'D', 0}, {'D', 0}, {'D', 0}, {'D', 0}, {'D', 0}, {'D', 0}, {'D', 0}}},
        {0, 6, 1.0, "the pitch changes", {{'E', 5}, {'E', 6}}},
        {0, 7, 4.25, "it sounds higher", {{'F', 10}}},
        {0, 8, 0.5, "the sound bounces around the glass", {{'F', 2}, {'E', 13}, {'D', 4}}},
        {0, 9, 9.8, "i dont know", {{'F', 7}}},
        {1, 0, 7.0, "no idea", {{'E', 4}, {'F', 4}, {'F', 11}}},
        {1, 1, 3.0, "the water absorbs the sound", {{'F', 9}, {'D', 1}}},
        {1, 2, -1.0, "glass with water is quieter", {{'D', 3}}},
        {1, 3, 6.5, "sound", {{'E', 16}, {'F', 0}, {'E', 16}}},
        {1, 4, 9.8, "the empty one is higher", {{'F', 8}, {'E', 19}}},
        {1, 5, 2.0, "it is different", {{'F', 14}, {'E', 18}}},
        {1, 6, 5.5, "water is heavy", {{'E', 2}, {'D', 0}, {'F', 6}}},
        {1, 7, -2.0, "the sound is lower", {{'F', 17}, {'D', 2}}},
        {1, 8, 0.0, "i guess", {{'E', 0}, {'E', 1}, {'E', 2}, {'E', 3}}},
        {1, 9, 5.5, "the vibrations change", {{'F', 12}, {'E', 9}}},
    };
}

inline std::vector<EpisodeRecord> handcrafted_log() {
    const auto& phrases = experiment_preset(3).phrases;
    std::vector<EpisodeRecord> out;
    for (const auto& h : hand_episodes()) {
        EpisodeRecord r;
        r.experiment_id = 3;
        r.run_id = h.run;
        r.episode_index = h.index;
        r.initial_text = h.seed;
        r.initial_rating = dist_with_mean(0.5);
        ResponseState s(r.initial_text);
        const double per_step = h.ret / static_cast<double>(h.steps.size());
        for (const auto& st : h.steps) {
            const auto a = hand_action(st.kind, st.index);
            r.transitions.push_back(Transition{s.text(), a, dist_with_mean(1.0), per_step});
            s = apply_action(s, a, phrases);
        }
        r.episode_return = h.ret;
        r.termination = Termination::MaxSteps;
        out.push_back(std::move(r));
    }
    return out;
}

// ─── Brute-force analytics oracle ─────────────────────────────────────────────

inline std::size_t oracle_flat_index(const RevisionAction& a, std::size_t P) {
    if (const auto* ins = std::get_if<InsertPhrase>(&a)) {
        return ins->location == InsertLocation::Front ? ins->phrase_index : P + ins->phrase_index;
    }
    return 2 * P + std::get<DeleteSegment>(a).segment_index;
}

// Episode i is kept when fewer than k episodes outrank it.
inline std::vector<EpisodeRecord> oracle_top(const std::vector<EpisodeRecord>& all, double fraction) {
    std::size_t k = 0;
    while (static_cast<double>(k) < fraction * static_cast<double>(all.size()) - 1e-9) ++k;
    k = std::max<std::size_t>(k, all.empty() ? 0 : 1);
    std::vector<std::pair<std::size_t, const EpisodeRecord*>> ranked;
    for (const auto& e : all) {
        std::size_t better = 0;
        for (const auto& o : all) {
            const bool outranks =
                o.episode_return > e.episode_return ||
                (o.episode_return == e.episode_return &&
                 (o.run_id < e.run_id || (o.run_id == e.run_id && o.episode_index < e.episode_index)));
            better += outranks ? 1 : 0;
        }
        if (better < k) ranked.emplace_back(better, &e);
    }
    std::sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) { return a.first < b.first; });
    std::vector<EpisodeRecord> out;
    for (auto& [rank, e] : ranked) out.push_back(*e);
    return out;
}

// Independent renderer: rebuild the token list with per-token tags, then group.
inline std::string oracle_render(const EpisodeRecord& ep, const std::vector<std::string>& phrases) {
    std::vector<std::string> tok;
    std::vector<std::string> tag;  // "o" original, "iN" insert at step N, "d..." deleted
    {
        std::istringstream in(ep.initial_text);
        for (std::string w; in >> w;) {
            tok.push_back(w);
            tag.push_back("o");
        }
    }
    for (std::size_t step = 0; step < ep.transitions.size(); ++step) {
        const auto& a = ep.transitions[step].action;
        if (const auto* ins = std::get_if<InsertPhrase>(&a)) {
            std::vector<std::string> words;
            std::istringstream in(phrases[ins->phrase_index]);
            for (std::string w; in >> w;) words.push_back(w);
            const std::size_t at = ins->location == InsertLocation::Front ? 0 : tok.size();
            tok.insert(tok.begin() + static_cast<long>(at), words.begin(), words.end());
            tag.insert(tag.begin() + static_cast<long>(at), words.size(), "i" + std::to_string(step));
        } else {
            std::vector<std::size_t> alive;
            for (std::size_t i = 0; i < tok.size(); ++i) {
                if (tag[i][0] != 'd') alive.push_back(i);
            }
            const std::size_t seg = std::get<DeleteSegment>(a).segment_index;
            const std::size_t n = alive.size();
            for (std::size_t i = seg * n / 5; i < (seg + 1) * n / 5; ++i) tag[alive[i]] = "d" + tag[alive[i]];
        }
    }
    std::string out;
    for (std::size_t i = 0; i < tok.size();) {
        std::size_t j = i;
        std::string words;
        while (j < tok.size() && tag[j] == tag[i]) {
            if (j > i) words += " ";
            words += tok[j++];
        }
        const std::string base = tag[i][0] == 'd' ? tag[i].substr(1) : tag[i];
        if (base[0] == 'i') words = "[" + words + "]";
        if (tag[i][0] == 'd') words = "~~" + words + "~~";
        out += (out.empty() ? "" : " ") + words;
        i = j;
    }
    return out;
}

inline AuditReport oracle_report(const std::vector<EpisodeRecord>& all, double fraction,
                                 const ExperimentPreset& preset, std::size_t exemplars) {
    const std::size_t P = preset.phrases.size();
    const auto top = oracle_top(all, fraction);
    AuditReport r;
    r.experiment_id = preset.id;
    r.n_episodes_pooled = all.size();
    r.n_episodes_analyzed = top.size();
    r.top_fraction = fraction;
    if (top.empty()) return r;

    std::map<std::size_t, std::size_t> per_action;
    std::map<std::size_t, std::size_t> per_phrase;
    std::size_t actions = 0, inserts = 0, helpful = 0, with_delete = 0, repeated = 0, triple = 0;
    for (const auto& e : top) {
        std::vector<long> phrase_seq;  // -1 marks a delete
        for (const auto& t : e.transitions) {
            ++actions;
            ++per_action[oracle_flat_index(t.action, P)];
            if (const auto* ins = std::get_if<InsertPhrase>(&t.action)) {
                ++inserts;
                ++per_phrase[ins->phrase_index];
                if (preset.has_partition() && preset.groups[ins->phrase_index] == PhraseGroup::Helpful) ++helpful;
                phrase_seq.push_back(static_cast<long>(ins->phrase_index));
            } else {
                phrase_seq.push_back(-1);
            }
        }
        bool rep = false, tri = false, del = false;
        for (std::size_t i = 0; i < phrase_seq.size(); ++i) {
            del = del || phrase_seq[i] < 0;
            for (std::size_t j = i + 1; j < phrase_seq.size(); ++j) {
                rep = rep || (phrase_seq[i] >= 0 && phrase_seq[i] == phrase_seq[j]);
            }
            if (i + 2 < phrase_seq.size() && phrase_seq[i] >= 0 && phrase_seq[i] == phrase_seq[i + 1] &&
                phrase_seq[i] == phrase_seq[i + 2]) {
                tri = true;
            }
        }
        repeated += rep;
        triple += tri;
        with_delete += del;
    }
    const auto n = static_cast<double>(top.size());
    r.mean_actions = static_cast<double>(actions) / n;
    r.delete_sequence_fraction = static_cast<double>(with_delete) / n;
    r.repeat_sequence_fraction = static_cast<double>(repeated) / n;
    r.triple_consecutive_fraction = static_cast<double>(triple) / n;
    for (auto [a, c] : per_action) r.per_action_frequency[a] = static_cast<double>(c) / static_cast<double>(actions);
    for (auto [p, c] : per_phrase) r.insert_phrase_frequency[p] = static_cast<double>(c) / static_cast<double>(inserts);
    if (preset.has_partition() && inserts > 0) {
        r.helpful_vs_unhelpful_split = InventorySplit{static_cast<double>(helpful) / static_cast<double>(inserts),
                                                      static_cast<double>(inserts - helpful) /
                                                          static_cast<double>(inserts)};
    }
    for (std::size_t i = 0; i < std::min(exemplars, top.size()); ++i) {
        r.exemplar_sequences.push_back({top[i].run_id, top[i].episode_index, top[i].episode_return,
                                        top[i].transitions.size(), oracle_render(top[i], preset.phrases)});
    }
    return r;
}

// ─── Mock rubric oracle ───────────────────────────────────────────────────────

// Scores by scanning a space-padded lowercase string; written independently of
// the token-span implementation.
inline double oracle_mock_score(const std::string& text) {
    std::string norm;
    for (char c : text) norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    std::istringstream in(norm);
    std::string padded = " ";
    std::map<std::string, int> unigrams;
    for (std::string w; in >> w;) {
        const auto strip = [](char c) { return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':'; };
        while (!w.empty() && strip(w.front())) w.erase(w.begin());
        while (!w.empty() && strip(w.back())) w.pop_back();
        if (w.empty()) continue;
        padded += w + " ";
        ++unigrams[w];
    }
    const auto count = [&](const std::string& phrase) {
        const std::string needle = " " + phrase + " ";
        int c = 0;
        for (std::size_t pos = padded.find(needle); pos != std::string::npos;
             pos = padded.find(needle, pos + needle.size() - 1)) {
            ++c;
        }
        return c;
    };
    double s = 0.0;
    for (std::string p : experiment_preset(1).phrases) {
        for (auto& c : p) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        s += 0.8 * count(p);
    }
    s += 0.5 * count("more dense") + 0.3 * count("height of wave");
    for (const char* u : {"dense", "density", "frequency", "amplitude", "vibration", "vibrations", "pitch", "wave",
                          "waves", "mass"}) {
        s += 0.15 * unigrams[u];
    }
    return s;
}

inline std::array<double, 5> oracle_mock_probs(double s) {
    std::array<double, 5> logit{};
    double mx = -1e300;
    for (int k = 0; k < 5; ++k) {
        logit[k] = -(s - k) * (s - k) / 0.5;
        mx = std::max(mx, logit[k]);
    }
    double z = 0.0;
    for (auto& l : logit) z += std::exp(l - mx);
    std::array<double, 5> p{};
    for (int k = 0; k < 5; ++k) p[k] = std::exp(logit[k] - mx) / z;
    return p;
}

inline double oracle_expected(const std::array<double, 5>& p) {
    double e = 0.0;
    for (int k = 0; k < 5; ++k) e += k * p[k];
    return e;
}

inline std::filesystem::path fresh_temp_dir(const std::string& name) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("gradeprobe_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// A loopback port nothing listens on: bound by the kernel's choice, then closed.
inline int unused_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

} // namespace gradeprobe::testing
