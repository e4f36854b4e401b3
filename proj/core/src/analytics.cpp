#include "gradeprobe/analytics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

#include "gradeprobe/errors.hpp"
#include "gradeprobe/text.hpp"

namespace gradeprobe {

std::size_t top_count(std::size_t n, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("top fraction must lie in (0, 1]");
    if (n == 0) return 0;
    const double x = fraction * static_cast<double>(n);
    // 0.05 * 182500 evaluates to 9125.000000000002; absorb that representation error.
    const auto k = static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
    return std::clamp<std::size_t>(k, 1, n);
}

std::vector<EpisodeRecord> top_percentile(std::span<const EpisodeRecord> episodes, double fraction) {
    const std::size_t k = top_count(episodes.size(), fraction);
    std::vector<const EpisodeRecord*> order;
    order.reserve(episodes.size());
    for (const auto& e : episodes) order.push_back(&e);
    std::sort(order.begin(), order.end(), [](const EpisodeRecord* a, const EpisodeRecord* b) {
        if (a->episode_return != b->episode_return) return a->episode_return > b->episode_return;
        if (a->run_id != b->run_id) return a->run_id < b->run_id;
        return a->episode_index < b->episode_index;
    });
    std::vector<EpisodeRecord> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(*order[i]);
    return out;
}

RepeatStats repeat_stats(std::span<const EpisodeRecord> subset) {
    RepeatStats stats;
    if (subset.empty()) return stats;
    std::size_t repeated = 0;
    std::size_t triple = 0;
    for (const auto& ep : subset) {
        std::map<std::size_t, int> counts;
        bool has_repeat = false;
        bool has_triple = false;
        std::size_t run_phrase = 0;
        int run_length = 0;
        for (const auto& t : ep.transitions) {
            const auto* ins = std::get_if<InsertPhrase>(&t.action);
            if (!ins) {
                run_length = 0;
                continue;
            }
            if (++counts[ins->phrase_index] >= 2) has_repeat = true;
            if (run_length > 0 && run_phrase == ins->phrase_index) {
                ++run_length;
            } else {
                run_phrase = ins->phrase_index;
                run_length = 1;
            }
            if (run_length >= 3) has_triple = true;
        }
        repeated += has_repeat ? 1 : 0;
        triple += has_triple ? 1 : 0;
    }
    const auto n = static_cast<double>(subset.size());
    stats.repeat_sequence_fraction = static_cast<double>(repeated) / n;
    stats.triple_consecutive_fraction = static_cast<double>(triple) / n;
    return stats;
}

ActionFrequency action_frequency(std::span<const EpisodeRecord> subset, std::size_t phrase_count) {
    ActionFrequency freq;
    if (subset.empty()) return freq;
    const ActionSpace space(phrase_count);
    std::map<std::size_t, std::size_t> counts;
    std::size_t with_delete = 0;
    for (const auto& ep : subset) {
        bool deleted = false;
        for (const auto& t : ep.transitions) {
            ++counts[space.encode(t.action)];
            deleted = deleted || is_delete(t.action);
        }
        freq.total_actions += ep.transitions.size();
        with_delete += deleted ? 1 : 0;
    }
    for (const auto& [action, c] : counts) {
        freq.per_action[action] = static_cast<double>(c) / static_cast<double>(freq.total_actions);
    }
    const auto n = static_cast<double>(subset.size());
    freq.delete_sequence_fraction = static_cast<double>(with_delete) / n;
    freq.mean_actions = static_cast<double>(freq.total_actions) / n;
    return freq;
}

std::map<std::size_t, double> insert_phrase_frequency(std::span<const EpisodeRecord> subset) {
    std::map<std::size_t, std::size_t> counts;
    std::size_t inserts = 0;
    for (const auto& ep : subset) {
        for (const auto& t : ep.transitions) {
            if (const auto* ins = std::get_if<InsertPhrase>(&t.action)) {
                ++counts[ins->phrase_index];
                ++inserts;
            }
        }
    }
    std::map<std::size_t, double> out;
    for (const auto& [phrase, c] : counts) out[phrase] = static_cast<double>(c) / static_cast<double>(inserts);
    return out;
}

std::optional<InventorySplit> inventory_split(std::span<const EpisodeRecord> subset, const ExperimentPreset& preset) {
    if (!preset.has_partition()) return std::nullopt;
    std::size_t helpful = 0;
    std::size_t unhelpful = 0;
    for (const auto& ep : subset) {
        for (const auto& t : ep.transitions) {
            const auto* ins = std::get_if<InsertPhrase>(&t.action);
            if (!ins) continue;
            if (ins->phrase_index >= preset.groups.size()) {
                throw InputError("phrase index " + std::to_string(ins->phrase_index) + " outside preset " +
                                 std::to_string(preset.id));
            }
            (preset.groups[ins->phrase_index] == PhraseGroup::Helpful ? helpful : unhelpful) += 1;
        }
    }
    const std::size_t total = helpful + unhelpful;
    if (total == 0) return std::nullopt;
    return InventorySplit{static_cast<double>(helpful) / static_cast<double>(total),
                          static_cast<double>(unhelpful) / static_cast<double>(total)};
}

// ─── Exemplar rendering ───────────────────────────────────────────────────────

std::string render_revision(const EpisodeRecord& episode, std::span<const std::string> phrases) {
    struct Item {
        std::string token;
        long group = -1;  // -1 original text, otherwise the step that inserted it
        bool deleted = false;
    };
    std::vector<Item> items;
    for (auto& tok : split_whitespace(episode.initial_text)) items.push_back({std::move(tok), -1, false});

    for (std::size_t step = 0; step < episode.transitions.size(); ++step) {
        const auto& action = episode.transitions[step].action;
        if (const auto* ins = std::get_if<InsertPhrase>(&action)) {
            if (ins->phrase_index >= phrases.size()) throw InvalidActionError("phrase index outside inventory");
            std::vector<Item> added;
            for (auto& tok : split_whitespace(phrases[ins->phrase_index])) {
                added.push_back({std::move(tok), static_cast<long>(step), false});
            }
            auto pos = ins->location == InsertLocation::Front ? items.begin() : items.end();
            items.insert(pos, added.begin(), added.end());
        } else {
            std::vector<Item*> live;
            for (auto& it : items) {
                if (!it.deleted) live.push_back(&it);
            }
            const TokenRange cut = segment_bounds(live.size())[std::get<DeleteSegment>(action).segment_index];
            for (std::size_t i = cut.begin; i < cut.end; ++i) live[i]->deleted = true;
        }
    }

    std::string out;
    std::size_t i = 0;
    while (i < items.size()) {
        std::size_t j = i;
        while (j < items.size() && items[j].group == items[i].group && items[j].deleted == items[i].deleted) ++j;
        std::string chunk;
        for (std::size_t k = i; k < j; ++k) chunk += (k > i ? " " : "") + items[k].token;
        if (items[i].group >= 0) chunk = "[" + chunk + "]";
        if (items[i].deleted) chunk = "~~" + chunk + "~~";
        if (!out.empty()) out.push_back(' ');
        out += chunk;
        i = j;
    }
    return out;
}

// ─── Report ───────────────────────────────────────────────────────────────────

AuditReport build_audit_report(std::span<const EpisodeRecord> episodes, double top_fraction,
                               const ExperimentPreset& preset, std::size_t exemplar_count) {
    AuditReport report;
    report.experiment_id = preset.id;
    report.top_fraction = top_fraction;
    report.n_episodes_pooled = episodes.size();

    const auto subset = top_percentile(episodes, top_fraction);
    report.n_episodes_analyzed = subset.size();

    const auto freq = action_frequency(subset, preset.phrases.size());
    report.mean_actions = freq.mean_actions;
    report.delete_sequence_fraction = freq.delete_sequence_fraction;
    report.per_action_frequency = freq.per_action;

    const auto repeats = repeat_stats(subset);
    report.repeat_sequence_fraction = repeats.repeat_sequence_fraction;
    report.triple_consecutive_fraction = repeats.triple_consecutive_fraction;

    report.insert_phrase_frequency = insert_phrase_frequency(subset);
    report.helpful_vs_unhelpful_split = inventory_split(subset, preset);

    for (std::size_t i = 0; i < std::min(exemplar_count, subset.size()); ++i) {
        const auto& ep = subset[i];
        report.exemplar_sequences.push_back(ExemplarSequence{ep.run_id, ep.episode_index, ep.episode_return,
                                                             ep.transitions.size(),
                                                             render_revision(ep, preset.phrases)});
    }
    return report;
}

// ─── Learning curve ───────────────────────────────────────────────────────────

LearningCurve learning_curve(const std::vector<std::vector<double>>& run_returns, std::size_t window,
                             std::size_t episodes_per_run) {
    if (window < 1) throw InputError("window must be >= 1");
    if (run_returns.empty()) throw InputError("learning curve needs at least one run");
    for (std::size_t r = 0; r < run_returns.size(); ++r) {
        if (run_returns[r].size() < episodes_per_run) {
            throw InputError("run " + std::to_string(r) + " has " + std::to_string(run_returns[r].size()) +
                             " episodes, fewer than " + std::to_string(episodes_per_run));
        }
    }

    LearningCurve curve;
    curve.window = window;
    curve.episodes_per_run = episodes_per_run;
    curve.runs = run_returns.size();
    curve.degenerate_band = curve.runs < 2;

    std::vector<std::vector<double>> smoothed(curve.runs, std::vector<double>(episodes_per_run));
    for (std::size_t r = 0; r < curve.runs; ++r) {
        const auto& x = run_returns[r];
        for (std::size_t i = 0; i < episodes_per_run; ++i) {
            const std::size_t start = i + 1 >= window ? i + 1 - window : 0;
            double sum = 0.0;
            for (std::size_t k = start; k <= i; ++k) sum += x[k];
            smoothed[r][i] = sum / static_cast<double>(i + 1 - start);
        }
    }

    const auto runs = static_cast<double>(curve.runs);
    curve.mean.resize(episodes_per_run);
    curve.lower.resize(episodes_per_run);
    curve.upper.resize(episodes_per_run);
    for (std::size_t i = 0; i < episodes_per_run; ++i) {
        double m = 0.0;
        for (const auto& s : smoothed) m += s[i];
        m /= runs;
        double half = 0.0;
        if (!curve.degenerate_band) {
            double var = 0.0;
            for (const auto& s : smoothed) var += (s[i] - m) * (s[i] - m);
            half = 1.96 * std::sqrt(var / runs) / std::sqrt(runs);
        }
        curve.mean[i] = m;
        curve.lower[i] = m - half;
        curve.upper[i] = m + half;
    }
    return curve;
}

// ─── Serialization ────────────────────────────────────────────────────────────

using nlohmann::ordered_json;

std::string report_to_json(const AuditReport& report, std::span<const std::string> phrases) {
    const ActionSpace space(phrases.size());
    ordered_json per_action = ordered_json::array();
    for (const auto& [action, fraction] : report.per_action_frequency) {
        ordered_json row{{"action_index", action}};
        if (!phrases.empty() && action < space.size()) row["action"] = describe_action(space.decode(action), phrases);
        row["fraction"] = fraction;
        per_action.push_back(std::move(row));
    }
    ordered_json per_phrase = ordered_json::array();
    for (const auto& [phrase, fraction] : report.insert_phrase_frequency) {
        ordered_json row{{"phrase_index", phrase}};
        if (phrase < phrases.size()) row["phrase"] = phrases[phrase];
        row["fraction"] = fraction;
        per_phrase.push_back(std::move(row));
    }
    ordered_json exemplars = ordered_json::array();
    for (const auto& ex : report.exemplar_sequences) {
        exemplars.push_back({{"run_id", ex.run_id},
                             {"episode_index", ex.episode_index},
                             {"return", ex.episode_return},
                             {"actions", ex.actions},
                             {"rendered", ex.rendered}});
    }

    ordered_json j;
    j["experiment_id"] = report.experiment_id;
    j["n_episodes_pooled"] = report.n_episodes_pooled;
    j["n_episodes_analyzed"] = report.n_episodes_analyzed;
    j["top_fraction"] = report.top_fraction;
    j["mean_actions"] = report.mean_actions;
    j["delete_sequence_fraction"] = report.delete_sequence_fraction;
    j["repeat_sequence_fraction"] = report.repeat_sequence_fraction;
    j["triple_consecutive_fraction"] = report.triple_consecutive_fraction;
    j["per_action_frequency"] = std::move(per_action);
    j["insert_phrase_frequency"] = std::move(per_phrase);
    if (report.helpful_vs_unhelpful_split) {
        j["helpful_vs_unhelpful_split"] = {{"helpful", report.helpful_vs_unhelpful_split->helpful},
                                           {"unhelpful", report.helpful_vs_unhelpful_split->unhelpful}};
    } else {
        j["helpful_vs_unhelpful_split"] = nullptr;
    }
    j["exemplar_sequences"] = std::move(exemplars);
    return j.dump(2) + "\n";
}

AuditReport report_from_json(std::string_view text) {
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw InputError("report is not a JSON object");
    try {
        AuditReport r;
        r.experiment_id = j.at("experiment_id").get<int>();
        r.n_episodes_pooled = j.at("n_episodes_pooled").get<std::size_t>();
        r.n_episodes_analyzed = j.at("n_episodes_analyzed").get<std::size_t>();
        r.top_fraction = j.at("top_fraction").get<double>();
        r.mean_actions = j.at("mean_actions").get<double>();
        r.delete_sequence_fraction = j.at("delete_sequence_fraction").get<double>();
        r.repeat_sequence_fraction = j.at("repeat_sequence_fraction").get<double>();
        r.triple_consecutive_fraction = j.at("triple_consecutive_fraction").get<double>();
        for (const auto& row : j.at("per_action_frequency")) {
            r.per_action_frequency[row.at("action_index").get<std::size_t>()] = row.at("fraction").get<double>();
        }
        for (const auto& row : j.at("insert_phrase_frequency")) {
            r.insert_phrase_frequency[row.at("phrase_index").get<std::size_t>()] = row.at("fraction").get<double>();
        }
        const auto& split = j.at("helpful_vs_unhelpful_split");
        if (!split.is_null()) {
            r.helpful_vs_unhelpful_split =
                InventorySplit{split.at("helpful").get<double>(), split.at("unhelpful").get<double>()};
        }
        for (const auto& ex : j.at("exemplar_sequences")) {
            r.exemplar_sequences.push_back(ExemplarSequence{ex.at("run_id").get<int>(), ex.at("episode_index").get<long>(),
                                                            ex.at("return").get<double>(),
                                                            ex.at("actions").get<std::size_t>(),
                                                            ex.at("rendered").get<std::string>()});
        }
        return r;
    } catch (const ordered_json::exception& e) {
        throw InputError(std::string("report: ") + e.what());
    }
}

namespace {

void append_number(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

} // namespace

std::string curve_to_csv(const LearningCurve& curve) {
    std::string out = "episode_index,mean,lower,upper\n";
    for (std::size_t i = 0; i < curve.mean.size(); ++i) {
        out += std::to_string(i);
        out.push_back(',');
        append_number(out, curve.mean[i]);
        out.push_back(',');
        append_number(out, curve.lower[i]);
        out.push_back(',');
        append_number(out, curve.upper[i]);
        out.push_back('\n');
    }
    return out;
}

} // namespace gradeprobe
