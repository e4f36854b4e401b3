#include "gradeprobe/episode_log.hpp"

#include <cmath>
#include <istream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

using nlohmann::ordered_json;

namespace {

constexpr const char* kSchema = "gradeprobe.episodes";

std::string dump_line(const ordered_json& j) {
    return j.dump(-1, ' ', false, ordered_json::error_handler_t::strict);
}

ordered_json action_to_json(const RevisionAction& action) {
    if (const auto* ins = std::get_if<InsertPhrase>(&action)) {
        return {{"kind", "insert"},
                {"phrase_index", ins->phrase_index},
                {"location", ins->location == InsertLocation::Front ? "front" : "end"}};
    }
    return {{"kind", "delete"}, {"segment_index", std::get<DeleteSegment>(action).segment_index}};
}

RevisionAction action_from_json(const ordered_json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "insert") {
        const auto loc = j.at("location").get<std::string>();
        if (loc != "front" && loc != "end") throw LogFormatError("unknown insert location '" + loc + "'");
        return InsertPhrase{j.at("phrase_index").get<std::size_t>(),
                            loc == "front" ? InsertLocation::Front : InsertLocation::End};
    }
    if (kind == "delete") {
        const auto seg = j.at("segment_index").get<std::size_t>();
        if (seg >= kSegmentCount) throw LogFormatError("segment_index out of range");
        return DeleteSegment{seg};
    }
    throw LogFormatError("unknown action kind '" + kind + "'");
}

RatingDistribution rating_from_json(const ordered_json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != kRatingClasses) throw LogFormatError("rating must have 5 entries");
    RatingDistribution::Probabilities p{};
    std::copy(v.begin(), v.end(), p.begin());
    try {
        return RatingDistribution::from_probs(p);
    } catch (const InputError& e) {
        throw LogFormatError(e.what());
    }
}

const char* termination_name(Termination t) {
    return t == Termination::ThresholdReached ? "threshold_reached" : "max_steps";
}

} // namespace

std::string header_to_json_line(const LogHeader& header) {
    ordered_json j;
    j["schema"] = kSchema;
    j["version"] = header.version;
    j["experiment_id"] = header.experiment_id;
    j["run_id"] = header.run_id;
    return dump_line(j);
}

std::string episode_to_json_line(const EpisodeRecord& r) {
    ordered_json transitions = ordered_json::array();
    for (const auto& t : r.transitions) {
        ordered_json jt;
        jt["state"] = t.state_text;
        jt["action"] = action_to_json(t.action);
        jt["rating"] = t.rating.probs();
        jt["reward"] = t.reward;
        transitions.push_back(std::move(jt));
    }
    ordered_json j;
    j["experiment_id"] = r.experiment_id;
    j["run_id"] = r.run_id;
    j["episode_index"] = r.episode_index;
    j["initial_text"] = r.initial_text;
    j["initial_rating"] = r.initial_rating.probs();
    j["transitions"] = std::move(transitions);
    j["return"] = r.episode_return;
    j["termination"] = termination_name(r.termination);
    return dump_line(j);
}

LogHeader header_from_json_line(std::string_view line) {
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw LogFormatError("log header is not a JSON object");
    try {
        if (j.at("schema").get<std::string>() != kSchema) throw LogFormatError("log header: unknown schema");
        LogHeader h;
        h.version = j.at("version").get<int>();
        if (h.version != kEpisodeLogVersion) {
            throw LogFormatError("log header: unsupported version " + std::to_string(h.version));
        }
        h.experiment_id = j.at("experiment_id").get<int>();
        h.run_id = j.at("run_id").get<int>();
        return h;
    } catch (const ordered_json::exception& e) {
        throw LogFormatError(std::string("log header: ") + e.what());
    }
}

EpisodeRecord episode_from_json_line(std::string_view line) {
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw LogFormatError("episode line is not a JSON object");
    try {
        EpisodeRecord r;
        r.experiment_id = j.at("experiment_id").get<int>();
        r.run_id = j.at("run_id").get<int>();
        r.episode_index = j.at("episode_index").get<long>();
        r.initial_text = j.at("initial_text").get<std::string>();
        r.initial_rating = rating_from_json(j.at("initial_rating"));
        double sum = 0.0;
        for (const auto& jt : j.at("transitions")) {
            Transition t;
            t.state_text = jt.at("state").get<std::string>();
            t.action = action_from_json(jt.at("action"));
            t.rating = rating_from_json(jt.at("rating"));
            t.reward = jt.at("reward").get<double>();
            sum += t.reward;
            r.transitions.push_back(std::move(t));
        }
        if (r.transitions.empty()) throw LogFormatError("episode has no transitions");
        r.episode_return = j.at("return").get<double>();
        if (std::abs(sum - r.episode_return) > 1e-9) {
            throw LogFormatError("episode " + std::to_string(r.episode_index) +
                                 ": return does not equal the sum of rewards");
        }
        const auto term = j.at("termination").get<std::string>();
        if (term == "threshold_reached") {
            r.termination = Termination::ThresholdReached;
        } else if (term == "max_steps") {
            r.termination = Termination::MaxSteps;
        } else {
            throw LogFormatError("unknown termination '" + term + "'");
        }
        return r;
    } catch (const ordered_json::exception& e) {
        throw LogFormatError(std::string("episode line: ") + e.what());
    }
}

std::string serialize_episode_log(const EpisodeLog& log) {
    std::string out = header_to_json_line(log.header) + "\n";
    for (const auto& r : log.episodes) out += episode_to_json_line(r) + "\n";
    return out;
}

EpisodeLog parse_episode_log(std::istream& in, std::string_view source_name) {
    EpisodeLog log;
    std::string line;
    long line_no = 0;
    bool have_header = false;
    auto where = [&] { return std::string(source_name) + ":" + std::to_string(line_no) + ": "; };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            if (!have_header) {
                log.header = header_from_json_line(line);
                have_header = true;
                continue;
            }
            EpisodeRecord r = episode_from_json_line(line);
            if (r.experiment_id != log.header.experiment_id || r.run_id != log.header.run_id) {
                throw LogFormatError("record ids disagree with the log header");
            }
            if (!log.episodes.empty() && r.episode_index <= log.episodes.back().episode_index) {
                throw LogFormatError("episode_index is not increasing");
            }
            log.episodes.push_back(std::move(r));
        } catch (const LogFormatError& e) {
            throw LogFormatError(where() + e.what());
        }
    }
    if (!have_header) throw LogFormatError(std::string(source_name) + ": missing log header");
    return log;
}

EpisodeLog read_episode_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LogFormatError("cannot open log file " + path.string());
    return parse_episode_log(in, path.string());
}

EpisodeLogWriter::EpisodeLogWriter(const std::filesystem::path& path, const LogHeader& header)
    : out_(path, std::ios::binary | std::ios::trunc), header_(header) {
    if (!out_) throw Error("cannot open log file " + path.string() + " for writing");
    out_ << header_to_json_line(header_) << '\n';
    out_.flush();
}

void EpisodeLogWriter::append(const EpisodeRecord& record) {
    std::lock_guard lock(mutex_);
    if (record.experiment_id != header_.experiment_id || record.run_id != header_.run_id) {
        throw LogFormatError("record (experiment " + std::to_string(record.experiment_id) + ", run " +
                             std::to_string(record.run_id) + ") does not belong to this log");
    }
    if (record.episode_index <= last_index_) throw LogFormatError("episode_index is not increasing");
    out_ << episode_to_json_line(record) << '\n';
    out_.flush();
    if (!out_) throw Error("write to episode log failed");
    last_index_ = record.episode_index;
    ++written_;
}

} // namespace gradeprobe
