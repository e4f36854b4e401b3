#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "gradeprobe/environment.hpp"

namespace gradeprobe {

// JSON-Lines episode log. First line is a header
//   {"schema":"gradeprobe.episodes","version":1,"experiment_id":E,"run_id":R}
// followed by one EpisodeRecord per line, ordered by episode_index.
// Doubles use the shortest representation that round-trips.

inline constexpr int kEpisodeLogVersion = 1;

struct LogHeader {
    int version = kEpisodeLogVersion;
    int experiment_id = 0;
    int run_id = 0;

    bool operator==(const LogHeader&) const = default;
};

struct EpisodeLog {
    LogHeader header;
    std::vector<EpisodeRecord> episodes;
};

[[nodiscard]] std::string header_to_json_line(const LogHeader& header);
[[nodiscard]] std::string episode_to_json_line(const EpisodeRecord& record);

// Both throw LogFormatError on malformed input.
[[nodiscard]] LogHeader header_from_json_line(std::string_view line);
[[nodiscard]] EpisodeRecord episode_from_json_line(std::string_view line);

[[nodiscard]] std::string serialize_episode_log(const EpisodeLog& log);
[[nodiscard]] EpisodeLog parse_episode_log(std::istream& in, std::string_view source_name = "<stream>");
[[nodiscard]] EpisodeLog read_episode_log(const std::filesystem::path& path);

// Append-only writer for one (experiment, run) file. Each record is flushed as
// soon as it is written, so a crash leaves only complete lines behind.
class EpisodeLogWriter {
public:
    EpisodeLogWriter(const std::filesystem::path& path, const LogHeader& header);

    // Throws LogFormatError when ids disagree with the header or the episode
    // index does not increase.
    void append(const EpisodeRecord& record);

    [[nodiscard]] long records_written() const noexcept { return written_; }

private:
    std::mutex mutex_;
    std::ofstream out_;
    LogHeader header_;
    long written_ = 0;
    long last_index_ = -1;
};

} // namespace gradeprobe
