#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gradeprobe/rating.hpp"

namespace gradeprobe::wire {

[[nodiscard]] std::string encode_request(const std::vector<std::string>& texts);

// Throws InputError when the body is not {"texts": [string...]}.
[[nodiscard]] std::vector<std::string> decode_request(std::string_view body);

[[nodiscard]] std::string encode_response(std::string_view model_id, const std::vector<RatingDistribution>& dists);

struct GradeResponse {
    std::string model_id;
    std::vector<RatingDistribution> distributions;
};

// Throws InputError on schema violations, including distributions that do not
// have exactly 5 entries summing to 1 within 1e-6.
[[nodiscard]] GradeResponse decode_response(std::string_view body);

[[nodiscard]] std::string error_body(std::string_view message);

} // namespace gradeprobe::wire
