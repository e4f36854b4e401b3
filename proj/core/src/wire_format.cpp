#include "wire_format.hpp"

#include <nlohmann/json.hpp>

#include "gradeprobe/errors.hpp"

namespace gradeprobe::wire {

using nlohmann::json;

std::string encode_request(const std::vector<std::string>& texts) {
    return json{{"texts", texts}}.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::vector<std::string> decode_request(std::string_view body) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw InputError("request body is not a JSON object");
    auto it = doc.find("texts");
    if (it == doc.end() || !it->is_array()) throw InputError("request needs a \"texts\" array");
    std::vector<std::string> texts;
    texts.reserve(it->size());
    for (const auto& t : *it) {
        if (!t.is_string()) throw InputError("\"texts\" entries must be strings");
        texts.push_back(t.get<std::string>());
    }
    return texts;
}

std::string encode_response(std::string_view model_id, const std::vector<RatingDistribution>& dists) {
    json arr = json::array();
    for (const auto& d : dists) arr.push_back(d.probs());
    return json{{"model_id", model_id}, {"distributions", std::move(arr)}}.dump();
}

GradeResponse decode_response(std::string_view body) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw InputError("response body is not a JSON object");
    GradeResponse out;
    auto mid = doc.find("model_id");
    if (mid == doc.end() || !mid->is_string()) throw InputError("response lacks string \"model_id\"");
    out.model_id = mid->get<std::string>();
    auto dists = doc.find("distributions");
    if (dists == doc.end() || !dists->is_array()) throw InputError("response lacks \"distributions\" array");
    for (const auto& row : *dists) {
        if (!row.is_array() || row.size() != kRatingClasses) {
            throw InputError("each distribution must have exactly 5 entries");
        }
        RatingDistribution::Probabilities p{};
        for (std::size_t k = 0; k < kRatingClasses; ++k) {
            if (!row[k].is_number()) throw InputError("distribution entries must be numbers");
            p[k] = row[k].get<double>();
        }
        out.distributions.push_back(RatingDistribution::from_probs(p));
    }
    return out;
}

std::string error_body(std::string_view message) {
    return json{{"error", message}}.dump(-1, ' ', false, json::error_handler_t::replace);
}

} // namespace gradeprobe::wire
