#include <charconv>

#include <httplib.h>

#include "gradeprobe/errors.hpp"
#include "gradeprobe/grader.hpp"
#include "wire_format.hpp"

namespace gradeprobe {

std::string Endpoint::to_string() const {
    return scheme + "://" + host + ":" + std::to_string(port) + base_path;
}

Endpoint parse_endpoint(std::string_view url) {
    Endpoint ep;
    const auto sep = url.find("://");
    if (sep == std::string_view::npos) throw ConfigError("grader.endpoint: missing scheme in '" + std::string(url) + "'");
    ep.scheme = std::string(url.substr(0, sep));
    if (ep.scheme != "http" && ep.scheme != "https") {
        throw ConfigError("grader.endpoint: unsupported scheme '" + ep.scheme + "'");
    }
    ep.port = ep.scheme == "https" ? 443 : 80;

    const std::string rest(url.substr(sep + 3));
    const auto slash = rest.find('/');
    std::string authority = rest.substr(0, slash);
    if (slash != std::string::npos) {
        std::string path = rest.substr(slash);
        while (!path.empty() && path.back() == '/') path.pop_back();
        ep.base_path = path;
    }
    const auto colon = authority.rfind(':');
    if (colon != std::string::npos) {
        const std::string port_str = authority.substr(colon + 1);
        int port = 0;
        auto [ptr, ec] = std::from_chars(port_str.data(), port_str.data() + port_str.size(), port);
        if (ec != std::errc{} || ptr != port_str.data() + port_str.size() || port < 1 || port > 65535) {
            throw ConfigError("grader.endpoint: invalid port in '" + std::string(url) + "'");
        }
        ep.port = port;
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) throw ConfigError("grader.endpoint: missing host in '" + std::string(url) + "'");
    for (char c : authority) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                        c == '-' || c == '_';
        if (!ok) throw ConfigError("grader.endpoint: invalid host in '" + std::string(url) + "'");
    }
    ep.host = authority;
    return ep;
}

RemoteGrader::RemoteGrader(std::string url, double timeout_seconds)
    : url_(std::move(url)), endpoint_(parse_endpoint(url_)), timeout_seconds_(timeout_seconds) {
    if (endpoint_.scheme != "http") throw ConfigError("grader.endpoint: only http:// endpoints are supported");
}

std::string RemoteGrader::identity() const {
    return "remote:" + endpoint_.to_string();
}

std::vector<RatingDistribution> RemoteGrader::grade(std::span<const std::string> texts) {
    validate_grade_request(texts);
    const std::string body = wire::encode_request(std::vector<std::string>(texts.begin(), texts.end()));
    const std::string path = endpoint_.base_path + "/v1/grade";

    // A client per call keeps concurrent in-flight requests independent.
    httplib::Client client(endpoint_.host, endpoint_.port);
    const auto secs = static_cast<time_t>(timeout_seconds_);
    const auto usecs = static_cast<time_t>((timeout_seconds_ - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Result res = client.Post(path, body, "application/json");
    if (!res) res = client.Post(path, body, "application/json");
    if (!res) throw TransportError(url_, "request failed after retry: " + httplib::to_string(res.error()));

    if (res->status != 200) {
        throw TransportError(url_, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    wire::GradeResponse reply;
    try {
        reply = wire::decode_response(res->body);
    } catch (const InputError& e) {
        throw TransportError(url_, std::string("malformed reply: ") + e.what());
    }
    if (reply.distributions.size() != texts.size()) {
        throw TransportError(url_, "malformed reply: " + std::to_string(reply.distributions.size()) +
                                       " distributions for " + std::to_string(texts.size()) + " texts");
    }
    return std::move(reply.distributions);
}

} // namespace gradeprobe
