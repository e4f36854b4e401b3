#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "gradeprobe/grader.hpp"

namespace gradeprobe {

// Wire protocol, POST /v1/grade
//   request:  {"texts": ["...", ...]}
//   response: {"model_id": "<string>", "distributions": [[p0,p1,p2,p3,p4], ...]}
//   200 success, 400 empty list / oversize text / malformed body, 500 grader failure.

struct ServiceReply {
    int status = 200;
    std::string body;
};

// Transport-free request handler; the HTTP server delegates to this.
[[nodiscard]] ServiceReply handle_grade_request(std::string_view request_body, Grader& grader,
                                                std::string_view model_id);

// HTTP server exposing a Grader over the wire protocol. Handles requests
// concurrently, so the grader must be safe to call from several threads.
class GradeServer {
public:
    GradeServer(std::shared_ptr<Grader> grader, std::string model_id);
    ~GradeServer();

    GradeServer(const GradeServer&) = delete;
    GradeServer& operator=(const GradeServer&) = delete;

    // Returns false when the address cannot be bound. port 0 picks a free port.
    [[nodiscard]] bool bind(const std::string& host, int port);
    [[nodiscard]] int port() const noexcept { return port_; }

    // Blocks until stop() is called from another thread or a signal handler.
    bool listen();
    void stop();

    // Blocks until the listener thread is accepting connections.
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = -1;
};

} // namespace gradeprobe
