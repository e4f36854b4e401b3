#include "gradeprobe/grade_service.hpp"

#include <httplib.h>

#include "gradeprobe/errors.hpp"
#include "wire_format.hpp"

namespace gradeprobe {

ServiceReply handle_grade_request(std::string_view request_body, Grader& grader, std::string_view model_id) {
    std::vector<std::string> texts;
    try {
        texts = wire::decode_request(request_body);
        validate_grade_request(texts);
    } catch (const InputError& e) {
        return {400, wire::error_body(e.what())};
    }
    try {
        return {200, wire::encode_response(model_id, grader.grade(texts))};
    } catch (const InputError& e) {
        return {400, wire::error_body(e.what())};
    } catch (const std::exception& e) {
        return {500, wire::error_body(e.what())};
    }
}

struct GradeServer::Impl {
    std::shared_ptr<Grader> grader;
    std::string model_id;
    httplib::Server server;
};

GradeServer::GradeServer(std::shared_ptr<Grader> grader, std::string model_id)
    : impl_(std::make_unique<Impl>()) {
    if (!grader) throw ConfigError("GradeServer: null grader");
    impl_->grader = std::move(grader);
    impl_->model_id = std::move(model_id);

    auto* impl = impl_.get();
    impl_->server.Post("/v1/grade", [impl](const httplib::Request& req, httplib::Response& res) {
        const ServiceReply reply = handle_grade_request(req.body, *impl->grader, impl->model_id);
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
    });
    const auto method_not_allowed = [](const httplib::Request&, httplib::Response& res) {
        res.status = 405;
        res.set_header("Allow", "POST");
        res.set_content(wire::error_body("method not allowed"), "application/json");
    };
    impl_->server.Get("/v1/grade", method_not_allowed);
    impl_->server.Put("/v1/grade", method_not_allowed);
    impl_->server.Delete("/v1/grade", method_not_allowed);
    impl_->server.Patch("/v1/grade", method_not_allowed);

    // httplib defaults to SO_REUSEPORT, which would let a second server share a
    // busy port instead of failing to bind.
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
}

GradeServer::~GradeServer() {
    stop();
}

bool GradeServer::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        return port_ > 0;
    }
    if (!impl_->server.bind_to_port(host, port)) return false;
    port_ = port;
    return true;
}

bool GradeServer::listen() {
    return impl_->server.listen_after_bind();
}

void GradeServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void GradeServer::wait_until_ready() const {
    impl_->server.wait_until_ready();
}

} // namespace gradeprobe
