#include <httplib.h>

#include "abi/service.hpp"

namespace abi_engine {

using nlohmann::json;

namespace {

void send(httplib::Response &res, const Response &r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

// Parses the request body; an empty body reads as {}.
std::optional<json> parse_body(const httplib::Request &req, httplib::Response &res) {
    if (req.body.empty()) {
        return json::object();
    }
    try {
        return json::parse(req.body);
    } catch (const json::parse_error &e) {
        send(res, {400, {{"error", "MalformedRequest"}, {"message", e.what()}}});
        return std::nullopt;
    }
}

template <typename Fn> auto with_body(Fn fn) {
    return [fn](const httplib::Request &req, httplib::Response &res) {
        if (auto body = parse_body(req, res)) {
            send(res, fn(req, *body));
        }
    };
}

} // namespace

void mount_routes(httplib::Server &server, AbiService &service) {
    server.Post("/api/problems", with_body([&](const httplib::Request &, const json &body) {
                    return service.create_problem(body);
                }));
    server.Get(R"(/api/problems/([^/]+))", [&](const httplib::Request &req, httplib::Response &res) {
        send(res, service.get_problem(req.matches[1]));
    });
    server.Post("/api/sessions", with_body([&](const httplib::Request &, const json &body) {
                    return service.create_session(body);
                }));
    server.Get(R"(/api/sessions/([^/]+))", [&](const httplib::Request &req, httplib::Response &res) {
        send(res, service.get_session(req.matches[1]));
    });
    server.Post(R"(/api/sessions/([^/]+)/choice)", with_body([&](const httplib::Request &req, const json &body) {
                    return service.make_choice(req.matches[1], body);
                }));
    server.Post(R"(/api/sessions/([^/]+)/ratings)", with_body([&](const httplib::Request &req, const json &body) {
                    return service.record_ratings(req.matches[1], body);
                }));
    server.Post(R"(/api/sessions/([^/]+)/acknowledge)", [&](const httplib::Request &req, httplib::Response &res) {
        send(res, service.acknowledge(req.matches[1]));
    });
    server.Post(R"(/api/sessions/([^/]+)/agreement)", with_body([&](const httplib::Request &req, const json &body) {
                    return service.record_agreement(req.matches[1], body);
                }));
    server.Post(R"(/api/sessions/([^/]+)/revision)", with_body([&](const httplib::Request &req, const json &body) {
                    return service.revise(req.matches[1], body);
                }));
    server.Get("/api/analytics/report", [&](const httplib::Request &, httplib::Response &res) {
        send(res, service.report());
    });
    server.Get("/api/history/export", [&](const httplib::Request &, httplib::Response &res) {
        res.status = 200;
        res.set_content(service.export_history(), "application/x-ndjson");
    });
    server.Get("/api/health", [](const httplib::Request &, httplib::Response &res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });
}

} // namespace abi_engine
