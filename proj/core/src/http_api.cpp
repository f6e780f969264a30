#include "boulescope/http_api.hpp"

#include "json_codec.hpp"

#include <atomic>
#include <charconv>
#include <fmt/format.h>
#include <thread>

#include "httplib.h"

namespace boulescope {

namespace {

json view_json(const SessionView& view) {
    json j = state_view_json(view.state);
    j["session_id"] = view.session_id;
    j["device_address"] = view.device_address;
    j["event_seq"] = view.event_seq;
    return j;
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& detail) {
    send_json(res, http_status_for(code), json{{"error", to_string(code)}, {"detail", detail}});
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        json body = json::parse(req.body);
        if (!body.is_object()) throw Error(ErrorCode::malformed, "request body must be a JSON object");
        return body;
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::malformed, fmt::format("request body is not JSON: {}", e.what()));
    }
}

std::string string_member(const json& body, const char* name) {
    const auto it = body.find(name);
    if (it == body.end() || !it->is_string()) {
        throw Error(ErrorCode::malformed, fmt::format("body needs string field '{}'", name));
    }
    return it->get<std::string>();
}

std::uint64_t parse_seq(const std::string& text) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::malformed, fmt::format("bad event sequence '{}'", text));
    }
    return value;
}

/// Runs a handler body, mapping library errors onto JSON error responses.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(json{{"error", "internal"}, {"detail", e.what()}}.dump(),
                            "application/json");
        }
    };
}

}  // namespace

int http_status_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::not_found: return 404;
        case ErrorCode::configuration:
        case ErrorCode::malformed:
        case ErrorCode::unknown_message:
        case ErrorCode::out_of_range:
        case ErrorCode::out_of_model: return 400;
        case ErrorCode::out_of_turn:
        case ErrorCode::phase:
        case ErrorCode::no_measurement:
        case ErrorCode::incomplete_round: return 409;
        case ErrorCode::device_unavailable: return 502;
        case ErrorCode::measurement_failed: return 503;
        default: return 500;
    }
}

struct HttpApi::Impl {
    ScoringService& service;
    HttpApiOptions options;
    httplib::Server server;
    std::thread thread;
    std::atomic<bool> stopping{false};

    Impl(ScoringService& s, HttpApiOptions o) : service(s), options(std::move(o)) { routes(); }

    void routes() {
        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const json body = parse_body(req);
            GameConfig config;
            if (const auto it = body.find("config"); it != body.end()) config = config_from_json(*it);
            std::string device = options.default_device_address;
            if (body.contains("device")) device = string_member(body, "device");
            if (device.empty()) throw Error(ErrorCode::malformed, "no device address given");
            const auto id = service.create_session(config, device);
            send_json(res, 201, view_json(service.get_state(id)));
        }));

        server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, json{{"sessions", service.session_ids()}});
        }));

        server.Get(R"(/sessions/([^/]+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, 200, view_json(service.get_state(req.matches[1])));
                   }));

        server.Post(R"(/sessions/([^/]+)/throws)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string id = req.matches[1];
                        const auto player = string_member(parse_body(req), "player");
                        const auto reading = service.throw_boule(id, player);
                        send_json(res, 200,
                                  json{{"measurement", to_json_value(reading.measurement)},
                                       {"state", view_json(service.get_state(id))}});
                    }));

        server.Post(R"(/sessions/([^/]+)/remeasure)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string id = req.matches[1];
                        const auto boule = BouleId::parse(string_member(parse_body(req), "boule_id"));
                        const auto reading = service.remeasure(id, boule);
                        send_json(res, 200,
                                  json{{"measurement", to_json_value(reading.measurement)},
                                       {"state", view_json(service.get_state(id))}});
                    }));

        server.Post(R"(/sessions/([^/]+)/score)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string id = req.matches[1];
                        const auto result = service.score_round(id);
                        send_json(res, 200, json{{"result", to_json_value(result)},
                                                 {"state", view_json(service.get_state(id))}});
                    }));

        server.Get(R"(/sessions/([^/]+)/events)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       stream_events(req, res);
                   }));
    }

    void stream_events(const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        service.get_state(id);  // 404 before committing to a stream

        std::uint64_t after = 0;
        if (req.has_header("Last-Event-ID")) after = parse_seq(req.get_header_value("Last-Event-ID"));
        if (req.has_param("after")) after = parse_seq(req.get_param_value("after"));

        auto cursor = std::make_shared<std::uint64_t>(after);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream", [this, id, cursor](std::size_t, httplib::DataSink& sink) {
                if (stopping.load() || service.stopping()) {
                    sink.done();
                    return true;
                }
                for (const auto& event : service.events_after(id, *cursor, options.stream_poll)) {
                    const std::string frame = fmt::format("id: {}\nevent: {}\ndata: {}\n\n",
                                                          event.seq, to_string(event.kind),
                                                          event_json(event));
                    if (!sink.is_writable() || !sink.write(frame.data(), frame.size())) return false;
                    *cursor = event.seq;
                }
                return sink.is_writable();
            });
    }
};

HttpApi::HttpApi(ScoringService& service, HttpApiOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw Error(ErrorCode::configuration, fmt::format("cannot bind {}", host));
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw Error(ErrorCode::configuration, fmt::format("cannot bind {}:{}", host, port));
    }
    return port;
}

void HttpApi::serve() { impl_->server.listen_after_bind(); }

int HttpApi::start(const std::string& host, int port) {
    const int bound = bind(host, port);
    impl_->thread = std::thread([this] { serve(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpApi::stop() {
    impl_->stopping.store(true);
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace boulescope
