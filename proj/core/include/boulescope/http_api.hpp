#pragma once

#include "boulescope/error.hpp"
#include "boulescope/scoring_service.hpp"

#include <chrono>
#include <memory>
#include <string>

namespace boulescope {

struct HttpApiOptions {
    /// Used by POST /sessions when the body names no device.
    std::string default_device_address;
    /// How long one event-stream poll waits before re-checking for shutdown.
    std::chrono::milliseconds stream_poll{250};
};

/// HTTP/1.1 JSON front end over a ScoringService:
///   POST /sessions                     {"device": "host:port", "config": {...}}
///   GET  /sessions                     session ids
///   GET  /sessions/{id}                state view
///   POST /sessions/{id}/throws         {"player": "P1"}
///   POST /sessions/{id}/remeasure      {"boule_id": "P1-2"}
///   POST /sessions/{id}/score
///   GET  /sessions/{id}/events         text/event-stream; honours Last-Event-ID and ?after=N
/// Errors are {"error": code, "detail": text}.
class HttpApi {
public:
    HttpApi(ScoringService& service, HttpApiOptions options = {});
    ~HttpApi();

    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    /// Binds without serving; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves on the bound socket until stop(). Blocks.
    void serve();
    /// bind + serve on a background thread. Returns the bound port.
    int start(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// HTTP status used for a library error code.
int http_status_for(ErrorCode code) noexcept;

}  // namespace boulescope
