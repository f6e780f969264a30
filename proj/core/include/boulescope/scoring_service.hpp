#pragma once

#include "boulescope/event_log.hpp"
#include "boulescope/game_engine.hpp"
#include "boulescope/transport.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

namespace boulescope {

struct ServiceOptions {
    std::filesystem::path log_dir = "boulescope-logs";
    Connector connector = tcp_connector();
    std::chrono::milliseconds device_timeout{5000};
};

struct SessionView {
    std::string session_id;
    std::string device_address;
    std::uint64_t event_seq = 0;
    GameState state;
};

struct Reading {
    Measurement measurement;
    GameState state;
};

/// Owns game sessions. Each session binds a GameState to one jack device and
/// an append-only log. Mutations on a session run one at a time; reads return
/// the latest published snapshot and never wait on the device.
class ScoringService {
public:
    explicit ScoringService(ServiceOptions options);
    ~ScoringService();

    ScoringService(const ScoringService&) = delete;
    ScoringService& operator=(const ScoringService&) = delete;

    /// Verifies the device answers with Hello before creating the session.
    std::string create_session(const GameConfig& config, const std::string& device_address);

    Reading throw_boule(const std::string& session_id, const std::string& player);
    Reading remeasure(const std::string& session_id, const BouleId& boule);
    RoundResult score_round(const std::string& session_id);

    SessionView get_state(const std::string& session_id) const;
    std::vector<std::string> session_ids() const;
    std::filesystem::path log_path(const std::string& session_id) const;

    /// Events with seq > after_seq. Waits up to `wait` when none are available
    /// yet; returns early (possibly empty) on shutdown.
    std::vector<GameEvent> events_after(const std::string& session_id, std::uint64_t after_seq,
                                        std::chrono::milliseconds wait) const;

    /// Wakes every blocked events_after caller.
    void shutdown();
    bool stopping() const { return stopping_.load(); }

private:
    struct Session;

    std::shared_ptr<Session> find(const std::string& session_id) const;
    Measurement request_measurement(Session& session, const BouleId& boule);

    ServiceOptions options_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_session_no_ = 1;
    std::atomic<bool> stopping_{false};
};

}  // namespace boulescope
