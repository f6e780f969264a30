#include "boulescope/scoring_service.hpp"

#include "boulescope/error.hpp"
#include "boulescope/protocol.hpp"

#include <condition_variable>
#include <fmt/format.h>
#include <mutex>

namespace boulescope {

namespace {

Timestamp now_us() {
    return std::chrono::time_point_cast<std::chrono::microseconds>(std::chrono::system_clock::now());
}

/// Opens a connection and consumes the device's greeting.
std::unique_ptr<LineStream> open_device(const Connector& connector, const std::string& address,
                                        std::chrono::milliseconds timeout) {
    auto stream = connector(address);
    const auto line = stream->read_line(timeout);
    if (!line) {
        throw Error(ErrorCode::device_unavailable,
                    fmt::format("device at {} sent no hello within {} ms", address, timeout.count()));
    }
    protocol::Message greeting;
    try {
        greeting = protocol::decode(*line);
    } catch (const Error& e) {
        throw Error(ErrorCode::device_unavailable,
                    fmt::format("device at {} sent a bad greeting: {}", address, e.what()));
    }
    if (!std::holds_alternative<protocol::Hello>(greeting)) {
        throw Error(ErrorCode::device_unavailable,
                    fmt::format("device at {} did not greet with hello", address));
    }
    return stream;
}

}  // namespace

struct ScoringService::Session {
    std::string id;
    std::string device_address;
    std::unique_ptr<EventLog> log;

    std::mutex op_mutex;  // serializes mutations
    std::uint64_t request_no = 0;
    std::uint64_t measurement_no = 0;

    mutable std::mutex snapshot_mutex;
    mutable std::condition_variable events_cv;
    std::shared_ptr<const GameState> state;
    std::vector<GameEvent> events;

    std::uint64_t event_seq() const {
        std::lock_guard lock(snapshot_mutex);
        return events.size();
    }

    std::shared_ptr<const GameState> snapshot() const {
        std::lock_guard lock(snapshot_mutex);
        return state;
    }

    /// Caller holds op_mutex. Logs first; the in-memory state only moves once
    /// the log write succeeded.
    void commit(GameState next, std::vector<GameEvent> new_events) {
        std::uint64_t seq = event_seq();
        const auto at = now_us();
        for (auto& e : new_events) {
            e.seq = ++seq;
            e.at = at;
        }
        log->append(new_events);
        {
            std::lock_guard lock(snapshot_mutex);
            state = std::make_shared<const GameState>(std::move(next));
            for (auto& e : new_events) events.push_back(std::move(e));
        }
        events_cv.notify_all();
    }
};

ScoringService::ScoringService(ServiceOptions options) : options_(std::move(options)) {
    std::filesystem::create_directories(options_.log_dir);
}

ScoringService::~ScoringService() { shutdown(); }

void ScoringService::shutdown() {
    stopping_.store(true);
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, session] : sessions_) {
        // Taking the mutex orders the flag store before any waiter re-checks it.
        { std::lock_guard guard(session->snapshot_mutex); }
        session->events_cv.notify_all();
    }
}

std::shared_ptr<ScoringService::Session> ScoringService::find(const std::string& session_id) const {
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        throw Error(ErrorCode::not_found, fmt::format("no session '{}'", session_id));
    }
    return it->second;
}

std::string ScoringService::create_session(const GameConfig& config,
                                           const std::string& device_address) {
    GameState initial = new_game(config);
    open_device(options_.connector, device_address, options_.device_timeout)->close();

    auto session = std::make_shared<Session>();
    session->device_address = device_address;
    {
        std::unique_lock lock(sessions_mutex_);
        for (;;) {
            session->id = fmt::format("s{}", next_session_no_++);
            if (!std::filesystem::exists(options_.log_dir / (session->id + ".jsonl"))) break;
        }
        session->log = std::make_unique<EventLog>(options_.log_dir / (session->id + ".jsonl"));
        sessions_.emplace(session->id, session);
    }

    std::lock_guard op(session->op_mutex);
    GameEvent created;
    created.kind = EventKind::session_created;
    created.session_id = session->id;
    created.device_address = device_address;
    created.config = config;
    session->commit(std::move(initial), {created});
    return session->id;
}

Measurement ScoringService::request_measurement(Session& session, const BouleId& boule) {
    const std::string request_id = fmt::format("{}-{}", session.id, ++session.request_no);
    auto stream = open_device(options_.connector, session.device_address, options_.device_timeout);
    stream->write(protocol::encode(protocol::MeasureRequest{request_id, boule.str()}));
    const auto line = stream->read_line(options_.device_timeout);
    stream->close();
    if (!line) {
        throw Error(ErrorCode::measurement_failed,
                    fmt::format("no reply for {} within {} ms", request_id,
                                options_.device_timeout.count()));
    }

    protocol::Message reply;
    try {
        reply = protocol::decode(*line);
    } catch (const Error& e) {
        throw Error(ErrorCode::measurement_failed, fmt::format("bad device reply: {}", e.what()));
    }
    if (const auto* err = std::get_if<protocol::DeviceError>(&reply)) {
        throw Error(ErrorCode::measurement_failed,
                    fmt::format("device error {} for {}: {}", protocol::to_string(err->code),
                                boule.str(), err->detail));
    }
    const auto* report = std::get_if<protocol::MeasurementReport>(&reply);
    if (report == nullptr || report->request_id != request_id) {
        throw Error(ErrorCode::measurement_failed,
                    fmt::format("device reply does not answer request {}", request_id));
    }

    Measurement m;
    m.distance_cm = report->distance_cm;
    m.echo_duration_us = report->echo_duration_us;
    try {
        m.environment = environment_from_string(report->environment);
    } catch (const Error& e) {
        throw Error(ErrorCode::measurement_failed, e.what());
    }
    m.sequence_no = ++session.measurement_no;
    m.timestamp = now_us();
    return m;
}

Reading ScoringService::throw_boule(const std::string& session_id, const std::string& player) {
    auto session = find(session_id);
    std::lock_guard op(session->op_mutex);
    const auto state = session->snapshot();

    // Reject illegal throws before touching the device.
    if (state->phase != Phase::throwing) {
        throw Error(ErrorCode::phase,
                    fmt::format("cannot throw in phase {}", to_string(state->phase)));
    }
    if (player != current_turn(*state)) {
        throw Error(ErrorCode::out_of_turn,
                    fmt::format("it is {}'s turn, not {}'s", state->next_player, player));
    }
    const auto boule = next_boule(*state, player);
    if (!boule) throw Error(ErrorCode::out_of_turn, fmt::format("{} has no boules left", player));

    const Measurement m = request_measurement(*session, *boule);
    GameState next = record_throw(*state, player, m);

    GameEvent e;
    e.kind = EventKind::throw_recorded;
    e.player = player;
    e.boule_id = *boule;
    e.measurement = m;
    session->commit(next, {e});
    return {m, std::move(next)};
}

Reading ScoringService::remeasure(const std::string& session_id, const BouleId& boule) {
    auto session = find(session_id);
    std::lock_guard op(session->op_mutex);
    const auto state = session->snapshot();

    const auto it = state->boules.find(boule);
    if (it == state->boules.end()) {
        throw Error(ErrorCode::not_found, fmt::format("no boule {} in this game", boule.str()));
    }
    if (!it->second.thrown()) {
        throw Error(ErrorCode::no_measurement,
                    fmt::format("boule {} has not been thrown yet", boule.str()));
    }

    const Measurement m = request_measurement(*session, boule);
    GameState next = boulescope::remeasure(*state, boule, m);

    GameEvent e;
    e.kind = EventKind::remeasured;
    e.boule_id = boule;
    e.measurement = m;
    session->commit(next, {e});
    return {m, std::move(next)};
}

RoundResult ScoringService::score_round(const std::string& session_id) {
    auto session = find(session_id);
    std::lock_guard op(session->op_mutex);
    const auto state = session->snapshot();

    const RoundResult result = round_score(*state);
    GameState next = apply_round(*state, result);

    std::vector<GameEvent> events(2);
    events[0].kind = EventKind::round_scored;
    events[0].result = result;
    events[1].kind = EventKind::round_applied;
    events[1].result = result;
    events[1].scores = next.cumulative_scores;
    if (next.phase == Phase::game_complete) {
        GameEvent won;
        won.kind = EventKind::game_won;
        won.player = next.game_winner();
        won.scores = next.cumulative_scores;
        events.push_back(std::move(won));
    }
    session->commit(std::move(next), std::move(events));
    return result;
}

SessionView ScoringService::get_state(const std::string& session_id) const {
    const auto session = find(session_id);
    std::lock_guard lock(session->snapshot_mutex);
    return SessionView{session->id, session->device_address, session->events.size(),
                       *session->state};
}

std::vector<std::string> ScoringService::session_ids() const {
    std::shared_lock lock(sessions_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, session] : sessions_) ids.push_back(id);
    return ids;
}

std::filesystem::path ScoringService::log_path(const std::string& session_id) const {
    return find(session_id)->log->path();
}

std::vector<GameEvent> ScoringService::events_after(const std::string& session_id,
                                                    std::uint64_t after_seq,
                                                    std::chrono::milliseconds wait) const {
    const auto session = find(session_id);
    std::unique_lock lock(session->snapshot_mutex);
    session->events_cv.wait_for(lock, wait, [&] {
        return stopping_.load() || session->events.size() > after_seq;
    });
    std::vector<GameEvent> out;
    for (std::size_t i = after_seq; i < session->events.size(); ++i) {
        out.push_back(session->events[i]);
    }
    return out;
}

}  // namespace boulescope
