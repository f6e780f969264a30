#include "boulescope/event_log.hpp"

#include "boulescope/error.hpp"
#include "json_codec.hpp"

#include <fmt/format.h>

namespace boulescope {

namespace {

template <typename T>
const T& payload(const std::optional<T>& field, const GameEvent& e, const char* name) {
    if (!field) {
        throw Error(ErrorCode::replay,
                    fmt::format("record seq {} ({}) lacks '{}'", e.seq, to_string(e.kind), name));
    }
    return *field;
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::session_created: return "session_created";
        case EventKind::throw_recorded: return "throw_recorded";
        case EventKind::remeasured: return "remeasured";
        case EventKind::round_scored: return "round_scored";
        case EventKind::round_applied: return "round_applied";
        case EventKind::game_won: return "game_won";
    }
    return "?";
}

EventKind event_kind_from_string(std::string_view name) {
    for (auto kind : {EventKind::session_created, EventKind::throw_recorded, EventKind::remeasured,
                      EventKind::round_scored, EventKind::round_applied, EventKind::game_won}) {
        if (to_string(kind) == name) return kind;
    }
    throw Error(ErrorCode::malformed, fmt::format("unknown event kind '{}'", name));
}

std::string event_json(const GameEvent& e) {
    json j;
    j["seq"] = e.seq;
    j["at_us"] = e.at.time_since_epoch().count();
    j["kind"] = to_string(e.kind);
    json p = json::object();
    if (e.session_id) p["session_id"] = *e.session_id;
    if (e.device_address) p["device_address"] = *e.device_address;
    if (e.config) p["config"] = to_json_value(*e.config);
    if (e.player) p["player"] = *e.player;
    if (e.boule_id) p["boule_id"] = e.boule_id->str();
    if (e.measurement) p["measurement"] = to_json_value(*e.measurement);
    if (e.result) p["result"] = to_json_value(*e.result);
    if (!e.scores.empty()) p["scores"] = e.scores;
    j["payload"] = std::move(p);
    return j.dump();
}

std::string encode_event(const GameEvent& event) { return event_json(event) + '\n'; }

GameEvent decode_event(std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& err) {
        throw Error(ErrorCode::malformed, fmt::format("event is not JSON: {}", err.what()));
    }
    if (!j.is_object()) throw Error(ErrorCode::malformed, "event is not a JSON object");

    GameEvent e;
    try {
        e.seq = j.at("seq").get<std::uint64_t>();
        e.at = Timestamp(std::chrono::microseconds(j.at("at_us").get<std::int64_t>()));
        e.kind = event_kind_from_string(j.at("kind").get<std::string>());
        const auto& p = j.at("payload");
        if (p.contains("session_id")) e.session_id = p.at("session_id").get<std::string>();
        if (p.contains("device_address"))
            e.device_address = p.at("device_address").get<std::string>();
        if (p.contains("config")) e.config = config_from_json(p.at("config"));
        if (p.contains("player")) e.player = p.at("player").get<std::string>();
        if (p.contains("boule_id")) e.boule_id = BouleId::parse(p.at("boule_id").get<std::string>());
        if (p.contains("measurement")) e.measurement = measurement_from_json(p.at("measurement"));
        if (p.contains("result")) e.result = round_result_from_json(p.at("result"));
        if (p.contains("scores")) e.scores = p.at("scores").get<std::map<std::string, int>>();
    } catch (const json::exception& err) {
        throw Error(ErrorCode::malformed, fmt::format("bad event record: {}", err.what()));
    }
    return e;
}

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    out_.open(path_, std::ios::app);
    if (!out_) {
        throw Error(ErrorCode::configuration, fmt::format("cannot open log {}", path_.string()));
    }
}

void EventLog::append(const GameEvent& event) { append(std::vector<GameEvent>{event}); }

void EventLog::append(const std::vector<GameEvent>& events) {
    std::string block;
    for (const auto& e : events) block += encode_event(e);
    std::lock_guard lock(mutex_);
    out_ << block;
    out_.flush();
    if (!out_) {
        throw Error(ErrorCode::configuration, fmt::format("write to {} failed", path_.string()));
    }
}

std::vector<GameEvent> read_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::replay, fmt::format("cannot open log {}", path.string()));
    std::vector<GameEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            events.push_back(decode_event(line));
        } catch (const Error& e) {
            throw Error(ErrorCode::replay,
                        fmt::format("line {} of {}: {}", line_no, path.string(), e.what()));
        }
    }
    return events;
}

GameState replay_events(const std::vector<GameEvent>& events) {
    if (events.empty()) {
        throw Error(ErrorCode::replay, "empty log: missing session_created record");
    }

    GameState state;
    std::optional<RoundResult> scored;
    std::uint64_t expected_seq = 1;
    for (const auto& e : events) {
        if (e.seq != expected_seq) {
            throw Error(ErrorCode::replay, fmt::format("record seq {} out of order, expected seq {}",
                                                       e.seq, expected_seq));
        }
        if ((e.kind == EventKind::session_created) != (expected_seq == 1)) {
            throw Error(ErrorCode::replay,
                        fmt::format("record seq {}: session_created must be the first record and "
                                    "appear only once",
                                    e.seq));
        }
        ++expected_seq;

        try {
            switch (e.kind) {
                case EventKind::session_created:
                    state = new_game(payload(e.config, e, "config"));
                    break;
                case EventKind::throw_recorded: {
                    const auto& player = payload(e.player, e, "player");
                    const auto expected_boule = next_boule(state, player);
                    if (e.boule_id && expected_boule && *e.boule_id != *expected_boule) {
                        throw Error(ErrorCode::replay,
                                    fmt::format("throw targets {} but next boule is {}",
                                                e.boule_id->str(), expected_boule->str()));
                    }
                    state = record_throw(state, player, payload(e.measurement, e, "measurement"));
                    break;
                }
                case EventKind::remeasured:
                    state = remeasure(state, payload(e.boule_id, e, "boule_id"),
                                      payload(e.measurement, e, "measurement"));
                    break;
                case EventKind::round_scored: {
                    const auto computed = round_score(state);
                    if (computed != payload(e.result, e, "result")) {
                        throw Error(ErrorCode::replay, "logged round result disagrees with engine");
                    }
                    scored = computed;
                    break;
                }
                case EventKind::round_applied: {
                    const auto& result = payload(e.result, e, "result");
                    if (!scored || *scored != result) {
                        throw Error(ErrorCode::replay, "round_applied without matching round_scored");
                    }
                    state = apply_round(state, result);
                    scored.reset();
                    if (!e.scores.empty() && e.scores != state.cumulative_scores) {
                        throw Error(ErrorCode::replay, "logged scores disagree with engine");
                    }
                    break;
                }
                case EventKind::game_won:
                    if (state.phase != Phase::game_complete) {
                        throw Error(ErrorCode::replay, "game_won before the game is complete");
                    }
                    if (e.player && state.game_winner() != e.player) {
                        throw Error(ErrorCode::replay, "game_won names the wrong winner");
                    }
                    break;
            }
        } catch (const Error& err) {
            if (err.code() == ErrorCode::replay && std::string_view(err.what()).starts_with("record")) {
                throw;
            }
            throw Error(ErrorCode::replay, fmt::format("record seq {} ({}): {}", e.seq,
                                                       to_string(e.kind), err.what()));
        }
    }
    return state;
}

GameState replay(const std::filesystem::path& log_path) { return replay_events(read_log(log_path)); }

}  // namespace boulescope
