#pragma once

#include "boulescope/game_engine.hpp"
#include "boulescope/sensor_model.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace boulescope {

enum class EventKind { session_created, throw_recorded, remeasured, round_scored, round_applied, game_won };

std::string_view to_string(EventKind kind) noexcept;
EventKind event_kind_from_string(std::string_view name);

/// One line of a session log. Which payload fields are set depends on `kind`:
///   session_created  session_id, device_address, config
///   throw_recorded   player, boule_id, measurement
///   remeasured       boule_id, measurement
///   round_scored     result
///   round_applied    result, scores (after applying)
///   game_won         player (the winner), scores
struct GameEvent {
    std::uint64_t seq = 0;
    Timestamp at{};
    EventKind kind = EventKind::session_created;

    std::optional<std::string> session_id;
    std::optional<std::string> device_address;
    std::optional<GameConfig> config;
    std::optional<std::string> player;
    std::optional<BouleId> boule_id;
    std::optional<Measurement> measurement;
    std::optional<RoundResult> result;
    std::map<std::string, int> scores;

    bool operator==(const GameEvent&) const = default;
};

/// Compact JSON, LF-terminated.
std::string encode_event(const GameEvent& event);
std::string event_json(const GameEvent& event);
GameEvent decode_event(std::string_view line);

/// Append-only, one event per line, flushed on every append.
class EventLog {
public:
    explicit EventLog(std::filesystem::path path);

    void append(const GameEvent& event);
    void append(const std::vector<GameEvent>& events);
    const std::filesystem::path& path() const { return path_; }

private:
    std::mutex mutex_;
    std::filesystem::path path_;
    std::ofstream out_;
};

std::vector<GameEvent> read_log(const std::filesystem::path& path);

/// Folds events through the engine. Throws Error{replay} naming the first
/// record that is out of sequence, unparsable, or illegal for the state.
GameState replay_events(const std::vector<GameEvent>& events);
GameState replay(const std::filesystem::path& log_path);

}  // namespace boulescope
