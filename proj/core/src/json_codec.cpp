#include "json_codec.hpp"

#include "boulescope/error.hpp"

#include <fmt/format.h>

namespace boulescope {

namespace {

const json& require(const json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end()) throw Error(ErrorCode::malformed, fmt::format("missing field '{}'", name));
    return *it;
}

template <typename T>
T require_as(const json& j, const char* name) {
    try {
        return require(j, name).get<T>();
    } catch (const json::type_error&) {
        throw Error(ErrorCode::malformed, fmt::format("field '{}' has the wrong type", name));
    }
}

}  // namespace

json to_json_value(const Measurement& m) {
    return json{{"echo_duration_us", m.echo_duration_us},
                {"distance_cm", m.distance_cm},
                {"environment", to_string(m.environment)},
                {"sequence_no", m.sequence_no},
                {"timestamp_us", m.timestamp.time_since_epoch().count()}};
}

Measurement measurement_from_json(const json& j) {
    Measurement m;
    m.echo_duration_us = require_as<double>(j, "echo_duration_us");
    m.distance_cm = require_as<double>(j, "distance_cm");
    m.environment = environment_from_string(require_as<std::string>(j, "environment"));
    m.sequence_no = require_as<std::uint64_t>(j, "sequence_no");
    m.timestamp = Timestamp(std::chrono::microseconds(require_as<std::int64_t>(j, "timestamp_us")));
    return m;
}

json to_json_value(const GameConfig& c) {
    return json{{"players", json::array({c.players[0], c.players[1]})},
                {"boules_per_player", c.boules_per_player},
                {"target_score", c.target_score},
                {"turn_mode", "alternate"}};
}

GameConfig config_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::configuration, "config must be an object");
    GameConfig c;
    try {
        if (j.contains("players")) {
            const auto& players = j.at("players");
            if (!players.is_array() || players.size() != 2) {
                throw Error(ErrorCode::configuration, "config.players must list exactly 2 labels");
            }
            c.players = {players[0].get<std::string>(), players[1].get<std::string>()};
        }
        if (j.contains("boules_per_player")) c.boules_per_player = j.at("boules_per_player").get<int>();
        if (j.contains("target_score")) c.target_score = j.at("target_score").get<int>();
        if (j.contains("turn_mode") && j.at("turn_mode").get<std::string>() != "alternate") {
            throw Error(ErrorCode::configuration, "only turn_mode 'alternate' is supported");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::configuration, fmt::format("bad config: {}", e.what()));
    }
    c.validate();
    return c;
}

json to_json_value(const RoundResult& r) {
    json boules = json::array();
    for (const auto& id : r.winning_boules) boules.push_back(id.str());
    return json{{"winner", r.winner ? json(*r.winner) : json(nullptr)},
                {"points", r.points},
                {"winning_boules", boules},
                {"loser_best_cm", r.loser_best_cm ? json(*r.loser_best_cm) : json(nullptr)}};
}

RoundResult round_result_from_json(const json& j) {
    RoundResult r;
    const auto& winner = require(j, "winner");
    if (!winner.is_null()) r.winner = require_as<std::string>(j, "winner");
    r.points = require_as<int>(j, "points");
    for (const auto& id : require(j, "winning_boules")) {
        if (!id.is_string()) throw Error(ErrorCode::malformed, "winning_boules must hold strings");
        r.winning_boules.insert(BouleId::parse(id.get<std::string>()));
    }
    const auto& loser_best = require(j, "loser_best_cm");
    if (!loser_best.is_null()) r.loser_best_cm = require_as<double>(j, "loser_best_cm");
    return r;
}

json to_json_value(const BouleRecord& b) {
    json history = json::array();
    for (const auto& m : b.measurement_history) history.push_back(to_json_value(m));
    return json{{"boule_id", b.id.str()},
                {"player", b.id.player},
                {"index", b.id.index},
                {"distance_cm", b.distance_cm ? json(*b.distance_cm) : json(nullptr)},
                {"history", history}};
}

json state_view_json(const GameState& state) {
    json boules = json::array();
    for (const auto& [id, record] : state.boules) boules.push_back(to_json_value(record));
    json scores = json::object();
    for (const auto& [player, score] : state.cumulative_scores) scores[player] = score;
    const auto winner = state.game_winner();
    return json{{"config", to_json_value(state.config)},
                {"round_no", state.round_no},
                {"phase", to_string(state.phase)},
                {"next_player", state.next_player},
                {"round_opener", state.round_opener},
                {"current_turn",
                 state.phase == Phase::throwing ? json(state.next_player) : json(nullptr)},
                {"throws_made", state.throws_made},
                {"throws_per_round", state.config.throws_per_round()},
                {"scores", scores},
                {"boules", boules},
                {"game_winner", winner ? json(*winner) : json(nullptr)}};
}

}  // namespace boulescope
