#pragma once

// nlohmann adapters for the domain types shared by the event log and the HTTP API.

#include "boulescope/event_log.hpp"
#include "boulescope/game_engine.hpp"
#include "boulescope/sensor_model.hpp"

#include "json.hpp"

namespace boulescope {

using nlohmann::json;

json to_json_value(const Measurement& m);
Measurement measurement_from_json(const json& j);

json to_json_value(const GameConfig& c);
GameConfig config_from_json(const json& j);

json to_json_value(const RoundResult& r);
RoundResult round_result_from_json(const json& j);

json to_json_value(const BouleRecord& b);

/// Snapshot plus the derived fields a console needs (turn, per-boule distances).
json state_view_json(const GameState& state);

}  // namespace boulescope
