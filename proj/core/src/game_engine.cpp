#include "boulescope/game_engine.hpp"

#include "boulescope/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace boulescope {

namespace {

const std::string& other_player(const GameConfig& config, const std::string& player) {
    return config.players[0] == player ? config.players[1] : config.players[0];
}

bool is_player(const GameConfig& config, const std::string& player) {
    return config.players[0] == player || config.players[1] == player;
}

std::map<BouleId, BouleRecord> empty_boules(const GameConfig& config) {
    std::map<BouleId, BouleRecord> boules;
    for (const auto& player : config.players) {
        for (int i = 1; i <= config.boules_per_player; ++i) {
            BouleId id{player, i};
            boules.emplace(id, BouleRecord{id, std::nullopt, {}});
        }
    }
    return boules;
}

void require_phase(const GameState& state, Phase expected, std::string_view op) {
    if (state.phase != expected) {
        throw Error(ErrorCode::phase, fmt::format("{} requires phase {}, game is in phase {}", op,
                                                  to_string(expected), to_string(state.phase)));
    }
}

}  // namespace

void GameConfig::validate() const {
    if (boules_per_player < 1)
        throw Error(ErrorCode::configuration, "boules_per_player must be at least 1");
    if (target_score < 1) throw Error(ErrorCode::configuration, "target_score must be at least 1");
    if (players[0].empty() || players[1].empty())
        throw Error(ErrorCode::configuration, "player labels must be non-empty");
    if (players[0] == players[1])
        throw Error(ErrorCode::configuration,
                    fmt::format("players must be distinct, got '{}' twice", players[0]));
}

std::string BouleId::str() const { return fmt::format("{}-{}", player, index); }

BouleId BouleId::parse(std::string_view text) {
    const auto dash = text.rfind('-');
    if (dash == std::string_view::npos || dash == 0 || dash + 1 == text.size()) {
        throw Error(ErrorCode::malformed, fmt::format("bad boule id '{}'", text));
    }
    int index = 0;
    const auto digits = text.substr(dash + 1);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || index < 1) {
        throw Error(ErrorCode::malformed, fmt::format("bad boule index in '{}'", text));
    }
    return BouleId{std::string(text.substr(0, dash)), index};
}

std::string_view to_string(Phase phase) noexcept {
    switch (phase) {
        case Phase::throwing: return "throwing";
        case Phase::round_complete: return "round_complete";
        case Phase::game_complete: return "game_complete";
    }
    return "?";
}

Phase phase_from_string(std::string_view name) {
    if (name == "throwing") return Phase::throwing;
    if (name == "round_complete") return Phase::round_complete;
    if (name == "game_complete") return Phase::game_complete;
    throw Error(ErrorCode::malformed, fmt::format("unknown phase '{}'", name));
}

const BouleRecord& GameState::boule(const BouleId& id) const {
    const auto it = boules.find(id);
    if (it == boules.end()) throw Error(ErrorCode::not_found, fmt::format("no boule {}", id.str()));
    return it->second;
}

int GameState::unthrown_count(const std::string& player) const {
    return static_cast<int>(std::count_if(boules.begin(), boules.end(), [&](const auto& kv) {
        return kv.first.player == player && !kv.second.thrown();
    }));
}

std::optional<std::string> GameState::game_winner() const {
    for (const auto& [player, score] : cumulative_scores) {
        if (score >= config.target_score) return player;
    }
    return std::nullopt;
}

std::int64_t hundredths(double distance_cm) { return std::llround(distance_cm * 100.0); }

GameState new_game(const GameConfig& config) {
    config.validate();
    GameState state;
    state.config = config;
    state.round_no = 1;
    state.boules = empty_boules(config);
    state.next_player = config.players[0];
    state.round_opener = config.players[0];
    state.throws_made = 0;
    state.phase = Phase::throwing;
    for (const auto& player : config.players) state.cumulative_scores[player] = 0;
    return state;
}

std::optional<BouleId> next_boule(const GameState& state, const std::string& player) {
    for (int i = 1; i <= state.config.boules_per_player; ++i) {
        BouleId id{player, i};
        const auto it = state.boules.find(id);
        if (it != state.boules.end() && !it->second.thrown()) return id;
    }
    return std::nullopt;
}

GameState record_throw(const GameState& state, const std::string& player, const Measurement& m) {
    require_phase(state, Phase::throwing, "record_throw");
    if (!is_player(state.config, player)) {
        throw Error(ErrorCode::out_of_turn, fmt::format("'{}' is not a player in this game", player));
    }
    if (player != state.next_player) {
        throw Error(ErrorCode::out_of_turn,
                    fmt::format("it is {}'s turn, not {}'s", state.next_player, player));
    }
    const auto id = next_boule(state, player);
    if (!id) {
        throw Error(ErrorCode::out_of_turn, fmt::format("{} has no boules left", player));
    }

    GameState next = state;
    auto& record = next.boules.at(*id);
    record.measurement_history.push_back(m);
    record.distance_cm = m.distance_cm;
    next.throws_made += 1;

    const auto& other = other_player(next.config, player);
    if (next.unthrown_count(other) > 0) {
        next.next_player = other;
    } else if (next.unthrown_count(player) > 0) {
        next.next_player = player;
    }
    if (next.throws_made == next.config.throws_per_round()) next.phase = Phase::round_complete;
    return next;
}

GameState remeasure(const GameState& state, const BouleId& id, const Measurement& m) {
    const auto it = state.boules.find(id);
    if (it == state.boules.end()) {
        throw Error(ErrorCode::not_found, fmt::format("no boule {}", id.str()));
    }
    if (!it->second.thrown()) {
        throw Error(ErrorCode::no_measurement,
                    fmt::format("boule {} has not been thrown yet", id.str()));
    }
    GameState next = state;
    auto& record = next.boules.at(id);
    record.measurement_history.push_back(m);
    record.distance_cm = m.distance_cm;
    return next;
}

RoundResult round_score(const GameState& state) {
    if (state.phase == Phase::game_complete) require_phase(state, Phase::round_complete, "round_score");
    if (state.phase != Phase::round_complete) {
        throw Error(ErrorCode::incomplete_round,
                    fmt::format("round {} has {} of {} throws recorded", state.round_no,
                                state.throws_made, state.config.throws_per_round()));
    }

    constexpr auto none = std::numeric_limits<std::int64_t>::max();
    std::map<std::string, std::int64_t> best;
    for (const auto& player : state.config.players) best[player] = none;
    for (const auto& [id, record] : state.boules) {
        if (!record.distance_cm) {
            throw Error(ErrorCode::incomplete_round, fmt::format("boule {} has no distance", id.str()));
        }
        best[id.player] = std::min(best[id.player], hundredths(*record.distance_cm));
    }

    const auto& a = state.config.players[0];
    const auto& b = state.config.players[1];
    RoundResult result;
    if (best[a] == best[b]) return result;

    const std::string& winner = best[a] < best[b] ? a : b;
    const std::string& loser = other_player(state.config, winner);
    const std::int64_t loser_best = best[loser];
    result.winner = winner;
    result.loser_best_cm = static_cast<double>(loser_best) / 100.0;
    for (const auto& [id, record] : state.boules) {
        if (id.player == winner && hundredths(*record.distance_cm) < loser_best) {
            result.winning_boules.insert(id);
        }
    }
    result.points = static_cast<int>(result.winning_boules.size());
    return result;
}

GameState apply_round(const GameState& state, const RoundResult& result) {
    require_phase(state, Phase::round_complete, "apply_round");
    if (result.winner.has_value() != (result.points > 0)) {
        throw Error(ErrorCode::invariant_violation, "round result with winner must carry points");
    }
    if (result.points < 0 || result.points > state.config.boules_per_player) {
        throw Error(ErrorCode::invariant_violation,
                    fmt::format("round points {} out of bounds", result.points));
    }

    GameState next = state;
    if (result.winner) {
        if (!is_player(state.config, *result.winner)) {
            throw Error(ErrorCode::invariant_violation,
                        fmt::format("round winner '{}' is not a player", *result.winner));
        }
        next.cumulative_scores[*result.winner] += result.points;
    }
    if (next.game_winner()) {
        next.phase = Phase::game_complete;
        return next;
    }

    next.round_no += 1;
    next.boules = empty_boules(next.config);
    next.throws_made = 0;
    next.phase = Phase::throwing;
    if (result.winner) next.next_player = *result.winner;
    else next.next_player = state.round_opener;
    next.round_opener = next.next_player;
    return next;
}

const std::string& current_turn(const GameState& state) {
    require_phase(state, Phase::throwing, "current_turn");
    return state.next_player;
}

}  // namespace boulescope
