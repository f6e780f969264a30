#pragma once

#include "boulescope/sensor_model.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace boulescope {

enum class TurnMode { alternate };

struct GameConfig {
    std::array<std::string, 2> players{"P1", "P2"};
    int boules_per_player = 3;
    int target_score = 13;
    TurnMode turn_mode = TurnMode::alternate;

    void validate() const;
    int throws_per_round() const { return 2 * boules_per_player; }

    bool operator==(const GameConfig&) const = default;
};

/// A player's boule, 1-based index. Rendered as "<player>-<index>", e.g. "P1-2".
struct BouleId {
    std::string player;
    int index = 0;

    std::string str() const;
    static BouleId parse(std::string_view text);

    auto operator<=>(const BouleId&) const = default;
};

struct BouleRecord {
    BouleId id;
    std::optional<double> distance_cm;
    std::vector<Measurement> measurement_history;

    bool thrown() const { return !measurement_history.empty(); }

    bool operator==(const BouleRecord&) const = default;
};

enum class Phase { throwing, round_complete, game_complete };

std::string_view to_string(Phase phase) noexcept;
Phase phase_from_string(std::string_view name);

struct RoundResult {
    std::optional<std::string> winner;
    int points = 0;
    std::set<BouleId> winning_boules;
    std::optional<double> loser_best_cm;

    bool operator==(const RoundResult&) const = default;
};

/// Immutable snapshot of a game. Engine operations take a state and return the
/// successor; nothing is modified in place.
struct GameState {
    GameConfig config;
    int round_no = 1;
    std::map<BouleId, BouleRecord> boules;
    std::string next_player;
    /// Who threw first this round; opens the next round again after a tie.
    std::string round_opener;
    int throws_made = 0;
    Phase phase = Phase::throwing;
    std::map<std::string, int> cumulative_scores;

    const BouleRecord& boule(const BouleId& id) const;
    int unthrown_count(const std::string& player) const;
    std::optional<std::string> game_winner() const;

    bool operator==(const GameState&) const = default;
};

GameState new_game(const GameConfig& config);

GameState record_throw(const GameState& state, const std::string& player, const Measurement& m);

GameState remeasure(const GameState& state, const BouleId& id, const Measurement& m);

RoundResult round_score(const GameState& state);

GameState apply_round(const GameState& state, const RoundResult& result);

const std::string& current_turn(const GameState& state);

/// Boule the given player would throw next (lowest unthrown index).
std::optional<BouleId> next_boule(const GameState& state, const std::string& player);

/// Distances compare at 0.01 cm resolution.
std::int64_t hundredths(double distance_cm);

}  // namespace boulescope
