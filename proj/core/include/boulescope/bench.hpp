#pragma once

#include "boulescope/device_emulator.hpp"
#include "boulescope/game_engine.hpp"
#include "boulescope/sensor_model.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace boulescope::bench {

// ---- accuracy statistics ---------------------------------------------------

/// max |reading - actual|, rounded half away from zero to 0.01 cm.
double deviation_stat(double actual_cm, std::span<const double> readings);

/// Arithmetic mean rounded to 0.01 cm. Inputs are taken at 0.01 cm resolution
/// so e.g. a mean of 0.0475 rounds up reliably.
double mean_rounded_cm(std::span<const double> values);

/// Reference bench readings: a ruler-measured distance and three sensor
/// readings per environment, with the printed spread column.
struct ReferenceRow {
    double actual_cm;
    std::array<double, 3> indoor;
    double indoor_printed;
    std::array<double, 3> outdoor;
    double outdoor_printed;
};

inline constexpr std::array<ReferenceRow, 4> kReferenceReadings{{
    {3.0, {3.01, 3.00, 3.00}, 0.01, {3.01, 3.03, 3.03}, 0.03},
    {5.0, {5.00, 5.00, 5.04}, 0.04, {5.05, 5.04, 5.02}, 0.05},
    {10.0, {10.04, 10.01, 10.02}, 0.04, {10.04, 10.05, 10.04}, 0.05},
    {15.0, {15.03, 15.03, 15.01}, 0.03, {15.06, 15.03, 14.99}, 0.06},
}};
inline constexpr double kReferenceMeanIndoor = 0.03;
inline constexpr double kReferenceMeanOutdoor = 0.05;
inline constexpr std::array<double, 4> kReferenceDistancesCm{3.0, 5.0, 10.0, 15.0};

struct AccuracyRow {
    double actual_cm = 0.0;
    Environment environment = Environment::indoor;
    std::vector<double> readings;       // one sample triple (first trial)
    double max_abs_dev_cm = 0.0;        // deviation_stat of `readings`
    double mean_max_abs_dev_cm = 0.0;   // mean of deviation_stat over all trials
};

struct AccuracyReport {
    std::vector<AccuracyRow> rows;
    double mean_max_abs_dev_indoor_cm = 0.0;
    double mean_max_abs_dev_outdoor_cm = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    EnvironmentConfig indoor;
    EnvironmentConfig outdoor;
    int samples_per_trial = 3;
};

struct Table2Options {
    std::uint64_t trials = 10000;
    std::uint64_t seed = 1;
    EnvironmentConfig indoor = EnvironmentConfig::indoor();
    EnvironmentConfig outdoor = EnvironmentConfig::outdoor();
    std::vector<double> extra_distances_cm;
    int samples_per_trial = 3;
};

AccuracyReport run_table2(const Table2Options& options);

/// Convenience form with default biases/temperatures; sigma must be > 0.
AccuracyReport run_table2(std::uint64_t trials, std::uint64_t seed, double sigma_indoor_cm,
                          double sigma_outdoor_cm);

std::string format_report(const AccuracyReport& report);
std::string report_json(const AccuracyReport& report);

// ---- matches ----------------------------------------------------------------

struct MatchOptions {
    GameConfig config;
    /// Per-round scenes; the last one repeats. Empty means random scenes.
    std::vector<Scene> scripted_scenes;
    std::uint64_t random_seed = 1;
    EnvironmentConfig env = EnvironmentConfig::indoor();
    std::uint64_t device_seed = 1;
    std::filesystem::path log_dir = "boulescope-logs";
    /// Drive the service over its HTTP API instead of calling it in-process.
    bool via_http = false;
    int max_rounds = 500;
};

struct RoundRecord {
    int round_no = 0;
    std::vector<std::string> throw_order;
    std::vector<double> distances_cm;  // in throw order
    RoundResult result;
    std::map<std::string, int> scores_after;
};

struct MatchTranscript {
    std::string session_id;
    std::vector<RoundRecord> rounds;
    std::optional<std::string> winner;
    std::map<std::string, int> final_scores;
    std::filesystem::path log_path;
    GameState final_state;
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

/// Plays a full game against an in-process device emulator (TCP) and scoring
/// service, checking turn order, throw counts, score bounds and replay on the
/// way. Problems are collected in `violations` rather than thrown.
MatchTranscript play_match(const MatchOptions& options);

std::string format_transcript(const MatchTranscript& transcript);

/// A JSON object (one scene) or an array of objects (one per round).
std::vector<Scene> load_scenes(const std::string& path);
std::vector<Scene> parse_scenes(std::string_view json_text);

/// Random scene for one round: every boule at a uniform distance in [lo, hi] cm.
Scene random_scene(const GameConfig& config, std::uint64_t seed, double lo_cm = 5.0,
                   double hi_cm = 300.0);

}  // namespace boulescope::bench
