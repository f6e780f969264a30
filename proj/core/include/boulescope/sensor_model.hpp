#pragma once

#include <chrono>
#include <cstdint>
#include <string_view>

namespace boulescope {

using Timestamp = std::chrono::time_point<std::chrono::system_clock, std::chrono::microseconds>;

/// Fixed ranging characteristics of the HC-SR04 module in the jack.
struct SensorSpec {
    static constexpr double min_range_cm = 2.0;
    static constexpr double max_range_cm = 400.0;
    static constexpr double accuracy_cm = 0.3;
    static constexpr double frequency_khz = 40.0;
};

static_assert(SensorSpec::min_range_cm < SensorSpec::max_range_cm);
static_assert(SensorSpec::accuracy_cm > 0);

enum class Environment { indoor, outdoor };

std::string_view to_string(Environment env) noexcept;
Environment environment_from_string(std::string_view name);

// Sigma values fitted by calibrate_sigma against the mean max-abs-deviation
// targets (0.03 cm indoor, 0.05 cm outdoor with +0.02 cm bias), 3 samples per
// trial. Re-run `boulescope calibrate` to refresh.
inline constexpr double kCalibratedSigmaIndoorCm = 0.0256;
inline constexpr double kCalibratedSigmaOutdoorCm = 0.0362;

struct EnvironmentConfig {
    Environment kind = Environment::indoor;
    double temperature_c = 20.0;
    double noise_sigma_cm = 0.0;
    double bias_cm = 0.0;
    double quantum_cm = 0.01;

    static EnvironmentConfig indoor();
    static EnvironmentConfig outdoor();
    static EnvironmentConfig noiseless(Environment kind = Environment::indoor);
    static EnvironmentConfig defaults_for(Environment kind);

    /// Throws configuration error when sigma < 0 or quantum <= 0.
    void validate() const;

    bool operator==(const EnvironmentConfig&) const = default;
};

struct Measurement {
    double echo_duration_us = 0.0;
    double distance_cm = 0.0;
    Environment environment = Environment::indoor;
    std::uint64_t sequence_no = 0;
    Timestamp timestamp{};

    bool operator==(const Measurement&) const = default;
};

/// Speed of sound in cm/µs; valid for temperatures in [-20, 50] °C.
double speed_of_sound(double temperature_c);

/// Round-trip time of flight for a target at `true_distance_cm`.
double echo_duration(double true_distance_cm, double temperature_c);

double distance_from_echo(double echo_duration_us, double temperature_c);

/// Rounds half away from zero onto the `quantum_cm` grid.
double quantize(double value_cm, double quantum_cm);

/// Simulated reading of a target at `true_distance_cm`. Pure function of its
/// arguments; the timestamp is left at the epoch for the caller to stamp.
Measurement measure(double true_distance_cm, const EnvironmentConfig& env, std::uint64_t seed,
                    std::uint64_t sequence_no);

struct CalibrationOptions {
    std::uint64_t samples_per_trial = 3;
    std::uint64_t trials = 10000;
    std::uint64_t seed = 1;
    double bias_cm = 0.0;
    double quantum_cm = 0.01;
};

/// Expected max |reading - truth| over `samples_per_trial` readings, estimated
/// by Monte Carlo with the given noise sigma.
double expected_max_abs_deviation(double sigma_cm, const CalibrationOptions& opts);

/// Bisection over sigma in (0, 1] cm until expected_max_abs_deviation is
/// within 5% of `target_cm`.
double calibrate_sigma(double target_cm, const CalibrationOptions& opts);

}  // namespace boulescope
