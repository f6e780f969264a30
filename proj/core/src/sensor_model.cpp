#include "boulescope/sensor_model.hpp"

#include "boulescope/error.hpp"
#include "rng.hpp"

#include <cmath>
#include <fmt/format.h>

namespace boulescope {

namespace {

constexpr double kMinTemperatureC = -20.0;
constexpr double kMaxTemperatureC = 50.0;

// Truth used during calibration; any on-grid value works.
constexpr double kCalibrationTruthCm = 10.0;

void check_in_range(double distance_cm) {
    if (!(distance_cm >= SensorSpec::min_range_cm && distance_cm <= SensorSpec::max_range_cm)) {
        throw Error(ErrorCode::out_of_range,
                    fmt::format("distance {} cm outside sensor range [{}, {}] cm", distance_cm,
                                SensorSpec::min_range_cm, SensorSpec::max_range_cm),
                    distance_cm);
    }
}

double noisy_reading(double true_distance_cm, double sigma_cm, double bias_cm, double quantum_cm,
                     std::uint64_t seed, std::uint64_t sequence_no) {
    double noise = 0.0;
    if (sigma_cm > 0.0) {
        SplitMix64 rng(derive_seed(seed, sequence_no));
        noise = sigma_cm * truncated_standard_normal(rng, 2.0);
    }
    return quantize(true_distance_cm + bias_cm + noise, quantum_cm);
}

}  // namespace

std::string_view to_string(Environment env) noexcept {
    return env == Environment::indoor ? "indoor" : "outdoor";
}

Environment environment_from_string(std::string_view name) {
    if (name == "indoor") return Environment::indoor;
    if (name == "outdoor") return Environment::outdoor;
    throw Error(ErrorCode::configuration, fmt::format("unknown environment '{}'", name));
}

EnvironmentConfig EnvironmentConfig::indoor() {
    return {Environment::indoor, 20.0, kCalibratedSigmaIndoorCm, 0.0, 0.01};
}

EnvironmentConfig EnvironmentConfig::outdoor() {
    return {Environment::outdoor, 30.0, kCalibratedSigmaOutdoorCm, 0.02, 0.01};
}

EnvironmentConfig EnvironmentConfig::noiseless(Environment kind) {
    EnvironmentConfig env = defaults_for(kind);
    env.noise_sigma_cm = 0.0;
    env.bias_cm = 0.0;
    return env;
}

EnvironmentConfig EnvironmentConfig::defaults_for(Environment kind) {
    return kind == Environment::indoor ? indoor() : outdoor();
}

void EnvironmentConfig::validate() const {
    if (!(noise_sigma_cm >= 0.0))
        throw Error(ErrorCode::configuration, "noise sigma must be non-negative");
    if (!(quantum_cm > 0.0)) throw Error(ErrorCode::configuration, "quantum must be positive");
}

double speed_of_sound(double temperature_c) {
    if (!(temperature_c >= kMinTemperatureC && temperature_c <= kMaxTemperatureC)) {
        throw Error(ErrorCode::out_of_model,
                    fmt::format("temperature {} °C outside model range [{}, {}]", temperature_c,
                                kMinTemperatureC, kMaxTemperatureC),
                    temperature_c);
    }
    const double metres_per_second = 331.3 + 0.606 * temperature_c;
    return metres_per_second * 1e-4;  // m/s -> cm/µs
}

double echo_duration(double true_distance_cm, double temperature_c) {
    check_in_range(true_distance_cm);
    return 2.0 * true_distance_cm / speed_of_sound(temperature_c);
}

double distance_from_echo(double echo_duration_us, double temperature_c) {
    if (!(echo_duration_us > 0.0)) {
        throw Error(ErrorCode::out_of_range, "echo duration must be positive", echo_duration_us);
    }
    const double distance = echo_duration_us * speed_of_sound(temperature_c) / 2.0;
    check_in_range(distance);
    return distance;
}

double quantize(double value_cm, double quantum_cm) {
    const double steps = std::round(value_cm / quantum_cm);
    // Divide by an integral inverse when there is one so that e.g. 301 steps of
    // 0.01 land on the same double as the decimal literal 3.01.
    const double inverse = 1.0 / quantum_cm;
    const double rounded_inverse = std::round(inverse);
    if (rounded_inverse >= 1.0 && std::abs(inverse - rounded_inverse) < 1e-9) {
        return steps / rounded_inverse;
    }
    return steps * quantum_cm;
}

Measurement measure(double true_distance_cm, const EnvironmentConfig& env, std::uint64_t seed,
                    std::uint64_t sequence_no) {
    env.validate();
    check_in_range(true_distance_cm);
    const double reading = noisy_reading(true_distance_cm, env.noise_sigma_cm, env.bias_cm,
                                         env.quantum_cm, seed, sequence_no);
    check_in_range(reading);

    Measurement m;
    m.distance_cm = reading;
    m.echo_duration_us = echo_duration(reading, env.temperature_c);
    m.environment = env.kind;
    m.sequence_no = sequence_no;
    return m;
}

double expected_max_abs_deviation(double sigma_cm, const CalibrationOptions& opts) {
    if (opts.samples_per_trial < 1 || opts.trials < 1) {
        throw Error(ErrorCode::configuration, "samples_per_trial and trials must be >= 1");
    }
    double total = 0.0;
    std::uint64_t sequence = 0;
    for (std::uint64_t t = 0; t < opts.trials; ++t) {
        double worst = 0.0;
        for (std::uint64_t s = 0; s < opts.samples_per_trial; ++s) {
            const double reading = noisy_reading(kCalibrationTruthCm, sigma_cm, opts.bias_cm,
                                                 opts.quantum_cm, opts.seed, sequence++);
            worst = std::max(worst, std::abs(reading - kCalibrationTruthCm));
        }
        total += worst;
    }
    return total / static_cast<double>(opts.trials);
}

double calibrate_sigma(double target_cm, const CalibrationOptions& opts) {
    if (opts.trials < 1000) {
        throw Error(ErrorCode::configuration, "calibration needs at least 1000 trials");
    }
    if (!(target_cm > 0.0)) {
        throw Error(ErrorCode::calibration_failure,
                    fmt::format("target {} cm is not reachable with sigma in (0, 1]", target_cm),
                    target_cm);
    }

    // Every evaluation reuses the same seeds, so the estimate is a deterministic
    // function of sigma and bisection converges cleanly.
    double lo = 0.0;
    double hi = 1.0;
    if (expected_max_abs_deviation(hi, opts) < target_cm) {
        throw Error(ErrorCode::calibration_failure,
                    fmt::format("target {} cm exceeds the deviation at sigma = 1 cm", target_cm),
                    target_cm);
    }
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        if (expected_max_abs_deviation(mid, opts) < target_cm) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    const double sigma = 0.5 * (lo + hi);
    const double achieved = expected_max_abs_deviation(sigma, opts);
    if (sigma <= 0.0 || std::abs(achieved - target_cm) > 0.05 * target_cm) {
        throw Error(ErrorCode::calibration_failure,
                    fmt::format("closest sigma {} cm gives {} cm, not within 5% of {} cm", sigma,
                                achieved, target_cm),
                    target_cm);
    }
    return sigma;
}

}  // namespace boulescope
