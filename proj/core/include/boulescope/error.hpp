#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace boulescope {

enum class ErrorCode {
    out_of_range,
    out_of_model,
    calibration_failure,
    configuration,
    out_of_turn,
    phase,
    no_measurement,
    incomplete_round,
    unknown_message,
    malformed,
    device_unavailable,
    measurement_failed,
    not_found,
    replay,
    empty_input,
    invariant_violation,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library. `code()` is what callers branch on;
/// `value()` carries the offending number for range errors.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail, std::optional<double> value = std::nullopt)
        : std::runtime_error(detail), code_(code), value_(value) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<double> value() const noexcept { return value_; }
    std::string detail() const { return what(); }

    /// Device-side failures that leave state untouched and may be retried.
    bool retryable() const noexcept {
        return code_ == ErrorCode::measurement_failed || code_ == ErrorCode::device_unavailable;
    }

private:
    ErrorCode code_;
    std::optional<double> value_;
};

}  // namespace boulescope
