#pragma once

#include <string>
#include <string_view>
#include <variant>

namespace boulescope::protocol {

struct Hello {
    std::string device_id;
    std::string firmware;

    bool operator==(const Hello&) const = default;
};

struct MeasureRequest {
    std::string request_id;
    std::string boule_id;

    bool operator==(const MeasureRequest&) const = default;
};

/// distance_cm travels with two decimals and echo_duration_us with one, so a
/// report survives a round trip only when its values sit on those grids.
struct MeasurementReport {
    std::string request_id;
    std::string boule_id;
    double distance_cm = 0.0;
    double echo_duration_us = 0.0;
    std::string environment;

    bool operator==(const MeasurementReport&) const = default;
};

enum class DeviceErrorCode { out_of_range, busy, malformed };

std::string_view to_string(DeviceErrorCode code) noexcept;

struct DeviceError {
    std::string request_id;
    DeviceErrorCode code = DeviceErrorCode::malformed;
    std::string detail;

    bool operator==(const DeviceError&) const = default;
};

using Message = std::variant<Hello, MeasureRequest, MeasurementReport, DeviceError>;

/// One compact JSON object terminated by '\n'. "type" comes first, then the
/// fields in declaration order.
std::string encode(const Message& msg);

/// Parses a single line (a trailing '\n' is accepted). Throws Error with
/// unknown_message for an unrecognised "type", malformed otherwise.
Message decode(std::string_view line);

/// Rounds onto the wire grid used by encode (2 decimals / 1 decimal).
double round_distance_for_wire(double distance_cm);
double round_echo_for_wire(double echo_duration_us);

}  // namespace boulescope::protocol
