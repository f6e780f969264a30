#include "boulescope/protocol.hpp"

#include "boulescope/error.hpp"

#include <cmath>
#include <fmt/format.h>

#include "json.hpp"

namespace boulescope::protocol {

namespace {

using nlohmann::json;

std::string quoted(const std::string& s) { return json(s).dump(); }

std::string fixed(double value, int decimals) {
    // Avoid printing "-0.00" for tiny negatives.
    if (value == 0.0) value = 0.0;
    return fmt::format("{:.{}f}", value, decimals);
}

double round_to(double value, double scale) {
    const double steps = std::round(value * scale);
    return steps / scale;
}

const json& field(const json& obj, const char* name) {
    const auto it = obj.find(name);
    if (it == obj.end()) {
        throw Error(ErrorCode::malformed, fmt::format("missing field '{}'", name));
    }
    return *it;
}

std::string string_field(const json& obj, const char* name) {
    const auto& value = field(obj, name);
    if (!value.is_string()) {
        throw Error(ErrorCode::malformed, fmt::format("field '{}' must be a string", name));
    }
    return value.get<std::string>();
}

double number_field(const json& obj, const char* name) {
    const auto& value = field(obj, name);
    if (!value.is_number()) {
        throw Error(ErrorCode::malformed, fmt::format("field '{}' must be a number", name));
    }
    return value.get<double>();
}

DeviceErrorCode device_error_code(const std::string& name) {
    if (name == "out_of_range") return DeviceErrorCode::out_of_range;
    if (name == "busy") return DeviceErrorCode::busy;
    if (name == "malformed") return DeviceErrorCode::malformed;
    throw Error(ErrorCode::malformed, fmt::format("unknown device error code '{}'", name));
}

struct Encoder {
    std::string operator()(const Hello& m) const {
        return fmt::format(R"({{"type":"hello","device_id":{},"firmware":{}}})", quoted(m.device_id),
                           quoted(m.firmware));
    }
    std::string operator()(const MeasureRequest& m) const {
        return fmt::format(R"({{"type":"measure_request","request_id":{},"boule_id":{}}})",
                           quoted(m.request_id), quoted(m.boule_id));
    }
    std::string operator()(const MeasurementReport& m) const {
        return fmt::format(
            R"({{"type":"measurement_report","request_id":{},"boule_id":{},"distance_cm":{},"echo_duration_us":{},"environment":{}}})",
            quoted(m.request_id), quoted(m.boule_id), fixed(m.distance_cm, 2),
            fixed(m.echo_duration_us, 1), quoted(m.environment));
    }
    std::string operator()(const DeviceError& m) const {
        return fmt::format(R"({{"type":"device_error","request_id":{},"code":{},"detail":{}}})",
                           quoted(m.request_id), quoted(std::string(to_string(m.code))),
                           quoted(m.detail));
    }
};

}  // namespace

std::string_view to_string(DeviceErrorCode code) noexcept {
    switch (code) {
        case DeviceErrorCode::out_of_range: return "out_of_range";
        case DeviceErrorCode::busy: return "busy";
        case DeviceErrorCode::malformed: return "malformed";
    }
    return "malformed";
}

double round_distance_for_wire(double distance_cm) { return round_to(distance_cm, 100.0); }
double round_echo_for_wire(double echo_duration_us) { return round_to(echo_duration_us, 10.0); }

std::string encode(const Message& msg) {
    std::string line = std::visit(Encoder{}, msg);
    line.push_back('\n');
    return line;
}

Message decode(std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (line.find('\n') != std::string_view::npos) {
        throw Error(ErrorCode::malformed, "frame contains an interior line feed");
    }

    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::malformed, fmt::format("not a JSON object: {}", e.what()));
    }
    if (!obj.is_object()) throw Error(ErrorCode::malformed, "frame is not a JSON object");

    const std::string type = string_field(obj, "type");
    if (type == "hello") {
        return Hello{string_field(obj, "device_id"), string_field(obj, "firmware")};
    }
    if (type == "measure_request") {
        return MeasureRequest{string_field(obj, "request_id"), string_field(obj, "boule_id")};
    }
    if (type == "measurement_report") {
        return MeasurementReport{string_field(obj, "request_id"), string_field(obj, "boule_id"),
                                 number_field(obj, "distance_cm"),
                                 number_field(obj, "echo_duration_us"),
                                 string_field(obj, "environment")};
    }
    if (type == "device_error") {
        return DeviceError{string_field(obj, "request_id"),
                           device_error_code(string_field(obj, "code")),
                           string_field(obj, "detail")};
    }
    throw Error(ErrorCode::unknown_message, fmt::format("unknown message type '{}'", type));
}

}  // namespace boulescope::protocol
