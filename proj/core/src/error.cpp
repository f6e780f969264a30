#include "boulescope/error.hpp"

namespace boulescope {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::out_of_range: return "out_of_range";
        case ErrorCode::out_of_model: return "out_of_model";
        case ErrorCode::calibration_failure: return "calibration_failure";
        case ErrorCode::configuration: return "configuration";
        case ErrorCode::out_of_turn: return "out_of_turn";
        case ErrorCode::phase: return "phase";
        case ErrorCode::no_measurement: return "no_measurement";
        case ErrorCode::incomplete_round: return "incomplete_round";
        case ErrorCode::unknown_message: return "unknown_message";
        case ErrorCode::malformed: return "malformed";
        case ErrorCode::device_unavailable: return "device_unavailable";
        case ErrorCode::measurement_failed: return "measurement_failed";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::replay: return "replay";
        case ErrorCode::empty_input: return "empty_input";
        case ErrorCode::invariant_violation: return "invariant_violation";
    }
    return "unknown";
}

}  // namespace boulescope
