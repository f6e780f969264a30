#include "boulescope/device_emulator.hpp"

#include "boulescope/error.hpp"

#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace boulescope {

namespace {

constexpr auto kMaxLatency = std::chrono::milliseconds(5000);
constexpr auto kPollInterval = std::chrono::milliseconds(200);

}  // namespace

Scene parse_scene(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::configuration, fmt::format("scene is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object()) {
        throw Error(ErrorCode::configuration, "scene must be a JSON object of boule id -> cm");
    }
    Scene scene;
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_number()) {
            throw Error(ErrorCode::configuration,
                        fmt::format("scene entry '{}' must be a number of centimetres", key));
        }
        scene[key] = value.get<double>();
    }
    if (scene.empty()) throw Error(ErrorCode::configuration, "scene is empty");
    return scene;
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::configuration, fmt::format("cannot open scene file {}", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scene(buffer.str());
}

DeviceEmulator::DeviceEmulator(Scene scene, DeviceOptions options)
    : scene_(std::move(scene)), options_(std::move(options)) {
    if (scene_.empty()) throw Error(ErrorCode::configuration, "device scene must not be empty");
    options_.env.validate();
    if (options_.latency < std::chrono::milliseconds(0) || options_.latency > kMaxLatency) {
        throw Error(ErrorCode::configuration, "latency must be within 0-5000 ms");
    }
}

void DeviceEmulator::set_distance(const std::string& boule_id, double true_distance_cm) {
    std::lock_guard lock(mutex_);
    scene_[boule_id] = true_distance_cm;
}

Scene DeviceEmulator::scene() const {
    std::lock_guard lock(mutex_);
    return scene_;
}

protocol::Message DeviceEmulator::handle_line(std::string_view line) {
    using namespace protocol;

    Message inbound;
    try {
        inbound = decode(line);
    } catch (const Error& e) {
        return DeviceError{"", DeviceErrorCode::malformed, e.what()};
    }
    const auto* request = std::get_if<MeasureRequest>(&inbound);
    if (request == nullptr) {
        return DeviceError{"", DeviceErrorCode::malformed, "device only accepts measure_request"};
    }

    double truth = 0.0;
    std::uint64_t sequence = 0;
    {
        std::lock_guard lock(mutex_);
        const auto it = scene_.find(request->boule_id);
        if (it == scene_.end()) {
            return DeviceError{request->request_id, DeviceErrorCode::malformed,
                               fmt::format("unknown boule '{}'", request->boule_id)};
        }
        truth = it->second;
        sequence = next_sequence_++;
    }

    try {
        const Measurement m = measure(truth, options_.env, options_.seed, sequence);
        return MeasurementReport{request->request_id, request->boule_id,
                                 round_distance_for_wire(m.distance_cm),
                                 round_echo_for_wire(m.echo_duration_us),
                                 std::string(to_string(m.environment))};
    } catch (const Error& e) {
        if (e.code() == ErrorCode::out_of_range) {
            return DeviceError{request->request_id, DeviceErrorCode::out_of_range, e.what()};
        }
        return DeviceError{request->request_id, DeviceErrorCode::malformed, e.what()};
    }
}

void DeviceEmulator::serve_connection(LineStream& stream) {
    stream.write(protocol::encode(protocol::Hello{options_.device_id, options_.firmware}));
    for (;;) {
        auto line = stream.read_line(kPollInterval);
        if (!line) {
            if (stream.at_eof() || stopping_.load()) return;
            continue;
        }
        if (line->empty()) continue;
        const auto reply = handle_line(*line);
        if (options_.latency.count() > 0) std::this_thread::sleep_for(options_.latency);
        try {
            stream.write(protocol::encode(reply));
        } catch (const Error&) {
            return;  // peer went away
        }
        served_.fetch_add(1);
    }
}

void DeviceEmulator::run(Acceptor& acceptor) {
    while (auto stream = acceptor.accept()) {
        try {
            serve_connection(*stream);
        } catch (const Error&) {
        }
        stream->close();
    }
}

BackgroundDevice::BackgroundDevice(std::shared_ptr<DeviceEmulator> device,
                                   std::shared_ptr<Acceptor> acceptor)
    : device_(std::move(device)), acceptor_(std::move(acceptor)) {
    thread_ = std::thread([this] { device_->run(*acceptor_); });
}

BackgroundDevice::~BackgroundDevice() { stop(); }

void BackgroundDevice::stop() {
    if (thread_.joinable()) {
        device_->stop();
        acceptor_->shutdown();
        thread_.join();
    }
}

}  // namespace boulescope
