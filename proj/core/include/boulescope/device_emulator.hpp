#pragma once

#include "boulescope/protocol.hpp"
#include "boulescope/sensor_model.hpp"
#include "boulescope/transport.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <thread>

namespace boulescope {

/// Ground truth the emulated jack ranges against: boule id -> true distance (cm).
using Scene = std::map<std::string, double>;

Scene load_scene(const std::string& path);
Scene parse_scene(std::string_view json_text);

struct DeviceOptions {
    std::string device_id = "jack-01";
    std::string firmware = "emu-1.0";
    EnvironmentConfig env = EnvironmentConfig::indoor();
    std::uint64_t seed = 1;
    std::chrono::milliseconds latency{0};
};

/// Software stand-in for the sensor-bearing jack. Serves one connection at a
/// time: greets with Hello, then answers each MeasureRequest in arrival order.
class DeviceEmulator {
public:
    DeviceEmulator(Scene scene, DeviceOptions options);

    /// Accept loop. Returns once the acceptor is shut down.
    void run(Acceptor& acceptor);

    /// Serves a single connection until the peer closes it.
    void serve_connection(LineStream& stream);

    /// Reply for one inbound line; exposed for unit tests.
    protocol::Message handle_line(std::string_view line);

    void set_distance(const std::string& boule_id, double true_distance_cm);
    Scene scene() const;

    std::uint64_t requests_served() const { return served_.load(); }

    /// Makes serve_connection return at its next poll.
    void stop() { stopping_.store(true); }

private:
    mutable std::mutex mutex_;
    Scene scene_;
    DeviceOptions options_;
    std::uint64_t next_sequence_ = 0;
    std::atomic<std::uint64_t> served_{0};
    std::atomic<bool> stopping_{false};
};

/// Runs a DeviceEmulator on its own thread for the lifetime of the object.
class BackgroundDevice {
public:
    BackgroundDevice(std::shared_ptr<DeviceEmulator> device, std::shared_ptr<Acceptor> acceptor);
    ~BackgroundDevice();

    BackgroundDevice(const BackgroundDevice&) = delete;
    BackgroundDevice& operator=(const BackgroundDevice&) = delete;

    DeviceEmulator& device() { return *device_; }
    void stop();

private:
    std::shared_ptr<DeviceEmulator> device_;
    std::shared_ptr<Acceptor> acceptor_;
    std::thread thread_;
};

}  // namespace boulescope
