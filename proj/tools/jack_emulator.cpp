// Standalone emulated jack: serves the line protocol over TCP.

#include "boulescope/device_emulator.hpp"
#include "boulescope/error.hpp"
#include "boulescope/transport.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <thread>

#include "signals.hpp"

int main(int argc, char** argv) {
    using namespace boulescope;

    CLI::App app{"Emulated sensor jack speaking the line-delimited JSON protocol"};
    std::string listen = "127.0.0.1:7070";
    std::string scene_path;
    std::string env_name = "indoor";
    std::uint64_t seed = 1;
    int latency_ms = 0;
    std::string device_id = "jack-01";
    app.add_option("--listen", listen, "host:port to listen on (port 0 picks one)")->capture_default_str();
    app.add_option("--scene", scene_path, "JSON file mapping boule id to true distance in cm")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--env", env_name, "noise environment")
        ->check(CLI::IsMember({"indoor", "outdoor"}))
        ->capture_default_str();
    app.add_option("--seed", seed, "noise seed")->capture_default_str();
    app.add_option("--latency-ms", latency_ms, "artificial delay before each reply")
        ->check(CLI::Range(0, 5000))
        ->capture_default_str();
    app.add_option("--device-id", device_id, "id announced in hello")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    const sigset_t signals = tools::block_shutdown_signals();
    try {
        DeviceOptions options;
        options.device_id = device_id;
        options.env = EnvironmentConfig::defaults_for(environment_from_string(env_name));
        options.seed = seed;
        options.latency = std::chrono::milliseconds(latency_ms);
        auto device = std::make_shared<DeviceEmulator>(load_scene(scene_path), options);
        auto acceptor = std::make_shared<TcpAcceptor>(listen);

        fmt::print("jack {} listening on {} ({}, seed {}, {} boules)\n", device_id, acceptor->address(),
                   env_name, seed, device->scene().size());
        std::fflush(stdout);

        BackgroundDevice background(device, acceptor);
        tools::wait_for_shutdown_signal(signals);
        background.stop();
        fmt::print("served {} requests\n", device->requests_served());
    } catch (const Error& e) {
        fmt::print(stderr, "error ({}): {}\n", to_string(e.code()), e.what());
        return 2;
    }
    return 0;
}
