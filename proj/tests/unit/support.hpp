#pragma once

#include "boulescope/device_emulator.hpp"
#include "boulescope/scoring_service.hpp"
#include "boulescope/transport.hpp"

#include <filesystem>
#include <memory>
#include <random>
#include <string>

namespace testsupport {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("boulescope-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Scoring service wired to in-memory devices.
struct Rig {
    TempDir dir;
    boulescope::InMemoryNetwork network;
    std::vector<std::unique_ptr<boulescope::BackgroundDevice>> devices;
    std::unique_ptr<boulescope::ScoringService> service;

    Rig() {
        boulescope::ServiceOptions options;
        options.log_dir = dir.path();
        options.connector = network.connector();
        options.device_timeout = std::chrono::milliseconds(2000);
        service = std::make_unique<boulescope::ScoringService>(options);
    }

    boulescope::DeviceEmulator& add_device(const std::string& address, boulescope::Scene scene,
                                           boulescope::DeviceOptions options = noiseless()) {
        auto device = std::make_shared<boulescope::DeviceEmulator>(std::move(scene), std::move(options));
        devices.push_back(std::make_unique<boulescope::BackgroundDevice>(device, network.listen(address)));
        return devices.back()->device();
    }

    static boulescope::DeviceOptions noiseless() {
        boulescope::DeviceOptions o;
        o.env = boulescope::EnvironmentConfig::noiseless();
        return o;
    }
};

}  // namespace testsupport
