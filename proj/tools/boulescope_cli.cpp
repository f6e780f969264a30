// boulescope: accuracy bench, calibration, scripted matches and the demo server.

#include "boulescope/bench.hpp"
#include "boulescope/device_emulator.hpp"
#include "boulescope/error.hpp"
#include "boulescope/http_api.hpp"
#include "boulescope/scoring_service.hpp"
#include "boulescope/sensor_model.hpp"
#include "boulescope/transport.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include "signals.hpp"

namespace {

using namespace boulescope;

struct Table2Args {
    std::uint64_t trials = 10000;
    std::uint64_t seed = 1;
    bool json = false;
    double sigma_indoor = kCalibratedSigmaIndoorCm;
    double sigma_outdoor = kCalibratedSigmaOutdoorCm;
    bool noiseless = false;
    bool calibrate = false;
    std::vector<double> extra;
};

struct CalibrateArgs {
    double target = 0.0;
    int samples = 3;
    double bias = 0.0;
    std::uint64_t trials = 10000;
    std::uint64_t seed = 1;
};

struct PlayArgs {
    std::string scene;
    std::uint64_t random_seed = 1;
    int target_score = 13;
    int boules = 3;
    std::vector<std::string> players{"P1", "P2"};
    std::string env = "indoor";
    std::uint64_t device_seed = 1;
    std::string log_dir = "boulescope-logs";
    bool http = false;
};

struct ServeArgs {
    std::string addr = "127.0.0.1:8080";
    std::string log_dir = "boulescope-logs";
    std::string device_listen = "127.0.0.1:0";
    std::string scene;
    std::string env = "indoor";
    std::uint64_t seed = 1;
    int latency_ms = 0;
};

int run_table2(const Table2Args& a) {
    bench::Table2Options o;
    o.trials = a.trials;
    o.seed = a.seed;
    o.extra_distances_cm = a.extra;
    if (a.noiseless) {
        o.indoor = EnvironmentConfig::noiseless(Environment::indoor);
        o.outdoor = EnvironmentConfig::noiseless(Environment::outdoor);
    } else {
        double indoor = a.sigma_indoor;
        double outdoor = a.sigma_outdoor;
        if (a.calibrate) {
            CalibrationOptions c;
            c.seed = a.seed;
            indoor = calibrate_sigma(bench::kReferenceMeanIndoor, c);
            c.bias_cm = o.outdoor.bias_cm;
            outdoor = calibrate_sigma(bench::kReferenceMeanOutdoor, c);
        }
        if (!(indoor > 0.0) || !(outdoor > 0.0)) {
            throw Error(ErrorCode::configuration, "sigma must be positive (use --noiseless for zero noise)");
        }
        o.indoor.noise_sigma_cm = indoor;
        o.outdoor.noise_sigma_cm = outdoor;
    }
    const auto report = bench::run_table2(o);
    fmt::print("{}", a.json ? bench::report_json(report) + "\n" : bench::format_report(report));
    return 0;
}

int run_calibrate(const CalibrateArgs& a) {
    CalibrationOptions o;
    o.samples_per_trial = a.samples;
    o.trials = a.trials;
    o.seed = a.seed;
    o.bias_cm = a.bias;
    const double sigma = calibrate_sigma(a.target, o);
    const double achieved = expected_max_abs_deviation(sigma, o);
    fmt::print("target {:.4f} cm, {} readings/trial, bias {:+.3f} cm, {} trials\n", a.target, a.samples,
               a.bias, a.trials);
    fmt::print("sigma  {:.5f} cm\n", sigma);
    fmt::print("stat   {:.5f} cm ({:+.2f}% vs target)\n", achieved, 100.0 * (achieved - a.target) / a.target);
    return 0;
}

int run_play(const PlayArgs& a) {
    bench::MatchOptions o;
    o.config.players = {a.players.at(0), a.players.at(1)};
    o.config.boules_per_player = a.boules;
    o.config.target_score = a.target_score;
    if (!a.scene.empty()) o.scripted_scenes = bench::load_scenes(a.scene);
    o.random_seed = a.random_seed;
    o.env = EnvironmentConfig::defaults_for(environment_from_string(a.env));
    o.device_seed = a.device_seed;
    o.log_dir = a.log_dir;
    o.via_http = a.http;
    const auto transcript = bench::play_match(o);
    fmt::print("{}", bench::format_transcript(transcript));
    return transcript.ok() ? 0 : 1;
}

Scene demo_scene() {
    return {{"P1-1", 12.40}, {"P1-2", 35.00}, {"P1-3", 8.75},
            {"P2-1", 10.10}, {"P2-2", 27.30}, {"P2-3", 52.60}};
}

int run_serve(const ServeArgs& a) {
    const sigset_t signals = tools::block_shutdown_signals();

    DeviceOptions device_options;
    device_options.env = EnvironmentConfig::defaults_for(environment_from_string(a.env));
    device_options.seed = a.seed;
    device_options.latency = std::chrono::milliseconds(a.latency_ms);
    auto device = std::make_shared<DeviceEmulator>(a.scene.empty() ? demo_scene() : load_scene(a.scene),
                                                   device_options);
    auto acceptor = std::make_shared<TcpAcceptor>(a.device_listen);
    BackgroundDevice background(device, acceptor);

    ServiceOptions service_options;
    service_options.log_dir = a.log_dir;
    ScoringService service(service_options);

    HttpApiOptions api_options;
    api_options.default_device_address = acceptor->address();
    HttpApi api(service, api_options);
    const auto listen = HostPort::parse(a.addr);
    const int port = api.start(listen.host, listen.port);

    fmt::print("scoring service on http://{}:{} (logs in {})\n", listen.host, port, a.log_dir);
    fmt::print("emulated jack on {} ({}, seed {})\n", acceptor->address(), a.env, a.seed);
    std::fflush(stdout);

    tools::wait_for_shutdown_signal(signals);
    service.shutdown();
    api.stop();
    background.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ultrasonic petanque scoring: bench, calibration, matches and service"};
    app.require_subcommand(1);

    Table2Args t2;
    auto* table2 = app.add_subcommand("table2", "Monte Carlo reproduction of the distance accuracy table");
    table2->add_option("--trials", t2.trials, "trials per condition")->check(CLI::PositiveNumber)->capture_default_str();
    table2->add_option("--seed", t2.seed, "random seed")->capture_default_str();
    table2->add_flag("--json", t2.json, "machine-readable output");
    table2->add_option("--sigma-indoor", t2.sigma_indoor, "indoor noise sigma (cm)")->capture_default_str();
    table2->add_option("--sigma-outdoor", t2.sigma_outdoor, "outdoor noise sigma (cm)")->capture_default_str();
    table2->add_flag("--noiseless", t2.noiseless, "zero noise and zero bias");
    table2->add_flag("--calibrate", t2.calibrate, "recalibrate both sigmas before running");
    table2->add_option("--extra-distance", t2.extra, "additional true distance (cm), repeatable");

    CalibrateArgs cal;
    auto* calibrate = app.add_subcommand("calibrate", "fit the noise sigma to a mean max-abs-deviation target");
    calibrate->add_option("--target", cal.target, "target statistic (cm)")->required();
    calibrate->add_option("--samples", cal.samples, "readings per trial")->check(CLI::PositiveNumber)->capture_default_str();
    calibrate->add_option("--bias", cal.bias, "systematic bias (cm)")->capture_default_str();
    calibrate->add_option("--trials", cal.trials, "Monte Carlo trials (>= 1000)")->capture_default_str();
    calibrate->add_option("--seed", cal.seed, "random seed")->capture_default_str();

    PlayArgs pl;
    auto* play = app.add_subcommand("play", "play a full game against an in-process jack and service");
    auto* scene_opt = play->add_option("--scene", pl.scene, "scene file: one object, or an array with one per round")
                          ->check(CLI::ExistingFile);
    play->add_option("--random-seed", pl.random_seed, "seed for random scenes")->excludes(scene_opt)->capture_default_str();
    play->add_option("--target-score", pl.target_score, "points needed to win")->capture_default_str();
    play->add_option("--boules", pl.boules, "boules per player")->capture_default_str();
    play->add_option("--players", pl.players, "the two player labels")->expected(2)->capture_default_str();
    play->add_option("--env", pl.env, "noise environment")->check(CLI::IsMember({"indoor", "outdoor"}))->capture_default_str();
    play->add_option("--device-seed", pl.device_seed, "jack noise seed")->capture_default_str();
    play->add_option("--log-dir", pl.log_dir, "session log directory")->capture_default_str();
    play->add_flag("--http", pl.http, "drive the service through its HTTP API");

    ServeArgs sv;
    auto* serve = app.add_subcommand("serve", "run the HTTP scoring service with an emulated jack");
    serve->add_option("--addr", sv.addr, "HTTP listen address")->envname("BOULESCOPE_ADDR")->capture_default_str();
    serve->add_option("--log-dir", sv.log_dir, "session log directory")->envname("BOULESCOPE_LOG_DIR")->capture_default_str();
    serve->add_option("--device-listen", sv.device_listen, "TCP address for the emulated jack")->capture_default_str();
    serve->add_option("--scene", sv.scene, "scene file for the jack")->check(CLI::ExistingFile);
    serve->add_option("--env", sv.env, "noise environment")->check(CLI::IsMember({"indoor", "outdoor"}))->capture_default_str();
    serve->add_option("--seed", sv.seed, "jack noise seed")->capture_default_str();
    serve->add_option("--latency-ms", sv.latency_ms, "jack reply delay")->check(CLI::Range(0, 5000))->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*table2) return run_table2(t2);
        if (*calibrate) return run_calibrate(cal);
        if (*play) return run_play(pl);
        if (*serve) return run_serve(sv);
    } catch (const Error& e) {
        fmt::print(stderr, "error ({}): {}\n", to_string(e.code()), e.what());
        return 2;
    }
    return 0;
}
