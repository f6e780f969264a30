#include "boulescope/bench.hpp"

#include "boulescope/error.hpp"
#include "boulescope/event_log.hpp"
#include "boulescope/http_api.hpp"
#include "boulescope/scoring_service.hpp"
#include "json_codec.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <random>
#include <sstream>

#include "httplib.h"

namespace boulescope::bench {

// ---- accuracy statistics ---------------------------------------------------

double deviation_stat(double actual_cm, std::span<const double> readings) {
    if (readings.empty()) throw Error(ErrorCode::empty_input, "deviation_stat needs at least one reading");
    double worst = 0.0;
    for (double r : readings) worst = std::max(worst, std::abs(r - actual_cm));
    return std::round(worst * 100.0) / 100.0;
}

double mean_rounded_cm(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::empty_input, "mean of no values");
    std::int64_t sum = 0;
    for (double v : values) sum += std::llround(v * 100.0);
    const auto n = static_cast<std::int64_t>(values.size());
    const std::int64_t magnitude = (2 * std::abs(sum) + n) / (2 * n);
    return static_cast<double>(sum < 0 ? -magnitude : magnitude) / 100.0;
}

namespace {

Measurement measure_with_retry(double truth, const EnvironmentConfig& env, std::uint64_t seed,
                               std::uint64_t sequence) {
    constexpr int kAttempts = 8;
    for (int attempt = 0;; ++attempt) {
        try {
            return measure(truth, env, seed, sequence + (static_cast<std::uint64_t>(attempt) << 48));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::out_of_range || attempt + 1 == kAttempts) throw;
        }
    }
}

}  // namespace

AccuracyReport run_table2(const Table2Options& options) {
    if (options.trials < 1) throw Error(ErrorCode::configuration, "trials must be at least 1");
    if (options.samples_per_trial < 1)
        throw Error(ErrorCode::configuration, "samples_per_trial must be at least 1");
    options.indoor.validate();
    options.outdoor.validate();

    std::vector<double> grid(kReferenceDistancesCm.begin(), kReferenceDistancesCm.end());
    grid.insert(grid.end(), options.extra_distances_cm.begin(), options.extra_distances_cm.end());

    AccuracyReport report;
    report.trials = options.trials;
    report.seed = options.seed;
    report.indoor = options.indoor;
    report.outdoor = options.outdoor;
    report.samples_per_trial = options.samples_per_trial;

    const auto samples = static_cast<std::uint64_t>(options.samples_per_trial);
    std::uint64_t condition = 0;
    std::vector<double> indoor_means;
    std::vector<double> outdoor_means;
    for (const auto* env : {&options.indoor, &options.outdoor}) {
        for (double actual : grid) {
            AccuracyRow row;
            row.actual_cm = actual;
            row.environment = env->kind;
            std::vector<double> readings(samples);
            double total = 0.0;
            for (std::uint64_t t = 0; t < options.trials; ++t) {
                const std::uint64_t base = (condition * options.trials + t) * samples;
                for (std::uint64_t k = 0; k < samples; ++k) {
                    readings[k] = measure_with_retry(actual, *env, options.seed, base + k).distance_cm;
                }
                total += deviation_stat(actual, readings);
                if (t == 0) {
                    row.readings = readings;
                    row.max_abs_dev_cm = deviation_stat(actual, readings);
                }
            }
            row.mean_max_abs_dev_cm = total / static_cast<double>(options.trials);
            (env == &options.indoor ? indoor_means : outdoor_means).push_back(row.mean_max_abs_dev_cm);
            report.rows.push_back(std::move(row));
            ++condition;
        }
    }

    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    report.mean_max_abs_dev_indoor_cm = mean(indoor_means);
    report.mean_max_abs_dev_outdoor_cm = mean(outdoor_means);
    return report;
}

AccuracyReport run_table2(std::uint64_t trials, std::uint64_t seed, double sigma_indoor_cm,
                          double sigma_outdoor_cm) {
    if (!(sigma_indoor_cm > 0.0) || !(sigma_outdoor_cm > 0.0)) {
        throw Error(ErrorCode::configuration,
                    "sigma must be positive; run calibrate or pass calibrated values");
    }
    Table2Options options;
    options.trials = trials;
    options.seed = seed;
    options.indoor.noise_sigma_cm = sigma_indoor_cm;
    options.outdoor.noise_sigma_cm = sigma_outdoor_cm;
    return run_table2(options);
}

std::string format_report(const AccuracyReport& report) {
    std::string out;
    out += fmt::format("Distance accuracy, {} trials of {} readings, seed {}\n", report.trials,
                       report.samples_per_trial, report.seed);
    out += fmt::format("  indoor : sigma {:.4f} cm, bias {:+.2f} cm, {:.0f} C\n",
                       report.indoor.noise_sigma_cm, report.indoor.bias_cm,
                       report.indoor.temperature_c);
    out += fmt::format("  outdoor: sigma {:.4f} cm, bias {:+.2f} cm, {:.0f} C\n\n",
                       report.outdoor.noise_sigma_cm, report.outdoor.bias_cm,
                       report.outdoor.temperature_c);
    out += fmt::format("{:<8} {:>10} {:<24} {:>10} {:>14}\n", "env", "actual cm", "sample readings",
                       "max dev", "mean max dev");
    for (const auto& row : report.rows) {
        std::string readings;
        for (double r : row.readings) readings += fmt::format("{:.2f} ", r);
        out += fmt::format("{:<8} {:>10.1f} {:<24} {:>10.2f} {:>14.4f}\n", to_string(row.environment),
                           row.actual_cm, readings, row.max_abs_dev_cm, row.mean_max_abs_dev_cm);
    }
    out += fmt::format("\nmean max-abs-deviation indoor : {:.4f} cm ({:.2f})\n",
                       report.mean_max_abs_dev_indoor_cm, report.mean_max_abs_dev_indoor_cm);
    out += fmt::format("mean max-abs-deviation outdoor: {:.4f} cm ({:.2f})\n",
                       report.mean_max_abs_dev_outdoor_cm, report.mean_max_abs_dev_outdoor_cm);
    return out;
}

std::string report_json(const AccuracyReport& report) {
    auto env_json = [](const EnvironmentConfig& env) {
        return json{{"kind", to_string(env.kind)},
                    {"temperature_c", env.temperature_c},
                    {"noise_sigma_cm", env.noise_sigma_cm},
                    {"bias_cm", env.bias_cm},
                    {"quantum_cm", env.quantum_cm}};
    };
    json rows = json::array();
    for (const auto& row : report.rows) {
        rows.push_back(json{{"actual_cm", row.actual_cm},
                            {"environment", to_string(row.environment)},
                            {"readings", row.readings},
                            {"max_abs_dev_cm", row.max_abs_dev_cm},
                            {"mean_max_abs_dev_cm", row.mean_max_abs_dev_cm}});
    }
    return json{{"rows", rows},
                {"mean_max_abs_dev_indoor_cm", report.mean_max_abs_dev_indoor_cm},
                {"mean_max_abs_dev_outdoor_cm", report.mean_max_abs_dev_outdoor_cm},
                {"trials", report.trials},
                {"samples_per_trial", report.samples_per_trial},
                {"seed", report.seed},
                {"indoor", env_json(report.indoor)},
                {"outdoor", env_json(report.outdoor)}}
        .dump(2);
}

// ---- scenes -----------------------------------------------------------------

std::vector<Scene> parse_scenes(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::configuration, fmt::format("scene file is not JSON: {}", e.what()));
    }
    std::vector<Scene> scenes;
    if (doc.is_object()) {
        scenes.push_back(parse_scene(doc.dump()));
    } else if (doc.is_array() && !doc.empty()) {
        for (const auto& item : doc) scenes.push_back(parse_scene(item.dump()));
    } else {
        throw Error(ErrorCode::configuration, "scene file must be an object or a non-empty array");
    }
    return scenes;
}

std::vector<Scene> load_scenes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::configuration, fmt::format("cannot open scene file {}", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenes(buffer.str());
}

Scene random_scene(const GameConfig& config, std::uint64_t seed, double lo_cm, double hi_cm) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo_cm, hi_cm);
    Scene scene;
    for (const auto& player : config.players) {
        for (int i = 1; i <= config.boules_per_player; ++i) {
            scene[BouleId{player, i}.str()] = quantize(dist(rng), 0.01);
        }
    }
    return scene;
}

// ---- matches ----------------------------------------------------------------

namespace {

struct TurnSnapshot {
    Phase phase = Phase::throwing;
    std::optional<std::string> turn;
    int throws_made = 0;
    int round_no = 0;
    std::map<std::string, int> scores;
};

TurnSnapshot snapshot_of(const GameState& s) {
    TurnSnapshot snap;
    snap.phase = s.phase;
    if (s.phase == Phase::throwing) snap.turn = s.next_player;
    snap.throws_made = s.throws_made;
    snap.round_no = s.round_no;
    snap.scores = s.cumulative_scores;
    return snap;
}

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string create(const GameConfig& config, const std::string& device) = 0;
    virtual Measurement throw_boule(const std::string& id, const std::string& player) = 0;
    virtual RoundResult score(const std::string& id) = 0;
    virtual TurnSnapshot snapshot(const std::string& id) = 0;
};

class DirectBackend final : public Backend {
public:
    explicit DirectBackend(ScoringService& service) : service_(service) {}

    std::string create(const GameConfig& config, const std::string& device) override {
        return service_.create_session(config, device);
    }
    Measurement throw_boule(const std::string& id, const std::string& player) override {
        return service_.throw_boule(id, player).measurement;
    }
    RoundResult score(const std::string& id) override { return service_.score_round(id); }
    TurnSnapshot snapshot(const std::string& id) override {
        return snapshot_of(service_.get_state(id).state);
    }

private:
    ScoringService& service_;
};

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(int port) : client_("127.0.0.1", port) {
        client_.set_read_timeout(std::chrono::seconds(30));
    }

    std::string create(const GameConfig& config, const std::string& device) override {
        const auto body = call("POST", "/sessions",
                               json{{"device", device}, {"config", to_json_value(config)}});
        return body.at("session_id").get<std::string>();
    }
    Measurement throw_boule(const std::string& id, const std::string& player) override {
        const auto body = call("POST", fmt::format("/sessions/{}/throws", id), json{{"player", player}});
        return measurement_from_json(body.at("measurement"));
    }
    RoundResult score(const std::string& id) override {
        const auto body = call("POST", fmt::format("/sessions/{}/score", id), json::object());
        return round_result_from_json(body.at("result"));
    }
    TurnSnapshot snapshot(const std::string& id) override {
        const auto body = call("GET", fmt::format("/sessions/{}", id), json());
        TurnSnapshot snap;
        snap.phase = phase_from_string(body.at("phase").get<std::string>());
        if (!body.at("current_turn").is_null()) snap.turn = body.at("current_turn").get<std::string>();
        snap.throws_made = body.at("throws_made").get<int>();
        snap.round_no = body.at("round_no").get<int>();
        snap.scores = body.at("scores").get<std::map<std::string, int>>();
        return snap;
    }

private:
    json call(const std::string& method, const std::string& path, const json& body) {
        httplib::Result res = method == "GET"
                                  ? client_.Get(path)
                                  : client_.Post(path, body.dump(), "application/json");
        if (!res) {
            throw Error(ErrorCode::device_unavailable,
                        fmt::format("{} {}: {}", method, path, httplib::to_string(res.error())));
        }
        json parsed = json::parse(res->body, nullptr, false);
        if (res->status >= 300) {
            const std::string code = parsed.is_object() ? parsed.value("error", "") : "";
            const std::string detail = parsed.is_object() ? parsed.value("detail", "") : res->body;
            const ErrorCode mapped = res->status == 503   ? ErrorCode::measurement_failed
                                     : res->status == 502 ? ErrorCode::device_unavailable
                                                          : ErrorCode::invariant_violation;
            throw Error(mapped, fmt::format("{} {} -> {} {}: {}", method, path, res->status, code, detail));
        }
        return parsed;
    }

    httplib::Client client_;
};

/// A reading that lands outside the sensor range is retried, as a referee would.
Measurement throw_with_retry(Backend& backend, const std::string& id, const std::string& player) {
    constexpr int kAttempts = 20;
    for (int attempt = 1;; ++attempt) {
        try {
            return backend.throw_boule(id, player);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::measurement_failed || attempt == kAttempts) throw;
        }
    }
}

}  // namespace

MatchTranscript play_match(const MatchOptions& options) {
    options.config.validate();
    const auto& config = options.config;
    auto scene_for_round = [&](int round) -> Scene {
        if (options.scripted_scenes.empty()) {
            return random_scene(config, options.random_seed * 1000003ULL + static_cast<std::uint64_t>(round));
        }
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(round - 1),
                                               options.scripted_scenes.size() - 1);
        return options.scripted_scenes[idx];
    };

    DeviceOptions device_options;
    device_options.env = options.env;
    device_options.seed = options.device_seed;
    auto device = std::make_shared<DeviceEmulator>(scene_for_round(1), device_options);
    auto acceptor = std::make_shared<TcpAcceptor>("127.0.0.1:0");
    BackgroundDevice background(device, acceptor);
    const std::string device_address = acceptor->address();

    ServiceOptions service_options;
    service_options.log_dir = options.log_dir;
    ScoringService service(service_options);

    std::unique_ptr<HttpApi> api;
    std::unique_ptr<Backend> backend;
    if (options.via_http) {
        api = std::make_unique<HttpApi>(service);
        backend = std::make_unique<HttpBackend>(api->start("127.0.0.1", 0));
    } else {
        backend = std::make_unique<DirectBackend>(service);
    }

    MatchTranscript transcript;
    auto violation = [&](std::string what) { transcript.violations.push_back(std::move(what)); };

    transcript.session_id = backend->create(config, device_address);
    const auto& id = transcript.session_id;
    std::map<std::string, int> previous_scores = backend->snapshot(id).scores;

    bool finished = false;
    for (int round = 1; round <= options.max_rounds && !finished; ++round) {
        for (const auto& [boule, cm] : scene_for_round(round)) device->set_distance(boule, cm);

        RoundRecord record;
        auto snap = backend->snapshot(id);
        record.round_no = snap.round_no;
        if (snap.round_no != round) {
            violation(fmt::format("expected round {}, service reports {}", round, snap.round_no));
        }
        for (int k = 0; k < config.throws_per_round(); ++k) {
            snap = backend->snapshot(id);
            if (snap.phase != Phase::throwing || !snap.turn) {
                violation(fmt::format("round {}: phase {} after {} throws", round,
                                      to_string(snap.phase), k));
                break;
            }
            if (!record.throw_order.empty() && *snap.turn == record.throw_order.back()) {
                violation(fmt::format("round {}: {} threw twice in a row at throw {}", round,
                                      *snap.turn, k + 1));
            }
            const auto m = throw_with_retry(*backend, id, *snap.turn);
            record.throw_order.push_back(*snap.turn);
            record.distances_cm.push_back(m.distance_cm);
        }

        snap = backend->snapshot(id);
        if (snap.phase != Phase::round_complete || snap.throws_made != config.throws_per_round()) {
            violation(fmt::format("round {}: {} throws recorded, phase {}", round, snap.throws_made,
                                  to_string(snap.phase)));
            break;
        }
        record.result = backend->score(id);
        const auto& r = record.result;
        if (r.points < 0 || r.points > config.boules_per_player || (r.winner.has_value() != (r.points > 0))) {
            violation(fmt::format("round {}: illegal result ({} points)", round, r.points));
        }

        snap = backend->snapshot(id);
        record.scores_after = snap.scores;
        for (const auto& [player, score] : snap.scores) {
            const int before = previous_scores[player];
            const int gained = r.winner == player ? r.points : 0;
            if (score != before + gained) {
                violation(fmt::format("round {}: {} score went {} -> {}", round, player, before, score));
            }
        }
        previous_scores = snap.scores;
        transcript.rounds.push_back(std::move(record));
        finished = snap.phase == Phase::game_complete;
    }

    const auto live = service.get_state(id).state;
    transcript.final_state = live;
    transcript.final_scores = live.cumulative_scores;
    transcript.winner = live.game_winner();
    transcript.log_path = service.log_path(id);

    if (!finished) {
        violation(fmt::format("no winner after {} rounds", options.max_rounds));
    } else {
        const auto at_target = std::count_if(live.cumulative_scores.begin(), live.cumulative_scores.end(),
                                             [&](const auto& kv) { return kv.second >= config.target_score; });
        if (at_target != 1) violation(fmt::format("{} players at or above target", at_target));
    }

    if (api) api->stop();
    service.shutdown();

    try {
        if (replay(transcript.log_path) != live) violation("replayed log differs from live state");
    } catch (const Error& e) {
        violation(fmt::format("replay failed: {}", e.what()));
    }
    return transcript;
}

std::string format_transcript(const MatchTranscript& t) {
    std::string out = fmt::format("session {} (log {})\n", t.session_id, t.log_path.string());
    for (const auto& round : t.rounds) {
        std::string scores;
        for (const auto& [player, score] : round.scores_after) scores += fmt::format("{}={} ", player, score);
        if (round.result.winner) {
            std::string boules;
            for (const auto& id : round.result.winning_boules) boules += id.str() + " ";
            out += fmt::format("round {:>3}: {} wins {} point(s) [{}] | {}\n", round.round_no,
                               *round.result.winner, round.result.points, boules.substr(0, boules.size() - 1),
                               scores);
        } else {
            out += fmt::format("round {:>3}: tie, no points | {}\n", round.round_no, scores);
        }
    }
    out += t.winner ? fmt::format("winner: {}\n", *t.winner) : std::string("winner: none\n");
    for (const auto& v : t.violations) out += fmt::format("VIOLATION: {}\n", v);
    return out;
}

}  // namespace boulescope::bench
