#include "boulescope/http_api.hpp"

#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "support.hpp"

using namespace boulescope;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

struct HttpRig : testsupport::Rig {
    std::unique_ptr<HttpApi> api;
    int port = 0;

    explicit HttpRig(Scene scene) {
        add_device("jack", std::move(scene));
        HttpApiOptions options;
        options.default_device_address = "jack";
        options.stream_poll = 50ms;
        api = std::make_unique<HttpApi>(*service, options);
        port = api->start("127.0.0.1", 0);
    }
    ~HttpRig() {
        service->shutdown();
        api->stop();
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(5, 0);
        return c;
    }

    std::pair<int, json> post(const std::string& path, const json& body = json::object()) const {
        auto res = client().Post(path, body.dump(), "application/json");
        REQUIRE(res);
        return {res->status, json::parse(res->body)};
    }
    std::pair<int, json> get(const std::string& path) const {
        auto res = client().Get(path);
        REQUIRE(res);
        return {res->status, json::parse(res->body)};
    }
};

Scene default_scene() {
    return {{"P1-1", 200}, {"P1-2", 300}, {"P1-3", 400}, {"P2-1", 400}, {"P2-2", 400}, {"P2-3", 400}};
}

struct SseFrame {
    std::uint64_t id = 0;
    std::string event;
    json data;
};

/// Reads frames from the event stream until `count` have arrived.
std::vector<SseFrame> read_stream(const HttpRig& rig, const std::string& path, std::size_t count,
                                  const httplib::Headers& headers = {}) {
    std::vector<SseFrame> frames;
    std::string buffer;
    auto c = rig.client();
    c.Get(path, headers, [&](const char* data, std::size_t len) {
        buffer.append(data, len);
        for (std::size_t end; (end = buffer.find("\n\n")) != std::string::npos;) {
            const std::string block = buffer.substr(0, end);
            buffer.erase(0, end + 2);
            SseFrame f;
            std::size_t start = 0;
            while (start < block.size()) {
                auto nl = block.find('\n', start);
                if (nl == std::string::npos) nl = block.size();
                const std::string line = block.substr(start, nl - start);
                if (line.rfind("id: ", 0) == 0) f.id = std::stoull(line.substr(4));
                if (line.rfind("event: ", 0) == 0) f.event = line.substr(7);
                if (line.rfind("data: ", 0) == 0) f.data = json::parse(line.substr(6));
                start = nl + 1;
            }
            frames.push_back(std::move(f));
        }
        return frames.size() < count;
    });
    return frames;
}

}  // namespace

TEST_SUITE("http_api") {

TEST_CASE("status codes for error kinds") {
    CHECK(http_status_for(ErrorCode::not_found) == 404);
    CHECK(http_status_for(ErrorCode::out_of_turn) == 409);
    CHECK(http_status_for(ErrorCode::incomplete_round) == 409);
    CHECK(http_status_for(ErrorCode::malformed) == 400);
    CHECK(http_status_for(ErrorCode::device_unavailable) == 502);
    CHECK(http_status_for(ErrorCode::measurement_failed) == 503);
    CHECK(http_status_for(ErrorCode::invariant_violation) == 500);
}

TEST_CASE("a full round over HTTP") {
    HttpRig rig(default_scene());
    auto [status, created] = rig.post("/sessions", json{{"config", {{"target_score", 13}}}});
    REQUIRE(status == 201);
    const std::string id = created["session_id"];
    CHECK(created["event_seq"] == 1);
    CHECK(created["current_turn"] == "P1");
    CHECK(created["boules"].size() == 6);

    auto [list_status, list] = rig.get("/sessions");
    CHECK(list_status == 200);
    CHECK(list["sessions"] == json::array({id}));

    auto [early, early_body] = rig.post("/sessions/" + id + "/score");
    CHECK(early == 409);
    CHECK(early_body["error"] == "incomplete_round");

    auto [wrong, wrong_body] = rig.post("/sessions/" + id + "/throws", {{"player", "P2"}});
    CHECK(wrong == 409);
    CHECK(wrong_body["error"] == "out_of_turn");
    CHECK(wrong_body["detail"].is_string());

    for (const char* player : {"P1", "P2", "P1", "P2", "P1", "P2"}) {
        auto [s, body] = rig.post("/sessions/" + id + "/throws", {{"player", player}});
        REQUIRE(s == 200);
        CHECK(body["measurement"]["distance_cm"].is_number());
    }
    auto [rs, re] = rig.post("/sessions/" + id + "/remeasure", {{"boule_id", "P1-2"}});
    CHECK(rs == 200);
    CHECK(re["state"]["boules"][1]["history"].size() == 2);

    auto [ss, scored] = rig.post("/sessions/" + id + "/score");
    REQUIRE(ss == 200);
    CHECK(scored["result"]["winner"] == "P1");
    CHECK(scored["result"]["points"] == 2);
    CHECK(scored["state"]["scores"]["P1"] == 2);
    CHECK(scored["state"]["round_no"] == 2);

    auto [gs, view] = rig.get("/sessions/" + id);
    CHECK(gs == 200);
    CHECK(view["event_seq"] == 10);
    CHECK(view["current_turn"] == "P1");
}

TEST_CASE("error bodies") {
    HttpRig rig(default_scene());
    auto [s404, b404] = rig.get("/sessions/nope");
    CHECK(s404 == 404);
    CHECK(b404["error"] == "not_found");

    auto res = rig.client().Post("/sessions", "{oops", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body)["error"] == "malformed");

    auto [s502, b502] = rig.post("/sessions", {{"device", "elsewhere"}});
    CHECK(s502 == 502);
    CHECK(b502["error"] == "device_unavailable");

    auto [s400, b400] = rig.post("/sessions", {{"config", {{"boules_per_player", 0}}}});
    CHECK(s400 == 400);
    CHECK(b400["error"] == "configuration");

    auto [sc, created] = rig.post("/sessions");
    const std::string id = created["session_id"];
    auto [sm, bm] = rig.post("/sessions/" + id + "/throws", json::object());
    CHECK(sm == 400);
    auto [sn, bn] = rig.post("/sessions/" + id + "/remeasure", {{"boule_id", "P1-1"}});
    CHECK(sn == 409);
    CHECK(bn["error"] == "no_measurement");
    auto [sb, bb] = rig.post("/sessions/" + id + "/remeasure", {{"boule_id", "bogus"}});
    CHECK(sb == 400);
}

TEST_CASE("event stream replays history and resumes from Last-Event-ID") {
    HttpRig rig(default_scene());
    auto [s, created] = rig.post("/sessions");
    const std::string id = created["session_id"];
    rig.post("/sessions/" + id + "/throws", {{"player", "P1"}});
    rig.post("/sessions/" + id + "/throws", {{"player", "P2"}});

    auto frames = read_stream(rig, "/sessions/" + id + "/events", 3);
    REQUIRE(frames.size() == 3);
    CHECK(frames[0].id == 1);
    CHECK(frames[0].event == "session_created");
    CHECK(frames[1].event == "throw_recorded");
    CHECK(frames[1].data["payload"]["boule_id"] == "P1-1");
    CHECK(frames[2].id == 3);
    CHECK(frames[2].data["seq"] == 3);

    frames = read_stream(rig, "/sessions/" + id + "/events", 1, {{"Last-Event-ID", "2"}});
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].id == 3);

    frames = read_stream(rig, "/sessions/" + id + "/events?after=1", 2);
    REQUIRE(frames.size() == 2);
    CHECK(frames[0].id == 2);

    // Live delivery: a subscriber waiting past the end sees the next throw.
    std::vector<SseFrame> live;
    std::thread subscriber([&] { live = read_stream(rig, "/sessions/" + id + "/events?after=3", 1); });
    std::this_thread::sleep_for(100ms);
    rig.post("/sessions/" + id + "/throws", {{"player", "P1"}});
    subscriber.join();
    REQUIRE(live.size() == 1);
    CHECK(live[0].id == 4);
    CHECK(live[0].event == "throw_recorded");

    auto res = rig.client().Get("/sessions/zzz/events");
    REQUIRE(res);
    CHECK(res->status == 404);
}

}  // TEST_SUITE
