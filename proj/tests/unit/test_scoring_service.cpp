#include "boulescope/error.hpp"
#include "boulescope/event_log.hpp"
#include "boulescope/scoring_service.hpp"

#include <atomic>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "support.hpp"

using namespace boulescope;
using namespace std::chrono_literals;

namespace {

Scene round_scene(const std::vector<double>& p1, const std::vector<double>& p2) {
    Scene scene;
    for (std::size_t i = 0; i < p1.size(); ++i) scene["P1-" + std::to_string(i + 1)] = p1[i];
    for (std::size_t i = 0; i < p2.size(); ++i) scene["P2-" + std::to_string(i + 1)] = p2[i];
    return scene;
}

void play_throws(ScoringService& service, const std::string& id) {
    for (;;) {
        const auto view = service.get_state(id);
        if (view.state.phase != Phase::throwing) return;
        service.throw_boule(id, current_turn(view.state));
    }
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::invariant_violation;
}

}  // namespace

TEST_SUITE("scoring_service") {

TEST_CASE("create_session logs session_created") {
    testsupport::Rig rig;
    rig.add_device("jack", round_scene({3, 5, 7}, {4, 6, 8}));
    const auto id = rig.service->create_session(GameConfig{}, "jack");
    const auto view = rig.service->get_state(id);
    CHECK(view.event_seq == 1);
    CHECK(view.device_address == "jack");
    CHECK(current_turn(view.state) == "P1");
    for (const auto& [boule, record] : view.state.boules) CHECK_FALSE(record.thrown());
    const auto events = read_log(rig.service->log_path(id));
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == EventKind::session_created);
    CHECK(events[0].session_id == id);
}

TEST_CASE("unreachable devices and unknown sessions") {
    testsupport::Rig rig;
    CHECK(code_of([&] { rig.service->create_session(GameConfig{}, "nowhere"); }) ==
          ErrorCode::device_unavailable);
    CHECK(rig.service->session_ids().empty());
    CHECK(code_of([&] { rig.service->get_state("s42"); }) == ErrorCode::not_found);
    CHECK(code_of([&] { rig.service->throw_boule("s42", "P1"); }) == ErrorCode::not_found);

    GameConfig bad;
    bad.boules_per_player = 0;
    rig.add_device("jack", round_scene({3}, {4}));
    CHECK(code_of([&] { rig.service->create_session(bad, "jack"); }) == ErrorCode::configuration);
}

TEST_CASE("first throw records the distance and flips the turn") {
    testsupport::Rig rig;
    rig.add_device("jack", round_scene({3.0, 5, 7}, {4, 6, 8}));
    const auto id = rig.service->create_session(GameConfig{}, "jack");
    const auto [m, state] = rig.service->throw_boule(id, "P1");
    CHECK(m.distance_cm == 3.00);
    CHECK(m.sequence_no == 1);
    CHECK(m.timestamp.time_since_epoch().count() > 0);
    CHECK(state.boule({"P1", 1}).distance_cm == 3.00);
    CHECK(current_turn(state) == "P2");

    const auto view = rig.service->get_state(id);
    CHECK(view.event_seq == 2);
    int present = 0;
    for (const auto& [boule, record] : view.state.boules) present += record.thrown();
    CHECK(present == 1);
}

TEST_CASE("out-of-turn throw changes nothing") {
    testsupport::Rig rig;
    auto& device = rig.add_device("jack", round_scene({3, 5, 7}, {4, 6, 8}));
    const auto id = rig.service->create_session(GameConfig{}, "jack");
    const auto before = rig.service->get_state(id);
    CHECK(code_of([&] { rig.service->throw_boule(id, "P2"); }) == ErrorCode::out_of_turn);
    const auto after = rig.service->get_state(id);
    CHECK(after.event_seq == before.event_seq);
    CHECK(after.state == before.state);
    CHECK(read_log(rig.service->log_path(id)).size() == 1);
    CHECK(device.requests_served() == 0);
}

TEST_CASE("device out_of_range is a retryable failure with state unchanged") {
    testsupport::Rig rig;
    auto& device = rig.add_device("jack", round_scene({450.0, 5, 7}, {4, 6, 8}));
    const auto id = rig.service->create_session(GameConfig{}, "jack");
    try {
        rig.service->throw_boule(id, "P1");
        FAIL("out-of-range boule must fail");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::measurement_failed);
        CHECK(e.retryable());
    }
    auto view = rig.service->get_state(id);
    CHECK(view.state.throws_made == 0);
    CHECK(view.event_seq == 1);

    // Once the boule is back in range the same throw succeeds.
    device.set_distance("P1-1", 12.0);
    rig.service->throw_boule(id, "P1");
    view = rig.service->get_state(id);
    CHECK(view.state.throws_made == 1);
    CHECK(view.state.boule({"P1", 1}).distance_cm == 12.00);
}

TEST_CASE("remeasure follows scene edits and grows history") {
    testsupport::Rig rig;
    auto& device = rig.add_device("jack", round_scene({3.0, 5, 7}, {4, 6, 8}));
    const auto id = rig.service->create_session(GameConfig{}, "jack");
    rig.service->throw_boule(id, "P1");
    CHECK(code_of([&] { rig.service->remeasure(id, {"P2", 1}); }) == ErrorCode::no_measurement);

    device.set_distance("P1-1", 25.4);
    const auto seq = rig.service->get_state(id).event_seq;
    auto r = rig.service->remeasure(id, {"P1", 1});
    CHECK(r.measurement.distance_cm == 25.40);
    r = rig.service->remeasure(id, {"P1", 1});
    const auto view = rig.service->get_state(id);
    CHECK(view.state.boule({"P1", 1}).distance_cm == 25.40);
    CHECK(view.state.boule({"P1", 1}).measurement_history.size() == 3);
    CHECK(view.event_seq == seq + 2);
    CHECK(current_turn(view.state) == "P2");
}

TEST_CASE("score_round examples") {
    SUBCASE("single closer boule") {
        testsupport::Rig rig;
        rig.add_device("jack", round_scene({3.0, 9, 10}, {4.0, 5, 6}));
        const auto id = rig.service->create_session(GameConfig{}, "jack");
        CHECK(code_of([&] { rig.service->score_round(id); }) == ErrorCode::incomplete_round);
        play_throws(*rig.service, id);
        const auto r = rig.service->score_round(id);
        CHECK(r.winner == "P1");
        CHECK(r.points == 1);
    }
    SUBCASE("two boules inside the opponent's best") {
        testsupport::Rig rig;
        rig.add_device("jack", round_scene({200, 300, 400}, {400, 400, 400}));
        const auto id = rig.service->create_session(GameConfig{}, "jack");
        play_throws(*rig.service, id);
        const auto r = rig.service->score_round(id);
        CHECK(r.winner == "P1");
        CHECK(r.points == 2);
        const auto view = rig.service->get_state(id);
        CHECK(view.state.cumulative_scores.at("P1") == 2);
        CHECK(view.state.round_no == 2);
        const auto events = read_log(rig.service->log_path(id));
        REQUIRE(events.size() == 9);
        CHECK(events[7].kind == EventKind::round_scored);
        CHECK(events[8].kind == EventKind::round_applied);
    }
    SUBCASE("tie leaves the scores alone") {
        testsupport::Rig rig;
        rig.add_device("jack", round_scene({10, 20, 30}, {10, 20, 30}));
        const auto id = rig.service->create_session(GameConfig{}, "jack");
        play_throws(*rig.service, id);
        const auto r = rig.service->score_round(id);
        CHECK_FALSE(r.winner.has_value());
        CHECK(r.points == 0);
        const auto view = rig.service->get_state(id);
        CHECK(view.state.cumulative_scores.at("P1") == 0);
        CHECK(view.state.cumulative_scores.at("P2") == 0);
    }
}

TEST_CASE("game_won is logged when the target is reached and replay matches") {
    testsupport::Rig rig;
    rig.add_device("jack", round_scene({2.5, 3, 3.5}, {10, 11, 12}));
    GameConfig cfg;
    cfg.target_score = 5;
    const auto id = rig.service->create_session(cfg, "jack");
    for (int round = 0; round < 2; ++round) {
        play_throws(*rig.service, id);
        rig.service->score_round(id);
    }
    const auto view = rig.service->get_state(id);
    CHECK(view.state.phase == Phase::game_complete);
    CHECK(view.state.game_winner() == "P1");
    CHECK(code_of([&] { rig.service->throw_boule(id, "P1"); }) == ErrorCode::phase);

    const auto events = read_log(rig.service->log_path(id));
    CHECK(events.back().kind == EventKind::game_won);
    CHECK(events.back().player == "P1");
    CHECK(events.size() == view.event_seq);
    for (std::size_t i = 0; i < events.size(); ++i) CHECK(events[i].seq == i + 1);
    CHECK(replay(rig.service->log_path(id)) == view.state);
}

TEST_CASE("sessions are isolated and ids are distinct") {
    testsupport::Rig rig;
    rig.add_device("jack", round_scene({3, 5, 7}, {4, 6, 8}));
    const auto a = rig.service->create_session(GameConfig{}, "jack");
    const auto b = rig.service->create_session(GameConfig{}, "jack");
    CHECK(a != b);
    CHECK(rig.service->log_path(a) != rig.service->log_path(b));
    const auto before = rig.service->get_state(b);
    rig.service->throw_boule(a, "P1");
    rig.service->throw_boule(a, "P2");
    CHECK(rig.service->get_state(b).state == before.state);
    CHECK(rig.service->get_state(b).event_seq == before.event_seq);
    CHECK(rig.service->get_state(a).state.throws_made == 2);
}

TEST_CASE("session ids skip logs already on disk") {
    testsupport::Rig rig;
    rig.add_device("jack", round_scene({3}, {4}));
    std::ofstream(rig.dir.path() / "s1.jsonl") << "";
    const auto id = rig.service->create_session(GameConfig{}, "jack");
    CHECK(id != "s1");
}

TEST_CASE("events_after delivers in order and wakes on new events") {
    testsupport::Rig rig;
    rig.add_device("jack", round_scene({3, 5, 7}, {4, 6, 8}));
    const auto id = rig.service->create_session(GameConfig{}, "jack");
    CHECK(rig.service->events_after(id, 0, 0ms).size() == 1);
    CHECK(rig.service->events_after(id, 1, 10ms).empty());

    std::vector<GameEvent> got;
    std::thread waiter([&] { got = rig.service->events_after(id, 1, 5s); });
    std::this_thread::sleep_for(20ms);
    rig.service->throw_boule(id, "P1");
    waiter.join();
    REQUIRE(got.size() == 1);
    CHECK(got[0].seq == 2);
    CHECK(got[0].kind == EventKind::throw_recorded);
}

TEST_CASE("concurrent readers only ever see legal snapshots") {
    testsupport::Rig rig;
    rig.add_device("jack", round_scene({3, 5, 7}, {4, 6, 8}));
    const auto id = rig.service->create_session(GameConfig{}, "jack");
    std::atomic<bool> done{false};
    std::atomic<int> torn{0};
    std::thread reader([&] {
        while (!done.load()) {
            const auto view = rig.service->get_state(id);
            int thrown = 0;
            for (const auto& [boule, record] : view.state.boules) thrown += record.thrown();
            if (thrown != view.state.throws_made || view.event_seq != 1u + view.state.throws_made) ++torn;
        }
    });
    play_throws(*rig.service, id);
    done.store(true);
    reader.join();
    CHECK(torn.load() == 0);
}

}  // TEST_SUITE
