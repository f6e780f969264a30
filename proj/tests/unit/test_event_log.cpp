#include "boulescope/error.hpp"
#include "boulescope/event_log.hpp"

#include <fstream>

#include "doctest.h"
#include "support.hpp"

using namespace boulescope;

namespace {

Measurement reading(double cm, std::uint64_t seq) {
    Measurement m;
    m.distance_cm = cm;
    m.echo_duration_us = echo_duration(cm, 20.0);
    m.sequence_no = seq;
    m.timestamp = Timestamp(std::chrono::microseconds(1'700'000'000'123'456LL + seq));
    return m;
}

/// Events for a full round of the default config plus scoring, built through the engine.
std::pair<std::vector<GameEvent>, GameState> scripted_round() {
    std::vector<GameEvent> events;
    GameConfig cfg;
    GameState s = new_game(cfg);
    auto push = [&](GameEvent e) {
        e.seq = events.size() + 1;
        e.at = Timestamp(std::chrono::microseconds(1'700'000'000'000'000LL + 1000 * e.seq));
        events.push_back(std::move(e));
    };
    GameEvent created;
    created.kind = EventKind::session_created;
    created.session_id = "s1";
    created.device_address = "mem:jack";
    created.config = cfg;
    push(created);

    const double distances[] = {200, 400, 300, 400, 400, 400};
    for (int i = 0; i < 6; ++i) {
        const auto player = current_turn(s);
        const auto boule = *next_boule(s, player);
        const auto m = reading(distances[i], i + 1);
        s = record_throw(s, player, m);
        GameEvent e;
        e.kind = EventKind::throw_recorded;
        e.player = player;
        e.boule_id = boule;
        e.measurement = m;
        push(e);
    }
    const auto m = reading(250.5, 7);
    s = remeasure(s, {"P1", 2}, m);
    GameEvent re;
    re.kind = EventKind::remeasured;
    re.boule_id = BouleId{"P1", 2};
    re.measurement = m;
    push(re);

    const auto result = round_score(s);
    s = apply_round(s, result);
    GameEvent scored;
    scored.kind = EventKind::round_scored;
    scored.result = result;
    push(scored);
    GameEvent applied;
    applied.kind = EventKind::round_applied;
    applied.result = result;
    applied.scores = s.cumulative_scores;
    push(applied);
    return {events, s};
}

ErrorCode replay_code(const std::vector<GameEvent>& events) {
    try {
        replay_events(events);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("replay should fail");
    return ErrorCode::invariant_violation;
}

}  // namespace

TEST_SUITE("event_log") {

TEST_CASE("events round trip through their JSON line") {
    const auto [events, state] = scripted_round();
    for (const auto& e : events) {
        const auto line = encode_event(e);
        CHECK(line.back() == '\n');
        CHECK(line.find('\n') == line.size() - 1);
        CHECK(decode_event(line) == e);
    }
}

TEST_CASE("replaying a scripted round reproduces the engine state") {
    const auto [events, state] = scripted_round();
    const auto replayed = replay_events(events);
    CHECK(replayed == state);
    CHECK(replayed.cumulative_scores.at("P1") == 2);
    CHECK(replayed.round_no == 2);
}

TEST_CASE("log file append, read and replay") {
    testsupport::TempDir dir;
    const auto path = dir.path() / "s1.jsonl";
    const auto [events, state] = scripted_round();
    {
        EventLog log(path);
        log.append(events.front());
        log.append(std::vector<GameEvent>(events.begin() + 1, events.end()));
    }
    CHECK(read_log(path) == events);
    CHECK(replay(path) == state);

    // Reopening appends rather than truncating.
    {
        EventLog log(path);
        GameEvent extra = events.back();
        extra.seq = events.size() + 1;
        extra.kind = EventKind::round_scored;
        log.append(extra);
    }
    CHECK(read_log(path).size() == events.size() + 1);
}

TEST_CASE("empty log is a replay error") {
    testsupport::TempDir dir;
    const auto path = dir.path() / "empty.jsonl";
    std::ofstream(path).close();
    try {
        replay(path);
        FAIL("replay of an empty log must fail");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::replay);
        CHECK(std::string(e.what()).find("session_created") != std::string::npos);
    }
    CHECK(replay_code({}) == ErrorCode::replay);
    CHECK_THROWS_AS(replay(dir.path() / "missing.jsonl"), Error);
}

TEST_CASE("a seq gap names the record at the gap") {
    auto events = scripted_round().first;
    events.erase(events.begin() + 3);
    try {
        replay_events(events);
        FAIL("gap must be rejected");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::replay);
        CHECK(std::string(e.what()).find("seq 5") != std::string::npos);
    }
}

TEST_CASE("illegal or inconsistent records are rejected") {
    const auto base = scripted_round().first;

    auto first_not_created = base;
    first_not_created.erase(first_not_created.begin());
    for (auto& e : first_not_created) --e.seq;
    CHECK(replay_code(first_not_created) == ErrorCode::replay);

    auto out_of_turn = base;
    std::swap(out_of_turn[1].player, out_of_turn[2].player);
    CHECK(replay_code(out_of_turn) == ErrorCode::replay);

    auto wrong_result = base;
    wrong_result[8].result->points = 3;
    CHECK(replay_code(wrong_result) == ErrorCode::replay);

    auto wrong_scores = base;
    wrong_scores[9].scores["P1"] = 5;
    CHECK(replay_code(wrong_scores) == ErrorCode::replay);

    auto early_score = std::vector<GameEvent>(base.begin(), base.begin() + 3);
    GameEvent scored;
    scored.seq = 4;
    scored.kind = EventKind::round_scored;
    scored.result = RoundResult{};
    early_score.push_back(scored);
    CHECK(replay_code(early_score) == ErrorCode::replay);
}

TEST_CASE("corrupt lines are reported") {
    testsupport::TempDir dir;
    const auto path = dir.path() / "bad.jsonl";
    const auto events = scripted_round().first;
    {
        std::ofstream out(path);
        out << encode_event(events[0]) << "{not json\n";
    }
    CHECK_THROWS_AS(replay(path), Error);
    CHECK_THROWS_AS(decode_event(R"({"seq":1,"at_us":0,"kind":"teleport","payload":{}})"), Error);
    CHECK(event_kind_from_string("game_won") == EventKind::game_won);
}

}  // TEST_SUITE
