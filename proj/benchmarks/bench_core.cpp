#include "boulescope/bench.hpp"
#include "boulescope/game_engine.hpp"
#include "boulescope/protocol.hpp"
#include "boulescope/sensor_model.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace boulescope;

void BM_Measure(benchmark::State& state) {
    const auto env = EnvironmentConfig::outdoor();
    std::uint64_t seq = 0;
    for (auto _ : state) benchmark::DoNotOptimize(measure(10.0, env, 1, seq++));
}
BENCHMARK(BM_Measure);

void BM_EncodeReport(benchmark::State& state) {
    const protocol::Message m = protocol::MeasurementReport{"s1-17", "P2-3", 10.04, 584.9, "outdoor"};
    for (auto _ : state) benchmark::DoNotOptimize(protocol::encode(m));
}
BENCHMARK(BM_EncodeReport);

void BM_DecodeReport(benchmark::State& state) {
    const auto line = protocol::encode(protocol::MeasurementReport{"s1-17", "P2-3", 10.04, 584.9, "outdoor"});
    for (auto _ : state) benchmark::DoNotOptimize(protocol::decode(line));
}
BENCHMARK(BM_DecodeReport);

void BM_RoundScore(benchmark::State& state) {
    auto s = new_game(GameConfig{});
    const double d[] = {12.5, 14.0, 9.75, 30.2, 11.0, 9.8};
    for (double cm : d) {
        Measurement m;
        m.distance_cm = cm;
        s = record_throw(s, current_turn(s), m);
    }
    for (auto _ : state) benchmark::DoNotOptimize(round_score(s));
}
BENCHMARK(BM_RoundScore);

void BM_Table2(benchmark::State& state) {
    const auto trials = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(bench::run_table2(trials, 1, kCalibratedSigmaIndoorCm, kCalibratedSigmaOutdoorCm));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trials) * 8 * 3);
}
BENCHMARK(BM_Table2)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
