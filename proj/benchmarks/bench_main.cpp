#include <benchmark/benchmark.h>

#include "propcast/baselines.hpp"
#include "propcast/event_io.hpp"
#include "propcast/kalman.hpp"
#include "propcast/rpm.hpp"
#include "propcast/synth.hpp"

using namespace propcast;

namespace {

const synth::ScenarioOutput& hover_sequence() {
    static const synth::ScenarioOutput out = [] {
        synth::Scenario sc;
        sc.duration_s = 2.0;
        sc.rpm = synth::RpmProfile::constant(9000);
        sc.airframe_rate = 40;
        sc.noise_rate = 2;
        return synth::generate_scenario(sc);
    }();
    return out;
}

void BM_ParseBinary(benchmark::State& state) {
    const std::string bytes = write_event_binary(hover_sequence().events);
    for (auto _ : state) benchmark::DoNotOptimize(parse_event_binary(bytes));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(hover_sequence().events.size()));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_ParseBinary);

void BM_ParseCsv(benchmark::State& state) {
    const std::string text = write_event_csv(hover_sequence().events);
    for (auto _ : state) benchmark::DoNotOptimize(parse_event_csv(text));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(hover_sequence().events.size()));
}
BENCHMARK(BM_ParseCsv);

void BM_WindowEvents(benchmark::State& state) {
    const auto& seq = hover_sequence();
    const auto& box = seq.track.annotations[30];
    for (auto _ : state) benchmark::DoNotOptimize(window_events(seq.events, box.t - 100'000, box.t, box));
}
BENCHMARK(BM_WindowEvents);

void BM_EstimateRpmStream(benchmark::State& state) {
    const auto& seq = hover_sequence();
    for (auto _ : state) {
        benchmark::DoNotOptimize(rpm::estimate_rpm_stream(seq.events, seq.track.annotations, 0));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seq.track.annotations.size()));
}
BENCHMARK(BM_EstimateRpmStream)->Unit(benchmark::kMillisecond);

void BM_KalmanCycle(benchmark::State& state) {
    kalman::NoiseConfig cfg;
    kalman::FilterState s;
    kalman::Measurement m;
    for (auto _ : state) {
        s = kalman::kf_predict(s, 1.0 / 30, 1.5, cfg);
        m.t = s.t;
        m.cx += 1.0;
        s = kalman::kf_update(s, m, cfg);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_KalmanCycle);

void BM_ForecasterSequence(benchmark::State& state) {
    const auto out = synth::generate_scenario(synth::maneuver_benchmark_scenario(1));
    const auto series = rpm::estimate_rpm_stream(out.events, out.track.annotations, 0);
    const kalman::ForecasterConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(kalman::run_forecaster(out.track.annotations, series, cfg));
    }
}
BENCHMARK(BM_ForecasterSequence)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
