#include <benchmark/benchmark.h>

#include "soildet/sim.hpp"
#include "soildet/soiling.hpp"

using namespace soildet;

static void BM_GenerateDay(benchmark::State& state) {
    SimScenario sc = *scenario_preset("april-month");
    sc.end_date = sc.start_date;  // one day
    sc.pm10_series.assign(1, 110.0);
    sc.rain_series.assign(1, 0.0);
    sc.sample_interval_s = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto stream = generate_stream(sc);
        benchmark::DoNotOptimize(stream.readings.data());
    }
    state.SetItemsProcessed(state.iterations() * (86400 / sc.sample_interval_s));
}
BENCHMARK(BM_GenerateDay)->Arg(60)->Arg(10);

static void BM_PairReadings(benchmark::State& state) {
    SimScenario sc = *scenario_preset("april-month");
    sc.end_date = {2024, 4, 7};
    sc.pm10_series.assign(7, 110.0);
    sc.rain_series.assign(7, 0.0);
    sc.sample_interval_s = 60;
    const GeneratedStream stream = generate_stream(sc);
    for (auto _ : state) {
        auto result = pair_readings(stream.readings);
        benchmark::DoNotOptimize(result.pairs.data());
    }
    state.SetItemsProcessed(state.iterations() * stream.readings.size());
}
BENCHMARK(BM_PairReadings)->Unit(benchmark::kMillisecond);

static void BM_SolarElevation(benchmark::State& state) {
    int t = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sin_solar_elevation(23.98, 98, t));
        t = (t + 60) % 86400;
    }
}
BENCHMARK(BM_SolarElevation);
