#include <benchmark/benchmark.h>

#include <filesystem>

#include "soildet/store.hpp"

using namespace soildet;

static void BM_ParseRecord(benchmark::State& state) {
    const std::string line =
        R"({"node":"n1","ts":"2024-04-05T12:00:00Z","role":"open","mode":"day","lux":50000.5})";
    for (auto _ : state) {
        auto p = parse_record(line);
        benchmark::DoNotOptimize(p.record.lux);
    }
    state.SetBytesProcessed(state.iterations() * line.size());
}
BENCHMARK(BM_ParseRecord);

static void BM_IngestPairedStream(benchmark::State& state) {
    const auto dir = std::filesystem::temp_directory_path() / "soildet-bench-store";
    for (auto _ : state) {
        state.PauseTiming();
        std::filesystem::remove_all(dir);
        StoreConfig cfg;
        cfg.data_dir = dir;
        IngestStore store(std::move(cfg));
        state.ResumeTiming();
        UtcMillis t = 1712300000000;
        char buf[256];
        for (int i = 0; i < 1000; ++i) {
            std::snprintf(buf, sizeof(buf),
                          R"({"node":"n1","ts":"%s","role":"open","mode":"day","lux":50000})",
                          format_rfc3339(t).c_str());
            store.ingest_line(buf);
            std::snprintf(buf, sizeof(buf),
                          R"({"node":"n1","ts":"%s","role":"glass","mode":"day","lux":45000})",
                          format_rfc3339(t).c_str());
            store.ingest_line(buf);
            t += 60000;
        }
        store.flush();
    }
    state.SetItemsProcessed(state.iterations() * 2000);
    std::filesystem::remove_all(dir);
}
BENCHMARK(BM_IngestPairedStream)->Unit(benchmark::kMillisecond);
