#include <cmath>

#include "doctest.h"
#include "soildet/store.hpp"
#include "test_support.hpp"

using namespace soildet;
using namespace soildet::test;

namespace {

std::string lux_line(const char* node, const char* ts, const char* role,
                     const char* mode, double lux) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  R"({"node":"%s","ts":"%s","role":"%s","mode":"%s","lux":%g})",
                  node, ts, role, mode, lux);
    return buf;
}

StoreConfig make_config(const std::filesystem::path& dir) {
    StoreConfig cfg;
    cfg.data_dir = dir;
    cfg.led_reference_default = 800.0;
    return cfg;
}

std::string tree_bytes(const std::filesystem::path& dir) {
    std::string out;
    std::vector<std::filesystem::path> files;
    if (std::filesystem::exists(dir))
        for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
            if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        out += f.filename().string();
        out += '\0';
        out += read_file(f);
        out += '\0';
    }
    return out;
}

}  // namespace

TEST_CASE("ingest pairs open and glass into a blockage point") {
    TempDir tmp("store");
    IngestStore store(make_config(tmp.path));
    CHECK(store.ingest_line(lux_line("n1", "2024-04-05T12:00:00Z", "open", "day",
                                     50000))
              .outcome == IngestOutcome::Accepted);
    CHECK(store.ingest_line(lux_line("n1", "2024-04-05T12:00:02Z", "glass", "day",
                                     45070))
              .outcome == IngestOutcome::Accepted);
    const auto latest = store.get_latest("n1/blockage");
    REQUIRE(latest.has_value());
    CHECK(latest->second == doctest::Approx(0.0986).epsilon(1e-12));
    CHECK(format_rfc3339(latest->first) == "2024-04-05T12:00:02Z");
    CHECK(store.counters().at("points") == 1);
}

TEST_CASE("duplicate lines are idempotent") {
    TempDir tmp("dup");
    const std::string line =
        lux_line("n1", "2024-04-05T12:00:00Z", "open", "day", 50000);
    {
        IngestStore store(make_config(tmp.path));
        CHECK(store.ingest_line(line).outcome == IngestOutcome::Accepted);
        CHECK(store.ingest_line(line).outcome == IngestOutcome::Duplicate);
        CHECK(store.ingest_line(line).outcome == IngestOutcome::Duplicate);
        store.flush();
    }
    // exactly one stored copy in the raw partition
    const std::string raw = read_file(tmp.path / "raw" / "2024-04-05.log");
    CHECK(raw == line + "\n");
}

TEST_CASE("glass-only stream becomes unpaired rejects once the window passes") {
    TempDir tmp("unpaired");
    IngestStore store(make_config(tmp.path));
    store.ingest_line(lux_line("n1", "2024-04-05T12:00:00Z", "glass", "day", 45000));
    store.ingest_line(lux_line("n1", "2024-04-05T12:00:10Z", "glass", "day", 45000));
    store.ingest_line(lux_line("n1", "2024-04-05T12:00:20Z", "glass", "day", 45000));
    store.flush();
    CHECK(store.counters().at("reject:unpaired") == 3);
    CHECK(!store.get_latest("n1/blockage").has_value());
}

TEST_CASE("low-sun pairs are rejected by the validity floor") {
    TempDir tmp("floor");
    IngestStore store(make_config(tmp.path));
    store.ingest_line(lux_line("n1", "2024-04-05T00:30:00Z", "open", "day", 500));
    store.ingest_line(lux_line("n1", "2024-04-05T00:30:00Z", "glass", "day", 100));
    store.flush();
    CHECK(store.counters().at("reject:below_validity_floor") == 1);
    CHECK(!store.get_latest("n1/blockage").has_value());
}

TEST_CASE("night readings resolve against the LED reference") {
    TempDir tmp("night");
    SUBCASE("with a configured reference") {
        IngestStore store(make_config(tmp.path));
        store.ingest_line(lux_line("n1", "2024-04-05T18:30:00Z", "glass", "night", 400));
        const auto latest = store.get_latest("n1/blockage");
        REQUIRE(latest.has_value());
        CHECK(latest->second == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("without one the reading is a missing-calibration reject") {
        StoreConfig cfg;
        cfg.data_dir = tmp.path / "nocal";
        IngestStore store(std::move(cfg));
        store.ingest_line(lux_line("n1", "2024-04-05T18:30:00Z", "glass", "night", 400));
        CHECK(store.counters().at("reject:missing_calibration") == 1);
        CHECK(!store.get_latest("n1/blockage").has_value());
    }
    SUBCASE("per-node references beat the default") {
        StoreConfig cfg = make_config(tmp.path / "pernode");
        cfg.led_reference["n1"] = 1000.0;
        IngestStore store(std::move(cfg));
        store.ingest_line(lux_line("n1", "2024-04-05T18:30:00Z", "glass", "night", 400));
        CHECK(store.get_latest("n1/blockage")->second ==
              doctest::Approx(0.6).epsilon(1e-12));
    }
}

TEST_CASE("malformed lines never crash ingestion and are counted") {
    TempDir tmp("malformed");
    IngestStore store(make_config(tmp.path));
    CHECK(store.ingest_line("garbage").outcome == IngestOutcome::Rejected);
    CHECK(store.ingest_line(R"({"node":"n1","ts":"2024-04-05T12:00:00Z","role":"open","mode":"day","lux":-5})")
              .outcome == IngestOutcome::Rejected);
    CHECK(store.counters().at("corrupt") == 2);
    CHECK(store.counters().at("reject:negative_lux") == 1);
}

TEST_CASE("get_latest is monotone under out-of-order ingestion") {
    TempDir tmp("monotone");
    IngestStore store(make_config(tmp.path));
    store.ingest_line(lux_line("n1", "2024-04-05T12:10:00Z", "open", "day", 50000));
    store.ingest_line(lux_line("n1", "2024-04-05T12:10:00Z", "glass", "day", 40000));
    const auto first = store.get_latest("n1/blockage");
    REQUIRE(first.has_value());
    // an older pair arriving later must not move latest backwards
    store.ingest_line(lux_line("n1", "2024-04-05T11:00:00Z", "open", "day", 50000));
    store.ingest_line(lux_line("n1", "2024-04-05T11:00:00Z", "glass", "day", 10000));
    const auto after = store.get_latest("n1/blockage");
    REQUIRE(after.has_value());
    CHECK(after->first == first->first);
    CHECK(after->second == first->second);
}

TEST_CASE("stream posts land in their own datastream") {
    TempDir tmp("posts");
    IngestStore store(make_config(tmp.path));
    CHECK(store.ingest_line(
                   R"({"node":"cam1","ts":"2024-04-05T12:00:00Z","stream":"detect","value":1})")
              .outcome == IngestOutcome::Accepted);
    const auto latest = store.get_latest("cam1/detect");
    REQUIRE(latest.has_value());
    CHECK(latest->second == 1.0);
}

TEST_CASE("replay reproduces the derived store byte for byte") {
    TempDir tmp("replay");
    const auto live_dir = tmp.path / "live";
    const auto replay_dir = tmp.path / "replayed";

    // live ingestion: mixed good lines, a duplicate, a night reading, a
    // corrupt line and an unpaired tail
    {
        IngestStore store(make_config(live_dir));
        UtcMillis t = *parse_rfc3339("2024-04-05T10:00:00Z");
        SplitMix64 rng(555);
        for (int i = 0; i < 200; ++i) {
            const double open = 20000 + rng.uniform() * 1000;
            const double glass = open * (0.85 + 0.1 * rng.uniform());
            const std::string ts = format_rfc3339(t);
            store.ingest_line(lux_line("n1", ts.c_str(), "open", "day", open));
            store.ingest_line(lux_line("n1", ts.c_str(), "glass", "day", glass));
            t += 60'000;
        }
        store.ingest_line("corrupt line");
        store.ingest_line(lux_line("n1", "2024-04-05T18:30:00Z", "glass", "night", 700));
        store.ingest_line(lux_line("n1", "2024-04-05T19:00:00Z", "glass", "day", 500));
        store.flush();
        CHECK(store.counters().at("points") == 201);
    }

    IngestStore fresh(make_config(replay_dir));
    const auto counters = replay_raw_logs(live_dir / "raw", fresh);
    CHECK(counters.at("points") == 201);
    CHECK(counters.count("corrupt") == 0);  // corrupt lines never reached raw
    CHECK(tree_bytes(replay_dir / "derived") == tree_bytes(live_dir / "derived"));

    SUBCASE("replaying a log with an injected corrupt line skips and counts it") {
        const auto broken_dir = tmp.path / "broken";
        std::filesystem::create_directories(broken_dir / "raw");
        std::filesystem::copy(live_dir / "raw", broken_dir / "raw",
                              std::filesystem::copy_options::recursive |
                                  std::filesystem::copy_options::overwrite_existing);
        // corrupt one line in the middle of the partition
        auto log = read_file(broken_dir / "raw" / "2024-04-05.log");
        const auto pos = log.find('\n', log.size() / 2);
        log.replace(pos + 1, 10, "XXXXXXXXXX");
        write_file(broken_dir / "raw" / "2024-04-05.log", log);

        IngestStore rebuilt(make_config(tmp.path / "rebuilt"));
        const auto c = replay_raw_logs(broken_dir / "raw", rebuilt);
        CHECK(c.at("corrupt") == 1);
        CHECK(c.at("points") < 201);
    }
}

TEST_CASE("ingesting a whole stream twice equals ingesting it once") {
    TempDir tmp("idem");
    std::vector<std::string> lines;
    UtcMillis t = *parse_rfc3339("2024-04-05T10:00:00Z");
    for (int i = 0; i < 50; ++i) {
        const std::string ts = format_rfc3339(t);
        lines.push_back(lux_line("n1", ts.c_str(), "open", "day", 30000));
        lines.push_back(lux_line("n1", ts.c_str(), "glass", "day", 27000));
        t += 60'000;
    }
    const auto once_dir = tmp.path / "once";
    const auto twice_dir = tmp.path / "twice";
    {
        IngestStore store(make_config(once_dir));
        for (const auto& l : lines) store.ingest_line(l);
        store.flush();
    }
    {
        IngestStore store(make_config(twice_dir));
        for (const auto& l : lines) store.ingest_line(l);
        for (const auto& l : lines)
            CHECK(store.ingest_line(l).outcome == IngestOutcome::Duplicate);
        store.flush();
    }
    CHECK(tree_bytes(once_dir) == tree_bytes(twice_dir));
}
