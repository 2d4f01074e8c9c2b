#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "soildet/sim.hpp"
#include "soildet/soiling.hpp"

namespace soildet::test {

/// Unique scratch directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("soildet-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

/// Batch recovery of daily blockage means from a generated stream via the
/// analytical soiling-core path (pairing + day/night blockage + grouping).
inline std::map<CivilDate, DailySummary> recover_daily(
    const GeneratedStream& stream, const SimScenario& sc) {
    const PairingResult paired =
        pair_readings(stream.readings, kDefaultPairingWindowMs);
    std::vector<BlockagePoint> points;
    for (const ReadingPair& pr : paired.pairs) {
        if (pr.open.lux < sc.day_validity_floor_lux) continue;
        BlockagePoint p;
        p.timestamp = pr.glass.timestamp;
        p.mode = SensorMode::Day;
        p.reference_lux = pr.open.lux;
        p.measured_lux = pr.glass.lux;
        p.blockage = blockage_day(pr.open.lux, pr.glass.lux,
                                  sc.day_validity_floor_lux);
        points.push_back(p);
    }
    for (const LuxReading& r : stream.readings) {
        if (r.mode != SensorMode::Night || r.role != SensorRole::UnderGlass)
            continue;
        BlockagePoint p;
        p.timestamp = r.timestamp;
        p.mode = SensorMode::Night;
        p.reference_lux = sc.led_reference_lux;
        p.measured_lux = r.lux;
        p.blockage = blockage_night(sc.led_reference_lux, r.lux);
        points.push_back(p);
    }
    return group_daily(points, sc.utc_offset_min);
}

/// Daily means of the emitted ground truth.
inline std::map<CivilDate, DailySummary> truth_daily(
    const GeneratedStream& stream, const SimScenario& sc) {
    std::vector<BlockagePoint> points;
    points.reserve(stream.truth.size());
    for (const TruthPoint& t : stream.truth) {
        BlockagePoint p;
        p.timestamp = t.timestamp;
        p.blockage = t.blockage;
        points.push_back(p);
    }
    return group_daily(points, sc.utc_offset_min);
}

}  // namespace soildet::test
