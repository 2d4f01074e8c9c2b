#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "soildet/telemetry.hpp"

namespace soildet {

struct StoreConfig {
    std::filesystem::path data_dir;
    int utc_offset_min = 360;
    std::int64_t pairing_window_ms = kDefaultPairingWindowMs;
    double day_validity_floor_lux = kDefaultDayValidityFloorLux;
    std::map<std::string, double> led_reference;  // per node
    std::optional<double> led_reference_default;
    DustBands bands;
};

enum class IngestOutcome { Accepted, Duplicate, Rejected, IoError };

struct IngestResult {
    IngestOutcome outcome = IngestOutcome::Rejected;
    std::string reason;  // set for Rejected / IoError
};

/// Ingestion pipeline and persistence: appends accepted lines to
/// daily-partitioned raw logs (verbatim, deduped on (node, ts, role)), pairs
/// day-mode readings online, computes blockage points, persists them to
/// daily-partitioned derived CSV (`ts,node,mode,blockage`), and tracks
/// per-stream latest values.
///
/// Single logical owner: not internally synchronized (the service wraps calls
/// in its own lock). Senders are assumed time-ordered per node, matching the
/// pairing contract.
class IngestStore {
public:
    explicit IngestStore(StoreConfig config);
    ~IngestStore();

    IngestStore(const IngestStore&) = delete;
    IngestStore& operator=(const IngestStore&) = delete;

    /// Parse + ingest one wire line. Malformed lines are counted and
    /// reported, never thrown.
    IngestResult ingest_line(std::string_view line);

    /// Resolve pending pairs and flush partition files.
    void flush();

    std::optional<std::pair<UtcMillis, double>> get_latest(
        const std::string& stream_name) const;

    /// Counters: accepted, duplicate, corrupt plus per-reason reject codes.
    const std::map<std::string, std::uint64_t>& counters() const {
        return counters_;
    }

    /// Called with every computed blockage point before the ingest returns.
    void set_point_hook(
        std::function<void(const std::string& node, const BlockagePoint&)> hook) {
        point_hook_ = std::move(hook);
    }

    const StoreConfig& config() const { return config_; }

private:
    struct PendingReading {
        UtcMillis ts = 0;
        double lux = 0.0;
    };
    struct NodeState {
        std::deque<PendingReading> opens;
        std::deque<PendingReading> glasses;
        UtcMillis watermark = 0;
    };

    IngestResult ingest_record(const WireRecord& rec, std::string_view raw_line);
    IngestResult ingest_post(const StreamPost& post, std::string_view raw_line);
    bool append_raw(UtcMillis ts, std::string_view line);
    bool resolve_day_pair(const std::string& node, PendingReading open,
                          PendingReading glass);
    void evict_expired(const std::string& node, NodeState& st);
    bool emit_point(const std::string& node, const BlockagePoint& point);
    void update_stream(const std::string& name, UtcMillis ts, double value);
    std::ofstream& partition(std::map<std::string, std::ofstream>& files,
                             const std::filesystem::path& dir, CivilDate date,
                             const char* extension);
    void count(const std::string& key) { ++counters_[key]; }

    StoreConfig config_;
    std::map<std::string, NodeState> nodes_;
    std::map<std::string, std::pair<UtcMillis, double>> streams_;
    std::map<CivilDate, std::unordered_set<std::string>> dedupe_;
    std::map<std::string, std::ofstream> raw_files_;
    std::map<std::string, std::ofstream> derived_files_;
    std::map<std::string, std::uint64_t> counters_;
    std::function<void(const std::string&, const BlockagePoint&)> point_hook_;
};

/// Re-ingest raw partition logs (lexicographic file order = date order) into
/// a fresh store. Corrupt lines are skipped and counted. Returns the replayed
/// store's counters.
std::map<std::string, std::uint64_t> replay_raw_logs(
    const std::filesystem::path& raw_dir, IngestStore& target);

}  // namespace soildet
