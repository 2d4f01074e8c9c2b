#include "soildet/store.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace soildet {

namespace {

std::string dedupe_key(const std::string& node, UtcMillis ts, char tag) {
    std::string k = node;
    k.push_back('|');
    k += std::to_string(ts);
    k.push_back('|');
    k.push_back(tag);
    return k;
}

}  // namespace

IngestStore::IngestStore(StoreConfig config) : config_(std::move(config)) {
    std::filesystem::create_directories(config_.data_dir / "raw");
    std::filesystem::create_directories(config_.data_dir / "derived");
}

IngestStore::~IngestStore() {
    try {
        flush();
    } catch (...) {
        // destructor must not throw; pending data was already on disk per line
    }
}

std::ofstream& IngestStore::partition(std::map<std::string, std::ofstream>& files,
                                      const std::filesystem::path& dir,
                                      CivilDate date, const char* extension) {
    const std::string name = format_date(date) + extension;
    auto it = files.find(name);
    if (it != files.end()) return it->second;
    std::ofstream f(dir / name, std::ios::app);
    return files.emplace(name, std::move(f)).first->second;
}

bool IngestStore::append_raw(UtcMillis ts, std::string_view line) {
    std::ofstream& out =
        partition(raw_files_, config_.data_dir / "raw",
                  local_date(ts, config_.utc_offset_min), ".log");
    out << line << '\n';
    return static_cast<bool>(out);
}

void IngestStore::update_stream(const std::string& name, UtcMillis ts,
                                double value) {
    auto it = streams_.find(name);
    if (it == streams_.end() || ts >= it->second.first)
        streams_[name] = {ts, value};
}

bool IngestStore::emit_point(const std::string& node, const BlockagePoint& point) {
    std::ofstream& out =
        partition(derived_files_, config_.data_dir / "derived",
                  local_date(point.timestamp, config_.utc_offset_min), ".csv");
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9f", point.blockage);
    out << format_rfc3339(point.timestamp) << ',' << node << ','
        << (point.mode == SensorMode::Day ? "day" : "night") << ',' << buf << '\n';
    if (!out) return false;
    update_stream(node + "/blockage", point.timestamp, point.blockage);
    count("points");
    if (point_hook_) point_hook_(node, point);
    return true;
}

bool IngestStore::resolve_day_pair(const std::string& node, PendingReading open,
                                   PendingReading glass) {
    if (open.lux < config_.day_validity_floor_lux) {
        count("reject:below_validity_floor");
        return true;  // handled, nothing persisted
    }
    BlockagePoint p;
    p.timestamp = glass.ts;
    p.mode = SensorMode::Day;
    p.reference_lux = open.lux;
    p.measured_lux = glass.lux;
    p.blockage = blockage_day(open.lux, glass.lux, config_.day_validity_floor_lux);
    return emit_point(node, p);
}

void IngestStore::evict_expired(const std::string&, NodeState& st) {
    while (!st.glasses.empty() &&
           st.watermark - st.glasses.front().ts > config_.pairing_window_ms) {
        count("reject:unpaired");
        st.glasses.pop_front();
    }
    while (!st.opens.empty() &&
           st.watermark - st.opens.front().ts > config_.pairing_window_ms)
        st.opens.pop_front();
}

IngestResult IngestStore::ingest_record(const WireRecord& rec,
                                        std::string_view raw_line) {
    const char tag = rec.role == SensorRole::Open ? 'o' : 'g';
    // dedupe on (node, ts, role); sets for stale dates are dropped as the
    // stream advances so memory stays bounded
    const CivilDate date = local_date(rec.ts, config_.utc_offset_min);
    auto& keys = dedupe_[date];
    if (!keys.insert(dedupe_key(rec.node, rec.ts, tag)).second) {
        count("duplicate");
        return {IngestOutcome::Duplicate, {}};
    }
    while (dedupe_.size() > 3 && dedupe_.begin()->first < date)
        dedupe_.erase(dedupe_.begin());

    if (!append_raw(rec.ts, raw_line)) {
        count("io_error");
        return {IngestOutcome::IoError, "io_error:raw"};
    }
    count("accepted");

    NodeState& st = nodes_[rec.node];
    st.watermark = std::max(st.watermark, rec.ts);

    bool ok = true;
    if (rec.mode == SensorMode::Night) {
        if (rec.role == SensorRole::Open) {
            count("reject:night_open_reading");
        } else {
            double led = 0.0;
            if (auto it = config_.led_reference.find(rec.node);
                it != config_.led_reference.end())
                led = it->second;
            else if (config_.led_reference_default)
                led = *config_.led_reference_default;
            if (led <= 0.0) {
                count("reject:missing_calibration");
            } else {
                BlockagePoint p;
                p.timestamp = rec.ts;
                p.mode = SensorMode::Night;
                p.reference_lux = led;
                p.measured_lux = rec.lux;
                p.blockage = blockage_night(led, rec.lux);
                ok = emit_point(rec.node, p);
            }
        }
    } else if (rec.role == SensorRole::UnderGlass) {
        // pair with the nearest already-buffered open (ties toward the later
        // reading); otherwise wait for one until the watermark passes ts+W
        const PendingReading glass{rec.ts, rec.lux};
        const PendingReading* best = nullptr;
        for (const PendingReading& o : st.opens) {
            const std::int64_t dist = std::abs(o.ts - glass.ts);
            if (dist > config_.pairing_window_ms) continue;
            if (!best || dist < std::abs(best->ts - glass.ts) ||
                (dist == std::abs(best->ts - glass.ts) && o.ts > best->ts))
                best = &o;
        }
        if (best)
            ok = resolve_day_pair(rec.node, *best, glass);
        else
            st.glasses.push_back(glass);
    } else {
        const PendingReading open{rec.ts, rec.lux};
        st.opens.push_back(open);
        // this open may complete waiting glasses
        for (auto it = st.glasses.begin(); it != st.glasses.end();) {
            if (std::abs(open.ts - it->ts) <= config_.pairing_window_ms) {
                ok = resolve_day_pair(rec.node, open, *it) && ok;
                it = st.glasses.erase(it);
            } else {
                ++it;
            }
        }
    }
    evict_expired(rec.node, st);
    if (!ok) {
        count("io_error");
        return {IngestOutcome::IoError, "io_error:derived"};
    }
    return {IngestOutcome::Accepted, {}};
}

IngestResult IngestStore::ingest_post(const StreamPost& post,
                                      std::string_view raw_line) {
    const CivilDate date = local_date(post.ts, config_.utc_offset_min);
    auto& keys = dedupe_[date];
    if (!keys.insert(dedupe_key(post.node, post.ts, 's') + post.stream).second) {
        count("duplicate");
        return {IngestOutcome::Duplicate, {}};
    }
    if (!append_raw(post.ts, raw_line)) {
        count("io_error");
        return {IngestOutcome::IoError, "io_error:raw"};
    }
    count("accepted");
    update_stream(post.node + "/" + post.stream, post.ts, post.value);
    return {IngestOutcome::Accepted, {}};
}

IngestResult IngestStore::ingest_line(std::string_view line) {
    const ParsedLine parsed = parse_record(line);
    switch (parsed.kind) {
        case ParsedLine::Kind::LuxRecord:
            return ingest_record(parsed.record, line);
        case ParsedLine::Kind::StreamPost:
            return ingest_post(parsed.post, line);
        case ParsedLine::Kind::Invalid:
        default:
            count("corrupt");
            count("reject:" + parsed.reason);
            return {IngestOutcome::Rejected, parsed.reason};
    }
}

void IngestStore::flush() {
    // end of stream: full knowledge, resolve what remains
    for (auto& [node, st] : nodes_) {
        for (const PendingReading& g : st.glasses) {
            const PendingReading* best = nullptr;
            for (const PendingReading& o : st.opens) {
                const std::int64_t dist = std::abs(o.ts - g.ts);
                if (dist > config_.pairing_window_ms) continue;
                if (!best || dist < std::abs(best->ts - g.ts) ||
                    (dist == std::abs(best->ts - g.ts) && o.ts > best->ts))
                    best = &o;
            }
            if (best)
                resolve_day_pair(node, *best, g);
            else
                count("reject:unpaired");
        }
        st.glasses.clear();
        st.opens.clear();
    }
    for (auto& [name, f] : raw_files_) f.flush();
    for (auto& [name, f] : derived_files_) f.flush();
}

std::optional<std::pair<UtcMillis, double>> IngestStore::get_latest(
    const std::string& stream_name) const {
    auto it = streams_.find(stream_name);
    if (it == streams_.end()) return std::nullopt;
    return it->second;
}

std::map<std::string, std::uint64_t> replay_raw_logs(
    const std::filesystem::path& raw_dir, IngestStore& target) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::exists(raw_dir))
        for (const auto& entry : std::filesystem::directory_iterator(raw_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".log")
                files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            target.ingest_line(line);
        }
    }
    target.flush();
    return target.counters();
}

}  // namespace soildet
