#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soildet/soiling.hpp"
#include "soildet/time_util.hpp"

namespace soildet {

/// One sensor sample as it travels the wire (newline-delimited JSON objects).
struct WireRecord {
    std::string node;
    UtcMillis ts = 0;
    SensorRole role = SensorRole::Open;
    SensorMode mode = SensorMode::Day;
    double lux = 0.0;
};

/// Direct datastream post ({"node","ts","stream","value"}), the ingest-path
/// home for image-classifier and detector outputs.
struct StreamPost {
    std::string node;
    UtcMillis ts = 0;
    std::string stream;  // posted to "<node>/<stream>"
    double value = 0.0;
};

struct ParsedLine {
    enum class Kind { LuxRecord, StreamPost, Invalid };
    Kind kind = Kind::Invalid;
    WireRecord record;
    StreamPost post;
    std::string reason;  // reject reason code when Invalid
};

/// Strict field validation; unknown fields are ignored for forward
/// compatibility. Never throws: malformed lines come back Invalid with a
/// distinct reason code (missing_field:<name>, bad_timestamp, negative_lux,
/// bad_json, ...).
ParsedLine parse_record(std::string_view line);

struct AlertRule {
    std::string rule_id;
    std::string node;
    DustLevel level_at_least = DustLevel::High;
    std::int64_t min_interval_s = 3600;
    std::string webhook_url;
};

/// Rules file: one JSON object per line:
/// {"rule_id":..,"node":..,"level_at_least":"High","min_interval":3600,
///  "webhook_url":..}. Throws std::runtime_error on malformed entries.
std::vector<AlertRule> load_rules(const std::filesystem::path& path);

std::optional<DustLevel> dust_level_from_string(std::string_view name);

struct Notification {
    std::string rule_id;
    std::string node;
    DustLevel level = DustLevel::Low;
    double blockage_pct = 0.0;
    UtcMillis ts = 0;
    std::string message;
};

/// Webhook POST body, field set fixed by the wire contract.
std::string notification_json(const Notification& n);

/// Evaluate one blockage point against the rules for its node. Fires when the
/// classified level reaches the rule's level and at least min_interval has
/// passed since that rule last fired (event time); updates last_fired.
std::vector<Notification> evaluate_alerts(
    const BlockagePoint& point, const std::string& node,
    std::span<const AlertRule> rules,
    std::map<std::string, UtcMillis>& last_fired, const DustBands& bands = {});

}  // namespace soildet
