#include "soildet/telemetry.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nlohmann/json.hpp"

namespace soildet {

using nlohmann::json;

ParsedLine parse_record(std::string_view line) {
    ParsedLine out;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
        out.reason = "bad_json";
        return out;
    }

    auto require_string = [&](const char* field, std::string& dst) {
        if (!j.contains(field) || !j[field].is_string()) {
            out.reason = std::string("missing_field:") + field;
            return false;
        }
        dst = j[field].get<std::string>();
        return true;
    };

    std::string ts_text;
    if (j.contains("stream")) {
        // datastream post
        if (!require_string("node", out.post.node)) return out;
        if (!require_string("ts", ts_text)) return out;
        if (!require_string("stream", out.post.stream)) return out;
        if (!j.contains("value") || !j["value"].is_number()) {
            out.reason = "missing_field:value";
            return out;
        }
        auto ts = parse_rfc3339(ts_text);
        if (!ts) {
            out.reason = "bad_timestamp";
            return out;
        }
        out.post.ts = *ts;
        out.post.value = j["value"].get<double>();
        if (!std::isfinite(out.post.value)) {
            out.reason = "non_finite_value";
            return out;
        }
        out.kind = ParsedLine::Kind::StreamPost;
        return out;
    }

    std::string role, mode;
    if (!require_string("node", out.record.node)) return out;
    if (!require_string("ts", ts_text)) return out;
    if (!require_string("role", role)) return out;
    if (!require_string("mode", mode)) return out;
    if (!j.contains("lux") || !j["lux"].is_number()) {
        out.reason = "missing_field:lux";
        return out;
    }
    auto ts = parse_rfc3339(ts_text);
    if (!ts) {
        out.reason = "bad_timestamp";
        return out;
    }
    out.record.ts = *ts;
    if (role == "open") {
        out.record.role = SensorRole::Open;
    } else if (role == "glass") {
        out.record.role = SensorRole::UnderGlass;
    } else {
        out.reason = "bad_role";
        return out;
    }
    if (mode == "day") {
        out.record.mode = SensorMode::Day;
    } else if (mode == "night") {
        out.record.mode = SensorMode::Night;
    } else {
        out.reason = "bad_mode";
        return out;
    }
    out.record.lux = j["lux"].get<double>();
    if (!std::isfinite(out.record.lux)) {
        out.reason = "non_finite_lux";
        return out;
    }
    if (out.record.lux < 0.0) {
        out.reason = "negative_lux";
        return out;
    }
    if (out.record.node.empty()) {
        out.reason = "missing_field:node";
        return out;
    }
    out.kind = ParsedLine::Kind::LuxRecord;
    return out;
}

std::optional<DustLevel> dust_level_from_string(std::string_view name) {
    if (name == "Low") return DustLevel::Low;
    if (name == "Moderate") return DustLevel::Moderate;
    if (name == "High") return DustLevel::High;
    if (name == "Severe") return DustLevel::Severe;
    return std::nullopt;
}

std::vector<AlertRule> load_rules(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("rules: cannot open " + path.string());
    std::vector<AlertRule> rules;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw std::runtime_error("rules: bad JSON at line " +
                                     std::to_string(line_no));
        AlertRule r;
        try {
            r.rule_id = j.at("rule_id").get<std::string>();
            r.node = j.at("node").get<std::string>();
            auto level = dust_level_from_string(
                j.at("level_at_least").get<std::string>());
            if (!level)
                throw std::runtime_error("rules: unknown level at line " +
                                         std::to_string(line_no));
            r.level_at_least = *level;
            r.min_interval_s = j.at("min_interval").get<std::int64_t>();
            r.webhook_url = j.at("webhook_url").get<std::string>();
        } catch (const json::exception& e) {
            throw std::runtime_error("rules: line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
        if (r.min_interval_s <= 0)
            throw std::runtime_error("rules: min_interval must be > 0 at line " +
                                     std::to_string(line_no));
        rules.push_back(std::move(r));
    }
    return rules;
}

std::string notification_json(const Notification& n) {
    json j;
    j["rule_id"] = n.rule_id;
    j["node"] = n.node;
    j["level"] = to_string(n.level);
    j["blockage_pct"] = n.blockage_pct;
    j["ts"] = format_rfc3339(n.ts);
    j["message"] = n.message;
    return j.dump();
}

std::vector<Notification> evaluate_alerts(
    const BlockagePoint& point, const std::string& node,
    std::span<const AlertRule> rules,
    std::map<std::string, UtcMillis>& last_fired, const DustBands& bands) {
    std::vector<Notification> fired;
    const DustLevel level = classify_dust_level(point.blockage, bands);
    for (const AlertRule& rule : rules) {
        if (rule.node != node) continue;
        if (level < rule.level_at_least) continue;
        auto it = last_fired.find(rule.rule_id);
        if (it != last_fired.end() &&
            point.timestamp - it->second < rule.min_interval_s * 1000)
            continue;
        last_fired[rule.rule_id] = point.timestamp;
        Notification n;
        n.rule_id = rule.rule_id;
        n.node = node;
        n.level = level;
        n.blockage_pct = point.blockage * 100.0;
        n.ts = point.timestamp;
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "%s dust on %s: %.2f%% of visible sunlight blocked",
                      to_string(level), node.c_str(), n.blockage_pct);
        n.message = msg;
        fired.push_back(std::move(n));
    }
    return fired;
}

}  // namespace soildet
