#include "soildet/soiling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace soildet {

const char* to_string(DustLevel level) {
    switch (level) {
        case DustLevel::Low: return "Low";
        case DustLevel::Moderate: return "Moderate";
        case DustLevel::High: return "High";
        case DustLevel::Severe: return "Severe";
    }
    return "?";
}

const char* to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::NoCounterpartInWindow: return "no_counterpart_in_window";
        case RejectReason::UnusedOpen: return "unused_open";
        case RejectReason::BelowValidityFloor: return "below_validity_floor";
        case RejectReason::NightOpenReading: return "night_open_reading";
        case RejectReason::NegativeLux: return "negative_lux";
    }
    return "?";
}

double relative_change(double v1, double v2) {
    if (!(v1 > 0.0)) throw std::domain_error("relative_change: v1 must be > 0");
    return (v2 - v1) / v1;
}

double blockage_day(double open_lux, double glass_lux, double validity_floor_lux) {
    if (!(open_lux >= validity_floor_lux))
        throw std::domain_error("blockage_day: open lux below validity floor");
    if (glass_lux < 0.0)
        throw std::domain_error("blockage_day: negative glass lux");
    return std::clamp((open_lux - glass_lux) / open_lux, 0.0, 1.0);
}

double blockage_night(double led_reference_lux, double measured_lux) {
    if (!(led_reference_lux > 0.0))
        throw std::domain_error("blockage_night: LED reference must be > 0");
    if (measured_lux < 0.0)
        throw std::domain_error("blockage_night: negative measured lux");
    return std::clamp((led_reference_lux - measured_lux) / led_reference_lux, 0.0,
                      1.0);
}

DustLevel classify_dust_level(double blockage, const DustBands& bands) {
    if (!(blockage >= 0.0) || !(blockage <= 1.0))
        throw std::domain_error("classify_dust_level: blockage outside [0,1]");
    if (blockage >= bands.severe) return DustLevel::Severe;
    if (blockage >= bands.high) return DustLevel::High;
    if (blockage >= bands.moderate) return DustLevel::Moderate;
    return DustLevel::Low;
}

PairingResult pair_readings(std::span<const LuxReading> stream,
                            std::int64_t window_ms) {
    PairingResult result;
    // Split per node, preserving order.
    std::map<std::string, std::vector<const LuxReading*>> opens, glasses;
    for (const LuxReading& r : stream) {
        if (r.lux < 0.0) {
            result.rejects.push_back({r, RejectReason::NegativeLux});
            continue;
        }
        if (r.mode == SensorMode::Night) {
            // Night mode uses the LED reference; an Open reading has no meaning.
            if (r.role == SensorRole::Open)
                result.rejects.push_back({r, RejectReason::NightOpenReading});
            continue;  // night glass readings are resolved against calibration
        }
        (r.role == SensorRole::Open ? opens : glasses)[r.node_id].push_back(&r);
    }

    for (auto& [node, glass_list] : glasses) {
        auto it = opens.find(node);
        const std::vector<const LuxReading*> empty;
        const auto& open_list = it == opens.end() ? empty : it->second;
        std::vector<bool> used(open_list.size(), false);
        for (const LuxReading* g : glass_list) {
            // nearest open by |dt| via binary search on the sorted opens;
            // ties break toward the later reading
            const LuxReading* best = nullptr;
            std::size_t best_idx = 0;
            std::int64_t best_dist = std::numeric_limits<std::int64_t>::max();
            auto lb = std::lower_bound(
                open_list.begin(), open_list.end(), g->timestamp,
                [](const LuxReading* o, UtcMillis ts) { return o->timestamp < ts; });
            auto consider = [&](std::size_t i) {
                const std::int64_t dist =
                    std::abs(open_list[i]->timestamp - g->timestamp);
                if (dist > window_ms) return;
                if (dist < best_dist ||
                    (dist == best_dist && best &&
                     open_list[i]->timestamp > best->timestamp)) {
                    best = open_list[i];
                    best_idx = i;
                    best_dist = dist;
                }
            };
            if (lb != open_list.end())
                consider(static_cast<std::size_t>(lb - open_list.begin()));
            if (lb != open_list.begin())
                consider(static_cast<std::size_t>(lb - open_list.begin()) - 1);
            if (best) {
                used[best_idx] = true;
                result.pairs.push_back({*best, *g});
            } else {
                result.rejects.push_back({*g, RejectReason::NoCounterpartInWindow});
            }
        }
        for (std::size_t i = 0; i < open_list.size(); ++i)
            if (!used[i])
                result.rejects.push_back({*open_list[i], RejectReason::UnusedOpen});
    }
    // Opens of nodes that produced no glass readings at all.
    for (auto& [node, open_list] : opens) {
        if (glasses.count(node)) continue;
        for (const LuxReading* o : open_list)
            result.rejects.push_back({*o, RejectReason::UnusedOpen});
    }
    return result;
}

DailySummary daily_aggregate(std::span<const BlockagePoint> points,
                             CivilDate date, int utc_offset_min) {
    DailySummary s;
    s.date = date;
    double sum = 0.0;
    for (const BlockagePoint& p : points) {
        if (local_date(p.timestamp, utc_offset_min) != date) continue;
        if (s.sample_count == 0) {
            s.peak_blockage = s.min_blockage = p.blockage;
        } else {
            s.peak_blockage = std::max(s.peak_blockage, p.blockage);
            s.min_blockage = std::min(s.min_blockage, p.blockage);
        }
        sum += p.blockage;
        ++s.sample_count;
    }
    if (s.sample_count > 0) s.mean_blockage = sum / static_cast<double>(s.sample_count);
    return s;
}

std::map<CivilDate, DailySummary> group_daily(
    std::span<const BlockagePoint> points, int utc_offset_min) {
    struct Acc {
        double sum = 0, peak = 0, min = 0;
        std::size_t n = 0;
    };
    std::map<CivilDate, Acc> acc;
    for (const BlockagePoint& p : points) {
        Acc& a = acc[local_date(p.timestamp, utc_offset_min)];
        if (a.n == 0) {
            a.peak = a.min = p.blockage;
        } else {
            a.peak = std::max(a.peak, p.blockage);
            a.min = std::min(a.min, p.blockage);
        }
        a.sum += p.blockage;
        ++a.n;
    }
    std::map<CivilDate, DailySummary> out;
    for (auto& [date, a] : acc)
        out[date] = DailySummary{date, a.sum / static_cast<double>(a.n), a.peak,
                                 a.min, a.n};
    return out;
}

MonthlySummary monthly_aggregate(std::span<const DailySummary> summaries) {
    MonthlySummary m;
    double weighted = 0.0;
    for (const DailySummary& d : summaries) {
        if (d.sample_count == 0) continue;
        if (m.day_count == 0) {
            m.year = d.date.year;
            m.month = d.date.month;
        } else if (d.date.year != m.year || d.date.month != m.month) {
            throw std::invalid_argument(
                "monthly_aggregate: summaries span more than one month");
        }
        weighted += d.mean_blockage * static_cast<double>(d.sample_count);
        m.sample_count += d.sample_count;
        ++m.day_count;
    }
    if (m.sample_count > 0)
        m.mean_blockage = weighted / static_cast<double>(m.sample_count);
    return m;
}

EfficiencyModel fit_efficiency_model(
    std::span<const std::pair<double, double>> rows) {
    if (rows.size() < 2)
        throw std::invalid_argument("fit_efficiency_model: need at least 2 rows");
    const auto n = static_cast<double>(rows.size());
    double mx = 0, my = 0;
    for (auto [x, y] : rows) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (auto [x, y] : rows) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("fit_efficiency_model: constant x, degenerate fit");
    EfficiencyModel m;
    m.slope = sxy / sxx;
    m.intercept = my - m.slope * mx;
    m.pearson_r = syy == 0.0 ? 0.0 : sxy / std::sqrt(sxx * syy);
    return m;
}

double predict_efficiency_loss(const EfficiencyModel& model, double blockage_pct) {
    return model.slope * blockage_pct + model.intercept;
}

bool natural_cleaning_check(std::span<const RainRecord> recent_rain,
                            int window_days) {
    if (window_days < 1)
        throw std::invalid_argument("natural_cleaning_check: window_days must be >= 1");
    if (recent_rain.empty()) return false;
    std::int64_t end = 0;
    for (const RainRecord& r : recent_rain)
        end = std::max(end, days_from_civil(r.date));
    const std::int64_t begin = end - window_days + 1;
    double total = 0.0;
    for (const RainRecord& r : recent_rain) {
        std::int64_t d = days_from_civil(r.date);
        if (d >= begin && d <= end) total += r.rain_mm;
    }
    return total >= kNaturalCleanRainMm;
}

}  // namespace soildet
