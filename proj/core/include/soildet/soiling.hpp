#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "soildet/time_util.hpp"

namespace soildet {

enum class SensorRole { Open, UnderGlass };
enum class SensorMode { Day, Night };

/// One timestamped illuminance sample from one sensor.
struct LuxReading {
    std::string node_id;
    UtcMillis timestamp = 0;
    SensorRole role = SensorRole::Open;
    SensorMode mode = SensorMode::Day;
    double lux = 0.0;  // >= 0
};

/// A computed visible-sunlight blockage fraction at an instant.
struct BlockagePoint {
    UtcMillis timestamp = 0;
    double blockage = 0.0;  // [0,1]
    SensorMode mode = SensorMode::Day;
    double reference_lux = 0.0;  // clean/open or LED reference
    double measured_lux = 0.0;
};

enum class DustLevel { Low = 0, Moderate = 1, High = 2, Severe = 3 };

const char* to_string(DustLevel level);

/// Blockage-fraction boundaries between adjacent levels, left-closed upward:
/// [0,moderate) Low, [moderate,high) Moderate, [high,severe) High, [severe,1] Severe.
struct DustBands {
    double moderate = 0.05;
    double high = 0.20;
    double severe = 0.40;
};

struct DailySummary {
    CivilDate date;
    double mean_blockage = 0.0;
    double peak_blockage = 0.0;
    double min_blockage = 0.0;
    std::size_t sample_count = 0;  // 0 marks "no data"
};

struct MonthlySummary {
    int year = 0;
    unsigned month = 0;
    double mean_blockage = 0.0;   // weighted by per-day sample counts
    std::size_t day_count = 0;
    std::size_t sample_count = 0;  // 0 marks "no data"
};

/// Least-squares line relating blockage % to panel efficiency-loss %.
struct EfficiencyModel {
    double slope = 0.0;      // loss % per blockage %
    double intercept = 0.0;  // %
    double pearson_r = 0.0;  // sample correlation of the fit data
};

struct RainRecord {
    CivilDate date;
    double rain_mm = 0.0;
};

/// Rain needed over a window for natural cleaning.
inline constexpr double kNaturalCleanRainMm = 20.0;

/// Open-sensor lux below which day readings are too unstable to trust.
inline constexpr double kDefaultDayValidityFloorLux = 1000.0;

inline constexpr std::int64_t kDefaultPairingWindowMs = 5000;

/// (v2 - v1) / v1 as a signed fraction. Throws std::domain_error when v1 <= 0.
double relative_change(double v1, double v2);

/// Day-mode blockage: clamp((open - glass)/open, 0, 1).
/// Throws std::domain_error when open_lux < validity floor or glass_lux < 0.
double blockage_day(double open_lux, double glass_lux,
                    double validity_floor_lux = kDefaultDayValidityFloorLux);

/// Night-mode blockage against the stored LED reference.
/// Throws std::domain_error when the reference is not positive or measured < 0.
double blockage_night(double led_reference_lux, double measured_lux);

DustLevel classify_dust_level(double blockage, const DustBands& bands = {});

struct ReadingPair {
    LuxReading open;
    LuxReading glass;
};

enum class RejectReason {
    NoCounterpartInWindow,  // glass with no open reading within W
    UnusedOpen,             // open reading never chosen by any glass
    BelowValidityFloor,
    NightOpenReading,       // role=Open is meaningless in night mode
    NegativeLux,
};

const char* to_string(RejectReason reason);

struct RejectedReading {
    LuxReading reading;
    RejectReason reason;
};

struct PairingResult {
    std::vector<ReadingPair> pairs;
    std::vector<RejectedReading> rejects;
};

/// Pair each day-mode UnderGlass reading with the nearest Open reading of the
/// same node within `window_ms` (ties toward the later reading). Opens may
/// serve several glass readings; readings that pair with nothing land in
/// `rejects` with a reason. Input must be time-sorted per node.
PairingResult pair_readings(std::span<const LuxReading> stream,
                            std::int64_t window_ms = kDefaultPairingWindowMs);

/// Mean/max/min blockage over the points falling on `date` in the site
/// timezone. Empty selection yields sample_count == 0.
DailySummary daily_aggregate(std::span<const BlockagePoint> points,
                             CivilDate date, int utc_offset_min);

/// Group points into daily summaries keyed by local date.
std::map<CivilDate, DailySummary> group_daily(
    std::span<const BlockagePoint> points, int utc_offset_min);

/// Sample-count-weighted mean of daily means. All summaries must share one
/// month (throws std::invalid_argument otherwise); empty input yields the
/// no-data marker.
MonthlySummary monthly_aggregate(std::span<const DailySummary> summaries);

/// Ordinary least squares of efficiency-loss % on blockage %.
/// Throws std::invalid_argument on fewer than 2 rows or constant x.
EfficiencyModel fit_efficiency_model(
    std::span<const std::pair<double, double>> rows);

double predict_efficiency_loss(const EfficiencyModel& model, double blockage_pct);

/// True when rainfall summed over the trailing `window_days` (ending at the
/// latest record date) reaches the 20 mm natural-cleaning threshold.
bool natural_cleaning_check(std::span<const RainRecord> recent_rain,
                            int window_days);

}  // namespace soildet
