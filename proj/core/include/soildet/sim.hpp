#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "soildet/soiling.hpp"
#include "soildet/time_util.hpp"

namespace soildet {

/// Deterministic splitmix64 stream; identical seeds give identical streams on
/// every platform (std:: distributions are implementation-defined, this is not).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [-amplitude, +amplitude].
    double symmetric(double amplitude) { return amplitude * (2.0 * uniform() - 1.0); }

private:
    std::uint64_t state_;
};

/// Deposition / washout constants: load grows by k*PM10 per day, blockage
/// saturates as b_max*(1-exp(-beta*load)), rain multiplies load by
/// exp(-gamma*mm) below the 20 mm full-clean threshold and by 0.02 at or
/// above it.
struct SoilingDynamics {
    double k = 0.027735 / 110.0;
    double beta = 1.0;
    double b_max = 0.557194;
    double gamma = 0.08;
};

struct DustState {
    double load = 0.0;
    double base_blockage = 0.0;
};

/// Elevation-dependent loss factor (c0 + c1*sin(elev)), normalized per day so
/// the daily mean of the effective blockage equals the base blockage.
struct AngleModel {
    double c0 = 1.0;
    double c1 = 0.806695;
};

struct SimScenario {
    std::string name;
    std::uint64_t seed = 1;
    double latitude_deg = 23.98;
    CivilDate start_date{2024, 4, 1};
    CivilDate end_date{2024, 4, 30};
    std::vector<double> pm10_series;  // daily ug/m3, one entry per day
    std::vector<double> rain_series;  // daily mm, one entry per day
    double clean_max_lux = 120000.0;
    double led_reference_lux = 800.0;
    int sample_interval_s = 60;
    double cloud_factor = 1.0;          // (0,1]
    double noise_amplitude = 0.02;      // multiplicative sensor noise
    double day_validity_floor_lux = kDefaultDayValidityFloorLux;
    int utc_offset_min = 360;           // site clock, minutes east of UTC
    double initial_load = 0.0;
    bool monthly_reset = false;         // restart accumulation each month
    std::string node_id = "sim1";
    SoilingDynamics dynamics;
    AngleModel angle;

    int day_count() const {
        return static_cast<int>(days_from_civil(end_date) -
                                days_from_civil(start_date)) + 1;
    }
};

/// Solar declination (degrees) from the day-of-year sine formula.
double solar_declination_deg(int day_of_year);

/// Sine of solar elevation from latitude, declination and hour angle;
/// local_seconds measures local solar time from midnight.
double sin_solar_elevation(double latitude_deg, int day_of_year, int local_seconds);

double solar_elevation_deg(double latitude_deg, CivilDate date, int local_seconds);

/// clean_max * max(0, sin(elev))^1.2 * cloud_factor; zero at or below horizon.
double clear_sky_lux(double elevation_deg, double clean_max_lux,
                     double cloud_factor = 1.0);
double clear_sky_lux_from_sin(double sin_elevation, double clean_max_lux,
                              double cloud_factor = 1.0);

DustState deposit_step(DustState state, double pm10, double dt_days,
                       const SoilingDynamics& dyn);

inline constexpr double kFullCleanRainMm = 20.0;
inline constexpr double kFullCleanResidue = 0.02;

DustState rain_wash(DustState state, double rain_mm_today,
                    const SoilingDynamics& dyn);

/// Instantaneous blockage for a state given sin(elev) and the day's mean
/// sin(elev) over valid samples (the normalizer).
double effective_blockage(const DustState& state, double sin_elevation,
                          double day_mean_sin_elevation, const AngleModel& angle);

struct TruthPoint {
    UtcMillis timestamp = 0;
    double blockage = 0.0;
};

struct GeneratedStream {
    std::vector<LuxReading> readings;
    std::vector<TruthPoint> truth;  // valid day samples + night samples
};

/// Deterministic sensor-stream generation. Day samples emit an Open and an
/// UnderGlass reading at every interval (zero lux at night); one LED-mode
/// UnderGlass reading is emitted per night at 00:30 local.
GeneratedStream generate_stream(const SimScenario& scenario);

/// Built-in presets: march-33d, april-month, june-rain, six-month.
std::optional<SimScenario> scenario_preset(const std::string& name);
std::vector<std::string> scenario_preset_names();

/// JSON scenario files. Throws std::runtime_error on malformed input.
SimScenario load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const SimScenario& scenario);

/// Canonical wire line for a reading (the telemetry ingest format).
std::string format_wire_line(const LuxReading& reading);

/// Write stream.jsonl + truth.csv under `out_dir`.
void write_stream_files(const std::filesystem::path& out_dir,
                        const GeneratedStream& stream);

}  // namespace soildet
