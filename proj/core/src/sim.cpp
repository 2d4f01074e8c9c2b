#include "soildet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "nlohmann/json.hpp"

namespace soildet {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kLuxExponent = 1.2;
}  // namespace

double solar_declination_deg(int day_of_year) {
    return 23.44 * std::sin(2.0 * std::numbers::pi * (284 + day_of_year) / 365.0);
}

double sin_solar_elevation(double latitude_deg, int doy, int local_seconds) {
    const double decl = solar_declination_deg(doy) * kDeg;
    const double lat = latitude_deg * kDeg;
    const double hour_angle = ((local_seconds / 3600.0) - 12.0) * 15.0 * kDeg;
    return std::sin(lat) * std::sin(decl) +
           std::cos(lat) * std::cos(decl) * std::cos(hour_angle);
}

double solar_elevation_deg(double latitude_deg, CivilDate date, int local_seconds) {
    return std::asin(std::clamp(
               sin_solar_elevation(latitude_deg, day_of_year(date), local_seconds),
               -1.0, 1.0)) / kDeg;
}

double clear_sky_lux_from_sin(double sin_elevation, double clean_max_lux,
                              double cloud_factor) {
    if (!(cloud_factor > 0.0) || cloud_factor > 1.0)
        throw std::invalid_argument("clear_sky_lux: cloud_factor must be in (0,1]");
    if (sin_elevation <= 0.0) return 0.0;
    return clean_max_lux * std::pow(sin_elevation, kLuxExponent) * cloud_factor;
}

double clear_sky_lux(double elevation_deg, double clean_max_lux, double cloud_factor) {
    return clear_sky_lux_from_sin(std::sin(elevation_deg * kDeg), clean_max_lux,
                                  cloud_factor);
}

DustState deposit_step(DustState state, double pm10, double dt_days,
                       const SoilingDynamics& dyn) {
    if (!(dt_days > 0.0)) throw std::invalid_argument("deposit_step: dt must be > 0");
    if (pm10 < 0.0) throw std::invalid_argument("deposit_step: negative pm10");
    state.load += dyn.k * pm10 * dt_days;
    state.base_blockage = dyn.b_max * (1.0 - std::exp(-dyn.beta * state.load));
    return state;
}

DustState rain_wash(DustState state, double rain_mm_today, const SoilingDynamics& dyn) {
    if (rain_mm_today < 0.0) throw std::invalid_argument("rain_wash: negative rain");
    if (rain_mm_today >= kFullCleanRainMm)
        state.load *= kFullCleanResidue;
    else if (rain_mm_today > 0.0)
        state.load *= std::exp(-dyn.gamma * rain_mm_today);
    state.base_blockage = dyn.b_max * (1.0 - std::exp(-dyn.beta * state.load));
    return state;
}

double effective_blockage(const DustState& state, double sin_elevation,
                          double day_mean_sin_elevation, const AngleModel& angle) {
    const double s = std::max(0.0, sin_elevation);
    const double denom = angle.c0 + angle.c1 * day_mean_sin_elevation;
    if (denom <= 0.0) return state.base_blockage;
    const double factor = (angle.c0 + angle.c1 * s) / denom;
    return std::clamp(state.base_blockage * factor, 0.0, 1.0);
}

GeneratedStream generate_stream(const SimScenario& sc) {
    const int days = sc.day_count();
    if (days <= 0) throw std::invalid_argument("generate_stream: end before start");
    if (sc.pm10_series.size() != static_cast<std::size_t>(days) ||
        sc.rain_series.size() != static_cast<std::size_t>(days))
        throw std::invalid_argument("generate_stream: series must cover the date range");
    if (sc.sample_interval_s <= 0 || 86400 % sc.sample_interval_s != 0)
        throw std::invalid_argument("generate_stream: interval must divide 86400");

    SplitMix64 rng(sc.seed);
    GeneratedStream out;
    const int per_day = 86400 / sc.sample_interval_s;
    out.readings.reserve(static_cast<std::size_t>(days) * (2 * per_day + 1));

    DustState state{sc.initial_load, 0.0};
    state = rain_wash(state, 0.0, sc.dynamics);  // initialize base_blockage

    const std::int64_t start_day = days_from_civil(sc.start_date);
    for (int di = 0; di < days; ++di) {
        const CivilDate date = civil_from_days(start_day + di);
        const int doy = day_of_year(date);
        if (sc.monthly_reset && date.day == 1) state.load = 0.0;
        state = rain_wash(state, sc.rain_series[di], sc.dynamics);

        // day's angle normalizer: mean sin(elev) over valid sample instants
        double mean_s = 0.0;
        int valid_count = 0;
        for (int t = 0; t < 86400; t += sc.sample_interval_s) {
            const double s = sin_solar_elevation(sc.latitude_deg, doy, t);
            if (clear_sky_lux_from_sin(s, sc.clean_max_lux, sc.cloud_factor) >=
                sc.day_validity_floor_lux) {
                mean_s += std::max(0.0, s);
                ++valid_count;
            }
        }
        if (valid_count > 0) mean_s /= valid_count;

        const UtcMillis midnight = local_midnight_utc(date, sc.utc_offset_min);
        bool night_emitted = false;
        for (int t = 0; t < 86400; t += sc.sample_interval_s) {
            const UtcMillis ts = midnight + static_cast<UtcMillis>(t) * 1000;
            const double s = sin_solar_elevation(sc.latitude_deg, doy, t);
            const double clear =
                clear_sky_lux_from_sin(s, sc.clean_max_lux, sc.cloud_factor);
            state = deposit_step(state, sc.pm10_series[di],
                                 sc.sample_interval_s / 86400.0, sc.dynamics);
            const double eff = effective_blockage(state, s, mean_s, sc.angle);

            // noise draws happen for every instant so the stream layout is
            // independent of daylight
            const double e_open = rng.symmetric(sc.noise_amplitude);
            const double e_glass = rng.symmetric(sc.noise_amplitude);
            const double open_meas = clear * (1.0 + e_open);
            const double glass_meas = clear * (1.0 - eff) * (1.0 + e_glass);
            out.readings.push_back({sc.node_id, ts, SensorRole::Open,
                                    SensorMode::Day, open_meas});
            out.readings.push_back({sc.node_id, ts, SensorRole::UnderGlass,
                                    SensorMode::Day, glass_meas});
            if (clear >= sc.day_validity_floor_lux)
                out.truth.push_back({ts, eff});

            if (!night_emitted && t >= 1800) {
                // one LED reading per night, at 00:30 local; the 500 ms offset
                // keeps (node, ts, role) distinct from the day-mode samples
                const UtcMillis nts = midnight + 1800 * 1000 + 500;
                const double e_led = rng.symmetric(sc.noise_amplitude);
                const double led_meas =
                    sc.led_reference_lux * (1.0 - state.base_blockage) * (1.0 + e_led);
                out.readings.push_back({sc.node_id, nts, SensorRole::UnderGlass,
                                        SensorMode::Night, led_meas});
                out.truth.push_back({nts, state.base_blockage});
                night_emitted = true;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

SimScenario base_scenario() {
    SimScenario sc;  // defaults carry the calibrated constants
    return sc;
}

std::vector<double> constant_series(int days, double v) {
    return std::vector<double>(static_cast<std::size_t>(days), v);
}

}  // namespace

std::vector<std::string> scenario_preset_names() {
    return {"march-33d", "april-month", "june-rain", "six-month"};
}

std::optional<SimScenario> scenario_preset(const std::string& name) {
    SimScenario sc = base_scenario();
    sc.name = name;
    if (name == "april-month") {
        sc.seed = 20240401;
        sc.start_date = {2024, 4, 1};
        sc.end_date = {2024, 4, 30};
        sc.pm10_series = constant_series(30, 110.0);
        sc.rain_series = constant_series(30, 0.0);
        return sc;
    }
    if (name == "march-33d") {
        sc.seed = 20240301;
        sc.start_date = {2024, 3, 1};
        sc.end_date = {2024, 4, 2};  // 33 days
        sc.pm10_series = constant_series(33, 113.8);
        sc.rain_series = constant_series(33, 0.0);
        sc.initial_load = 0.024;
        return sc;
    }
    if (name == "june-rain") {
        sc.seed = 20240601;
        sc.start_date = {2024, 6, 1};
        sc.end_date = {2024, 6, 30};
        sc.pm10_series = constant_series(30, 28.0);
        // 17 rain days, 7 of them >= 20 mm, 303 mm total, dry gap days 15-19
        sc.rain_series = {0,  0, 35, 12, 45, 8, 22, 15, 40, 6, 25, 10, 5, 4, 0,
                          0,  0, 0,  0,  12, 0, 8,  0,  26, 0, 9,  0,  21, 0, 0};
        sc.initial_load = 0.012;
        return sc;
    }
    if (name == "six-month") {
        sc.seed = 20240101;
        sc.start_date = {2024, 1, 1};
        sc.end_date = {2024, 6, 30};
        sc.monthly_reset = true;
        // monthly PM levels fitted so monthly mean blockage tracks the
        // field six-month profile {35,33,33,31,21,18}%
        const double pm[6] = {315.0, 297.0, 278.0, 254.0, 132.0, 111.0};
        const int mdays[6] = {31, 29, 31, 30, 31, 30};
        for (int m = 0; m < 6; ++m)
            for (int d = 0; d < mdays[m]; ++d) sc.pm10_series.push_back(pm[m]);
        sc.rain_series = constant_series(sc.day_count(), 0.0);
        return sc;
    }
    return std::nullopt;
}

SimScenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("scenario: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("scenario: bad JSON in " + path.string() + ": " +
                                 e.what());
    }
    SimScenario sc = base_scenario();
    try {
        sc.name = j.value("name", std::string("custom"));
        sc.seed = j.value("seed", sc.seed);
        sc.latitude_deg = j.value("latitude", sc.latitude_deg);
        if (auto d = parse_date(j.at("start_date").get<std::string>()))
            sc.start_date = *d;
        else
            throw std::runtime_error("bad start_date");
        if (auto d = parse_date(j.at("end_date").get<std::string>()))
            sc.end_date = *d;
        else
            throw std::runtime_error("bad end_date");
        sc.clean_max_lux = j.value("clean_max_lux", sc.clean_max_lux);
        sc.led_reference_lux = j.value("led_reference_lux", sc.led_reference_lux);
        sc.sample_interval_s = j.value("sample_interval_s", sc.sample_interval_s);
        sc.cloud_factor = j.value("cloud_factor", sc.cloud_factor);
        sc.noise_amplitude = j.value("noise_amplitude", sc.noise_amplitude);
        sc.day_validity_floor_lux =
            j.value("day_validity_floor_lux", sc.day_validity_floor_lux);
        sc.utc_offset_min = j.value("utc_offset_min", sc.utc_offset_min);
        sc.initial_load = j.value("initial_load", sc.initial_load);
        sc.monthly_reset = j.value("monthly_reset", sc.monthly_reset);
        sc.node_id = j.value("node_id", sc.node_id);
        if (j.contains("dynamics")) {
            const auto& d = j["dynamics"];
            sc.dynamics.k = d.value("k", sc.dynamics.k);
            sc.dynamics.beta = d.value("beta", sc.dynamics.beta);
            sc.dynamics.b_max = d.value("b_max", sc.dynamics.b_max);
            sc.dynamics.gamma = d.value("gamma", sc.dynamics.gamma);
        }
        if (j.contains("angle")) {
            sc.angle.c0 = j["angle"].value("c0", sc.angle.c0);
            sc.angle.c1 = j["angle"].value("c1", sc.angle.c1);
        }
        const int days = sc.day_count();
        auto series = [&](const char* key, double fallback) {
            if (!j.contains(key)) return constant_series(days, fallback);
            if (j[key].is_number())
                return constant_series(days, j[key].get<double>());
            auto v = j[key].get<std::vector<double>>();
            if (v.size() != static_cast<std::size_t>(days))
                throw std::runtime_error(std::string(key) +
                                         " length must equal day count");
            return v;
        };
        sc.pm10_series = series("pm10", 0.0);
        sc.rain_series = series("rain", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("scenario: " + std::string(e.what()));
    }
    return sc;
}

void save_scenario(const std::filesystem::path& path, const SimScenario& sc) {
    nlohmann::json j;
    j["name"] = sc.name;
    j["seed"] = sc.seed;
    j["latitude"] = sc.latitude_deg;
    j["start_date"] = format_date(sc.start_date);
    j["end_date"] = format_date(sc.end_date);
    j["clean_max_lux"] = sc.clean_max_lux;
    j["led_reference_lux"] = sc.led_reference_lux;
    j["sample_interval_s"] = sc.sample_interval_s;
    j["cloud_factor"] = sc.cloud_factor;
    j["noise_amplitude"] = sc.noise_amplitude;
    j["day_validity_floor_lux"] = sc.day_validity_floor_lux;
    j["utc_offset_min"] = sc.utc_offset_min;
    j["initial_load"] = sc.initial_load;
    j["monthly_reset"] = sc.monthly_reset;
    j["node_id"] = sc.node_id;
    j["dynamics"] = {{"k", sc.dynamics.k},
                     {"beta", sc.dynamics.beta},
                     {"b_max", sc.dynamics.b_max},
                     {"gamma", sc.dynamics.gamma}};
    j["angle"] = {{"c0", sc.angle.c0}, {"c1", sc.angle.c1}};
    j["pm10"] = sc.pm10_series;
    j["rain"] = sc.rain_series;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("scenario: cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::string format_wire_line(const LuxReading& r) {
    char lux[40];
    std::snprintf(lux, sizeof(lux), "%.3f", r.lux);
    std::string line = "{\"node\":\"";
    line += r.node_id;
    line += "\",\"ts\":\"";
    line += format_rfc3339(r.timestamp);
    line += "\",\"role\":\"";
    line += r.role == SensorRole::Open ? "open" : "glass";
    line += "\",\"mode\":\"";
    line += r.mode == SensorMode::Day ? "day" : "night";
    line += "\",\"lux\":";
    line += lux;
    line += "}";
    return line;
}

void write_stream_files(const std::filesystem::path& out_dir,
                        const GeneratedStream& stream) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "stream.jsonl", std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write stream.jsonl");
        for (const LuxReading& r : stream.readings)
            out << format_wire_line(r) << '\n';
    }
    {
        std::ofstream out(out_dir / "truth.csv", std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write truth.csv");
        out << "ts,true_blockage\n";
        char buf[40];
        for (const TruthPoint& p : stream.truth) {
            std::snprintf(buf, sizeof(buf), "%.9f", p.blockage);
            out << format_rfc3339(p.timestamp) << ',' << buf << '\n';
        }
    }
}

}  // namespace soildet
