#include "soildet/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nlohmann/json.hpp"

namespace soildet {

namespace {

double curve(double day, double u, double d0, double b_max) {
    return b_max * (1.0 - std::exp(-(d0 + u * (day - 0.5))));
}

struct Sse {
    double sse = 0.0;
    double b_max = 0.0;
};

// closed-form least-squares b_max for fixed (u, d0), clamped to (0, 1]
Sse evaluate(std::span<const std::pair<double, double>> targets, double u,
             double d0) {
    double num = 0.0, den = 0.0;
    for (auto [day, frac] : targets) {
        const double f = 1.0 - std::exp(-(d0 + u * (day - 0.5)));
        num += f * frac;
        den += f * f;
    }
    Sse r;
    r.b_max = den > 0.0 ? std::clamp(num / den, 1e-6, 1.0) : 1.0;
    for (auto [day, frac] : targets) {
        const double e = curve(day, u, d0, r.b_max) - frac;
        r.sse += e * e;
    }
    return r;
}

}  // namespace

CalibrationTargets load_targets(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CalibrationError("targets: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CalibrationError("targets: bad JSON: " + std::string(e.what()));
    }
    CalibrationTargets t;
    try {
        for (const auto& row : j.at("days")) {
            if (!row.is_array() || row.size() != 2)
                throw CalibrationError("targets: each day entry must be [day, pct]");
            t.day_targets.emplace_back(row[0].get<double>(),
                                       row[1].get<double>() / 100.0);
        }
        if (j.contains("intraday")) {
            IntradayAnchors a;
            const auto& i = j["intraday"];
            a.anchor_day = i.value("anchor_day", 7);
            a.midday = i.at("midday_pct").get<double>() / 100.0;
            a.afternoon = i.at("afternoon_pct").get<double>() / 100.0;
            t.intraday = a;
        }
        if (j.contains("pm10")) t.reference_pm10 = j["pm10"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw CalibrationError("targets: " + std::string(e.what()));
    }
    return t;
}

DepositionFit fit_deposition(std::span<const std::pair<double, double>> day_targets,
                             double reference_pm10, double gamma) {
    if (day_targets.empty())
        throw CalibrationError("fit_deposition: no day targets");
    if (!(reference_pm10 > 0.0))
        throw CalibrationError("fit_deposition: reference pm10 must be > 0");

    std::vector<std::pair<double, double>> targets(day_targets.begin(),
                                                   day_targets.end());
    std::sort(targets.begin(), targets.end());
    for (std::size_t i = 1; i < targets.size(); ++i) {
        if (targets[i].second < targets[i - 1].second)
            throw CalibrationError(
                "fit_deposition: decreasing targets are infeasible without rain");
    }

    DepositionFit fit;
    fit.dynamics.beta = 1.0;  // only beta*k and beta*load are observable
    fit.dynamics.gamma = gamma;

    if (targets.size() == 1) {
        fit.warnings.push_back(
            "underdetermined: single target, b_max kept at default");
        const auto [day, frac] = targets[0];
        const double b_max = fit.dynamics.b_max;
        if (frac >= b_max)
            throw CalibrationError("fit_deposition: target above saturation level");
        // solve u for the single anchor, d0 = 0
        const double u = -std::log(1.0 - frac / b_max) / (day - 0.5);
        fit.dynamics.k = u / reference_pm10;
        fit.initial_load = 0.0;
        fit.residuals.push_back(0.0);
        return fit;
    }

    double best_sse = 1e30, best_u = 0.01, best_d0 = 0.0, best_bmax = 0.5;
    for (double u = 1e-4; u < 1.0; u *= 1.05) {
        for (double d0 = 0.0; d0 <= 0.51; d0 += 0.01) {
            const Sse r = evaluate(targets, u, d0);
            if (r.sse < best_sse) {
                best_sse = r.sse;
                best_u = u;
                best_d0 = d0;
                best_bmax = r.b_max;
            }
        }
    }
    // coordinate-descent refinement
    double step_u = best_u * 0.05, step_d = 0.005;
    for (int iter = 0; iter < 200; ++iter) {
        bool improved = false;
        for (double du : {step_u, -step_u}) {
            const double u = best_u + du;
            if (u <= 0) continue;
            const Sse r = evaluate(targets, u, best_d0);
            if (r.sse < best_sse) {
                best_sse = r.sse;
                best_u = u;
                best_bmax = r.b_max;
                improved = true;
            }
        }
        for (double dd : {step_d, -step_d}) {
            const double d0 = best_d0 + dd;
            if (d0 < 0) continue;
            const Sse r = evaluate(targets, best_u, d0);
            if (r.sse < best_sse) {
                best_sse = r.sse;
                best_d0 = d0;
                best_bmax = r.b_max;
                improved = true;
            }
        }
        if (!improved) {
            step_u *= 0.5;
            step_d *= 0.5;
            if (step_u < best_u * 1e-7 && step_d < 1e-7) break;
        }
    }

    fit.dynamics.k = best_u / reference_pm10;
    fit.dynamics.b_max = best_bmax;
    fit.initial_load = best_d0;
    for (auto [day, frac] : targets)
        fit.residuals.push_back(curve(day, best_u, best_d0, best_bmax) - frac);
    return fit;
}

double fit_angle_gain(const IntradayAnchors& anchors, double anchor_base,
                      const SimScenario& ref) {
    if (!(anchor_base > 0.0))
        throw CalibrationError("fit_angle_gain: anchor base must be > 0");
    const std::int64_t day_index =
        days_from_civil(ref.start_date) + anchors.anchor_day - 1;
    const int doy = day_of_year(civil_from_days(day_index));

    double mean_s = 0.0, noon_s = 0.0;
    int count = 0, t_last = -1;
    for (int t = 0; t < 86400; t += ref.sample_interval_s) {
        const double s = sin_solar_elevation(ref.latitude_deg, doy, t);
        if (clear_sky_lux_from_sin(s, ref.clean_max_lux, ref.cloud_factor) <
            ref.day_validity_floor_lux)
            continue;
        mean_s += std::max(0.0, s);
        noon_s = std::max(noon_s, s);
        t_last = t;
        ++count;
    }
    if (count == 0)
        throw CalibrationError("fit_angle_gain: no valid daylight samples");
    mean_s /= count;

    double last_s = 0.0;
    int last_count = 0;
    for (int t = 0; t < 86400; t += ref.sample_interval_s) {
        if (t <= t_last - 3600 || t > t_last) continue;
        const double s = sin_solar_elevation(ref.latitude_deg, doy, t);
        if (clear_sky_lux_from_sin(s, ref.clean_max_lux, ref.cloud_factor) <
            ref.day_validity_floor_lux)
            continue;
        last_s += std::max(0.0, s);
        ++last_count;
    }
    last_s /= std::max(1, last_count);

    // factor(s) = 1 + lambda*(s - mean_s); least squares over the two anchors
    const double an = anchor_base * (noon_s - mean_s);
    const double bn = anchors.midday - anchor_base;
    const double al = anchor_base * (last_s - mean_s);
    const double bl = anchors.afternoon - anchor_base;
    const double denom = an * an + al * al;
    if (denom <= 0.0) throw CalibrationError("fit_angle_gain: flat elevation profile");
    const double lambda = (an * bn + al * bl) / denom;
    if (lambda <= 0.0) return 0.0;  // anchors do not support an angle effect
    const double c1 = lambda / (1.0 - lambda * mean_s);
    return std::max(0.0, c1);
}

CalibrationResult calibrate(const CalibrationTargets& targets,
                            const SimScenario& scenario_template) {
    double ref_pm = 0.0;
    if (targets.reference_pm10) {
        ref_pm = *targets.reference_pm10;
    } else if (!scenario_template.pm10_series.empty()) {
        for (double p : scenario_template.pm10_series) ref_pm += p;
        ref_pm /= static_cast<double>(scenario_template.pm10_series.size());
    }
    if (!(ref_pm > 0.0))
        throw CalibrationError("calibrate: no reference pm10 available");

    CalibrationResult result;
    result.deposition =
        fit_deposition(targets.day_targets, ref_pm, scenario_template.dynamics.gamma);
    result.scenario = scenario_template;
    result.scenario.dynamics = result.deposition.dynamics;
    result.scenario.initial_load = result.deposition.initial_load;

    if (targets.intraday) {
        double anchor_base = 0.0;
        for (auto [day, frac] : targets.day_targets)
            if (static_cast<int>(day) == targets.intraday->anchor_day)
                anchor_base = frac;
        if (anchor_base == 0.0)
            throw CalibrationError(
                "calibrate: intraday anchor_day has no matching day target");
        const double c1 =
            fit_angle_gain(*targets.intraday, anchor_base, result.scenario);
        result.scenario.angle = AngleModel{1.0, c1};
        result.fitted_c1 = c1;
    }
    return result;
}

}  // namespace soildet
