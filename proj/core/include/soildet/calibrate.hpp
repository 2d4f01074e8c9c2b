#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "soildet/sim.hpp"

namespace soildet {

struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Midday/afternoon loss anchors tied to the day whose target supplies the
/// base level (all fractions).
struct IntradayAnchors {
    int anchor_day = 7;
    double midday = 0.0986;
    double afternoon = 0.0617;
};

struct CalibrationTargets {
    std::vector<std::pair<double, double>> day_targets;  // (day index, fraction)
    std::optional<IntradayAnchors> intraday;
    std::optional<double> reference_pm10;
};

/// Targets file: {"days":[[7,8.44],...], "intraday":{"anchor_day":7,
/// "midday_pct":9.86,"afternoon_pct":6.17}, "pm10":110}. Percents in the
/// file, fractions in the struct.
CalibrationTargets load_targets(const std::filesystem::path& path);

struct DepositionFit {
    SoilingDynamics dynamics;
    double initial_load = 0.0;
    std::vector<double> residuals;  // fraction, per day target
    std::vector<std::string> warnings;
};

/// Least-squares fit of (k*beta*pm, b_max, initial load) to day targets on the
/// saturating-deposition curve evaluated at day midpoints. Throws
/// CalibrationError when targets decrease (nothing removes dust without rain).
DepositionFit fit_deposition(std::span<const std::pair<double, double>> day_targets,
                             double reference_pm10, double gamma = 0.08);

/// Least-squares angle gain from the intraday anchors against the anchor
/// day's base level; returns c1 for AngleModel{c0 = 1}.
double fit_angle_gain(const IntradayAnchors& anchors, double anchor_base,
                      const SimScenario& reference);

struct CalibrationResult {
    SimScenario scenario;
    DepositionFit deposition;
    std::optional<double> fitted_c1;
};

/// Full calibration: fit constants from targets and stamp them into a copy of
/// the template scenario.
CalibrationResult calibrate(const CalibrationTargets& targets,
                            const SimScenario& scenario_template);

}  // namespace soildet
