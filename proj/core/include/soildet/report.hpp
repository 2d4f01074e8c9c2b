#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "soildet/soiling.hpp"

namespace soildet {

/// One derived-log row: a blockage point plus its node.
struct DerivedPoint {
    BlockagePoint point;
    std::string node;
};

/// Read `ts,node,mode,blockage` CSV rows from a file or a directory of
/// partition files (sorted). Corrupt rows are skipped.
std::vector<DerivedPoint> load_derived_points(const std::filesystem::path& path);

/// Daily and monthly tables, plots and a text summary derived from one point
/// set; summary totals always equal the table aggregates.
struct ReportBundle {
    std::vector<DailySummary> daily;
    std::vector<MonthlySummary> monthly;
    std::string summary_text;
    std::size_t total_points = 0;
};

ReportBundle make_report(std::span<const DerivedPoint> points, int utc_offset_min);

/// Writes daily.csv, monthly.csv, blockage_daily.svg, blockage_monthly.svg
/// and summary.txt under `out_dir`.
void save_report_bundle(const std::filesystem::path& out_dir,
                        const ReportBundle& bundle);

/// Minimal dependency-free SVG line chart; values are (label, y) pairs.
void write_svg_line_chart(const std::filesystem::path& path,
                          const std::string& title,
                          const std::vector<std::pair<std::string, double>>& series,
                          const std::string& y_label);

}  // namespace soildet
