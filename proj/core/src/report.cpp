#include "soildet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace soildet {

namespace {

bool parse_derived_row(const std::string& line, DerivedPoint& out) {
    // ts,node,mode,blockage
    std::size_t c1 = line.find(',');
    if (c1 == std::string::npos) return false;
    std::size_t c2 = line.find(',', c1 + 1);
    if (c2 == std::string::npos) return false;
    std::size_t c3 = line.find(',', c2 + 1);
    if (c3 == std::string::npos) return false;
    auto ts = parse_rfc3339(line.substr(0, c1));
    if (!ts) return false;
    out.node = line.substr(c1 + 1, c2 - c1 - 1);
    const std::string mode = line.substr(c2 + 1, c3 - c2 - 1);
    if (mode == "day")
        out.point.mode = SensorMode::Day;
    else if (mode == "night")
        out.point.mode = SensorMode::Night;
    else
        return false;
    const std::string value = line.substr(c3 + 1);
    char* end = nullptr;
    const double blockage = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || !std::isfinite(blockage)) return false;
    out.point.timestamp = *ts;
    out.point.blockage = blockage;
    return true;
}

void append_file(const std::filesystem::path& path,
                 std::vector<DerivedPoint>& points) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        DerivedPoint p;
        if (parse_derived_row(line, p)) points.push_back(std::move(p));
    }
}

}  // namespace

std::vector<DerivedPoint> load_derived_points(const std::filesystem::path& path) {
    std::vector<DerivedPoint> points;
    if (std::filesystem::is_directory(path)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".csv")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) append_file(f, points);
    } else if (std::filesystem::exists(path)) {
        append_file(path, points);
    }
    return points;
}

ReportBundle make_report(std::span<const DerivedPoint> points, int utc_offset_min) {
    ReportBundle bundle;
    bundle.total_points = points.size();

    std::vector<BlockagePoint> bare;
    bare.reserve(points.size());
    for (const DerivedPoint& p : points) bare.push_back(p.point);
    const auto daily_map = group_daily(bare, utc_offset_min);
    for (const auto& [date, summary] : daily_map) bundle.daily.push_back(summary);

    // group daily summaries by month
    std::vector<DailySummary> month_bucket;
    auto flush_month = [&]() {
        if (!month_bucket.empty()) {
            bundle.monthly.push_back(monthly_aggregate(month_bucket));
            month_bucket.clear();
        }
    };
    for (const DailySummary& d : bundle.daily) {
        if (!month_bucket.empty() &&
            (month_bucket.back().date.year != d.date.year ||
             month_bucket.back().date.month != d.date.month))
            flush_month();
        month_bucket.push_back(d);
    }
    flush_month();

    std::ostringstream txt;
    txt << "points: " << bundle.total_points << '\n';
    txt << "days: " << bundle.daily.size() << '\n';
    if (!bundle.daily.empty()) {
        double weighted = 0.0;
        std::size_t n = 0;
        const DailySummary* peak_day = &bundle.daily.front();
        for (const DailySummary& d : bundle.daily) {
            weighted += d.mean_blockage * static_cast<double>(d.sample_count);
            n += d.sample_count;
            if (d.peak_blockage > peak_day->peak_blockage) peak_day = &d;
        }
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4f", n ? weighted / static_cast<double>(n) : 0.0);
        txt << "overall_mean_blockage: " << buf << '\n';
        std::snprintf(buf, sizeof(buf), "%.4f", peak_day->peak_blockage);
        txt << "peak_blockage: " << buf << " on " << format_date(peak_day->date)
            << '\n';
        txt << "period: " << format_date(bundle.daily.front().date) << " .. "
            << format_date(bundle.daily.back().date) << '\n';
    } else {
        txt << "overall_mean_blockage: 0.0000\n";
        txt << "period: none\n";
    }
    bundle.summary_text = txt.str();
    return bundle;
}

void write_svg_line_chart(const std::filesystem::path& path,
                          const std::string& title,
                          const std::vector<std::pair<std::string, double>>& series,
                          const std::string& y_label) {
    const int width = 960, height = 320;
    const int ml = 60, mr = 20, mt = 30, mb = 40;
    const int plot_w = width - ml - mr, plot_h = height - mt - mb;

    double ymax = 0.0;
    for (const auto& [label, v] : series) ymax = std::max(ymax, v);
    if (ymax <= 0.0) ymax = 1.0;
    ymax *= 1.1;

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("svg: cannot write " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
        << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
        << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\""
        << ml + plot_w << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\"/>\n";
    out << "<text x=\"14\" y=\"" << mt + plot_h / 2
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
        << "transform=\"rotate(-90 14 " << mt + plot_h / 2 << ")\" "
        << "text-anchor=\"middle\">" << y_label << "</text>\n";
    // y ticks
    for (int i = 0; i <= 4; ++i) {
        const double v = ymax * i / 4.0;
        const int y = mt + plot_h - static_cast<int>(plot_h * i / 4.0);
        char lbl[32];
        std::snprintf(lbl, sizeof(lbl), "%.1f", v);
        out << "<line x1=\"" << ml - 4 << "\" y1=\"" << y << "\" x2=\"" << ml
            << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
            << "font-size=\"10\">" << lbl << "</text>\n";
    }

    if (series.empty()) {
        out << "<text x=\"" << width / 2 << "\" y=\"" << mt + plot_h / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            << "font-size=\"12\">no data</text>\n</svg>\n";
        return;
    }

    const double step =
        series.size() > 1 ? static_cast<double>(plot_w) / (series.size() - 1) : 0.0;
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double x = ml + step * static_cast<double>(i);
        const double y = mt + plot_h - plot_h * (series[i].second / ymax);
        char pt[48];
        std::snprintf(pt, sizeof(pt), "%.1f,%.1f ", x, y);
        out << pt;
    }
    out << "\"/>\n";
    // sparse x labels
    const std::size_t label_every = std::max<std::size_t>(1, series.size() / 8);
    for (std::size_t i = 0; i < series.size(); i += label_every) {
        const double x = ml + step * static_cast<double>(i);
        out << "<text x=\"" << x << "\" y=\"" << mt + plot_h + 16
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            << "font-size=\"9\">" << series[i].first << "</text>\n";
    }
    out << "</svg>\n";
}

void save_report_bundle(const std::filesystem::path& out_dir,
                        const ReportBundle& bundle) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "daily.csv", std::ios::trunc);
        out << "date,mean_blockage,peak_blockage,min_blockage,samples\n";
        char buf[96];
        for (const DailySummary& d : bundle.daily) {
            std::snprintf(buf, sizeof(buf), ",%.9f,%.9f,%.9f,%zu", d.mean_blockage,
                          d.peak_blockage, d.min_blockage, d.sample_count);
            out << format_date(d.date) << buf << '\n';
        }
    }
    {
        std::ofstream out(out_dir / "monthly.csv", std::ios::trunc);
        out << "year,month,mean_blockage,days,samples\n";
        char buf[96];
        for (const MonthlySummary& m : bundle.monthly) {
            std::snprintf(buf, sizeof(buf), "%d,%u,%.9f,%zu,%zu", m.year, m.month,
                          m.mean_blockage, m.day_count, m.sample_count);
            out << buf << '\n';
        }
    }
    {
        std::vector<std::pair<std::string, double>> daily_series;
        for (const DailySummary& d : bundle.daily)
            daily_series.emplace_back(format_date(d.date), d.mean_blockage * 100.0);
        write_svg_line_chart(out_dir / "blockage_daily.svg",
                             "Daily mean blockage", daily_series, "blockage %");
        std::vector<std::pair<std::string, double>> monthly_series;
        for (const MonthlySummary& m : bundle.monthly) {
            char lbl[16];
            std::snprintf(lbl, sizeof(lbl), "%04d-%02u", m.year, m.month);
            monthly_series.emplace_back(lbl, m.mean_blockage * 100.0);
        }
        write_svg_line_chart(out_dir / "blockage_monthly.svg",
                             "Monthly mean blockage", monthly_series, "blockage %");
    }
    {
        std::ofstream out(out_dir / "summary.txt", std::ios::trunc);
        out << bundle.summary_text;
    }
}

}  // namespace soildet
