// soildet: PV soiling detection toolkit CLI.
//
// Subcommands: simulate | serve | replay | analyze | classify-image | detect |
//              eval-iou | calibrate
// Exit codes: 0 success, 1 usage error, 2 data/runtime error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"

#include "soildet/calibrate.hpp"
#include "soildet/detection.hpp"
#include "soildet/image.hpp"
#include "soildet/pnm.hpp"
#include "soildet/report.hpp"
#include "soildet/service.hpp"
#include "soildet/sim.hpp"
#include "soildet/store.hpp"

namespace fs = std::filesystem;
using namespace soildet;

namespace {

std::atomic<TelemetryService*> g_service{nullptr};

void handle_signal(int) {
    if (TelemetryService* svc = g_service.load()) svc->stop();
}

UtcMillis wall_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

SimScenario resolve_scenario(const std::string& name_or_file) {
    if (auto preset = scenario_preset(name_or_file)) return *preset;
    if (fs::exists(name_or_file)) return load_scenario(name_or_file);
    std::string names;
    for (const auto& n : scenario_preset_names()) names += " " + n;
    throw std::runtime_error("unknown scenario '" + name_or_file +
                             "' (built-ins:" + names + ")");
}

// POST one line to <base>/ingest
bool post_line(const std::string& base_url, const std::string& line) {
    std::string base = base_url, path = "/ingest";
    const std::string scheme = "http://";
    if (base.rfind(scheme, 0) != 0) base = scheme + base;
    httplib::Client client(base);
    client.set_connection_timeout(5, 0);
    auto res = client.Post(path, line + "\n", "application/json");
    return res && res->status >= 200 && res->status < 300;
}

std::string stream_post_line(const std::string& node, const std::string& stream,
                             double value) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "{\"node\":\"%s\",\"ts\":\"%s\",\"stream\":\"%s\",\"value\":%g}",
                  node.c_str(), format_rfc3339(wall_clock_ms()).c_str(),
                  stream.c_str(), value);
    return buf;
}

int cmd_simulate(const std::string& scenario_arg, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, std::optional<int> interval) {
    SimScenario sc = resolve_scenario(scenario_arg);
    if (seed) sc.seed = *seed;
    if (interval) sc.sample_interval_s = *interval;
    const GeneratedStream stream = generate_stream(sc);
    write_stream_files(out_dir, stream);
    save_scenario(fs::path(out_dir) / "scenario.json", sc);
    std::cout << "scenario: " << sc.name << "\n"
              << "days: " << sc.day_count() << "\n"
              << "readings: " << stream.readings.size() << "\n"
              << "truth points: " << stream.truth.size() << "\n"
              << "wrote: " << out_dir << "/stream.jsonl, truth.csv, scenario.json\n";
    return 0;
}

int cmd_serve(ServiceConfig cfg) {
    TelemetryService service(std::move(cfg));
    service.start();
    g_service.store(&service);
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    std::cout << "listening http=" << service.http_port();
    if (service.tcp_port() > 0) std::cout << " tcp=" << service.tcp_port();
    std::cout << std::endl;
    service.wait();
    g_service.store(nullptr);
    std::cout << "stopped\n";
    return 0;
}

int cmd_replay(const std::string& raw_dir, StoreConfig cfg) {
    IngestStore store(std::move(cfg));
    const auto counters = replay_raw_logs(raw_dir, store);
    for (const auto& [k, v] : counters) std::cout << k << ": " << v << "\n";
    return 0;
}

int cmd_analyze(const std::string& derived, const std::string& out_dir,
                int utc_offset_min) {
    const auto points = load_derived_points(derived);
    const ReportBundle bundle = make_report(points, utc_offset_min);
    save_report_bundle(out_dir, bundle);
    std::cout << bundle.summary_text;
    std::cout << "wrote: " << out_dir
              << "/daily.csv, monthly.csv, blockage_daily.svg, "
                 "blockage_monthly.svg, summary.txt\n";
    return 0;
}

int cmd_classify_image(const std::string& path, PipelineOptions opts,
                       const std::string& post_url, const std::string& node) {
    const RasterImage img = load_pnm(path);
    const PipelineResult result = run_dust_pipeline(img, opts);
    char ratio[32];
    std::snprintf(ratio, sizeof(ratio), "%.6f", result.report.black_ratio);
    std::cout << "black_pixels: " << result.report.black_pixels << "\n"
              << "white_pixels: " << result.report.white_pixels << "\n"
              << "black_ratio: " << ratio << " (" << result.report.black_ratio * 100.0
              << "%)\n"
              << "class: " << to_string(result.dust_class) << "\n";
    if (!post_url.empty()) {
        const double value = static_cast<double>(result.dust_class);
        if (!post_line(post_url,
                       stream_post_line(node, "image_class", value))) {
            std::cerr << "error: datastream post failed\n";
            return 2;
        }
        std::cout << "posted: " << node << "/image_class = " << value << "\n";
    }
    return 0;
}

int cmd_detect(const std::string& path, PipelineOptions opts, int min_area,
               const std::string& pred_out, const std::string& post_url,
               const std::string& node) {
    const RasterImage img = load_pnm(path);
    const PipelineResult result = run_dust_pipeline(img, opts);
    const auto boxes = connected_components(result.binary, min_area);
    const std::string image_id = fs::path(path).filename().string();
    std::cout << "detections: " << boxes.size() << "\n";
    for (const BoundingBox& b : boxes) {
        char line[128];
        std::snprintf(line, sizeof(line), "  (%.1f, %.1f, %.1f, %.1f) area=%.0f\n",
                      b.xmin, b.ymin, b.xmax, b.ymax, b.area());
        std::cout << line;
    }
    if (!pred_out.empty()) {
        std::ofstream out(pred_out, std::ios::trunc);
        if (!out) {
            std::cerr << "error: cannot write " << pred_out << "\n";
            return 2;
        }
        char line[160];
        for (const BoundingBox& b : boxes) {
            std::snprintf(line, sizeof(line), "%s %.17g %.17g %.17g %.17g\n",
                          image_id.c_str(), b.xmin, b.ymin, b.xmax, b.ymax);
            out << line;
        }
    }
    if (!post_url.empty()) {
        // detection flag convention: 1 when anything was detected, else 0
        const double value = boxes.empty() ? 0.0 : 1.0;
        if (!post_line(post_url, stream_post_line(node, "detect", value))) {
            std::cerr << "error: datastream post failed\n";
            return 2;
        }
        std::cout << "posted: " << node << "/detect = " << value << "\n";
    }
    return 0;
}

struct PredBox {
    std::string image_id;
    BoundingBox box;
};

std::vector<PredBox> load_pred_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pred file " + path);
    std::vector<PredBox> preds;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        PredBox p;
        double confidence;  // optional trailing column, accepted and ignored
        if (!(ss >> p.image_id >> p.box.xmin >> p.box.ymin >> p.box.xmax >>
              p.box.ymax))
            throw std::runtime_error("pred file line " + std::to_string(line_no) +
                                     ": want <image_id> <xmin> <ymin> <xmax> <ymax>");
        ss >> confidence;
        if (!p.box.valid())
            throw std::runtime_error("pred file line " + std::to_string(line_no) +
                                     ": degenerate box");
        preds.push_back(std::move(p));
    }
    return preds;
}

int cmd_eval_iou(const std::string& pred_path, const std::string& voc_path,
                 double threshold, const std::string& out_path) {
    // ground truth, keyed by <filename> and by xml stem
    std::map<std::string, Annotation> gt;
    auto add_voc = [&](const fs::path& file) {
        std::ifstream in(file);
        if (!in) throw std::runtime_error("cannot open " + file.string());
        std::stringstream buf;
        buf << in.rdbuf();
        Annotation ann = parse_voc(buf.str());
        if (!ann.image_id.empty()) gt[ann.image_id] = ann;
        gt[file.stem().string()] = std::move(ann);
    };
    if (fs::is_directory(voc_path)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(voc_path))
            if (e.is_regular_file() && e.path().extension() == ".xml")
                files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) add_voc(f);
    } else {
        add_voc(voc_path);
    }

    const auto preds = load_pred_file(pred_path);
    std::map<std::string, std::vector<BoundingBox>> preds_by_image;
    for (const PredBox& p : preds) preds_by_image[p.image_id].push_back(p.box);

    std::ostringstream report;
    std::size_t tp = 0, fp = 0, fn = 0;
    std::map<std::string, bool> gt_seen;
    for (const auto& [image_id, boxes] : preds_by_image) {
        auto it = gt.find(image_id);
        if (it == gt.end()) {
            const std::string stem = fs::path(image_id).stem().string();
            it = gt.find(stem);
        }
        std::vector<BoundingBox> gt_boxes;
        if (it != gt.end()) {
            for (const LabeledBox& lb : it->second.boxes) gt_boxes.push_back(lb.box);
            gt_seen[it->first] = true;
        }
        const MatchReport match = match_detections(boxes, gt_boxes, threshold);
        tp += match.true_positives;
        fp += match.false_positives;
        fn += match.false_negatives;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            EvalLine line;
            line.image_id = image_id;
            line.detection_index = i + 1;
            double best = -1.0;
            for (const BoundingBox& g : gt_boxes) {
                const IouComponents c = iou_components(boxes[i], g);
                if (c.iou > best) {
                    best = c.iou;
                    line.components = c;
                }
            }
            if (gt_boxes.empty()) line.components = {0.0, 0.0, boxes[i].area()};
            for (const MatchPair& mp : match.pairs)
                if (mp.pred_index == i) line.matched = true;
            write_eval_line(report, line);
        }
    }
    // images with ground truth but no predictions at all
    for (const auto& [key, ann] : gt) {
        if (key != ann.image_id) continue;  // count each annotation once
        if (!gt_seen.count(key) && !gt_seen.count(fs::path(key).stem().string()))
            fn += ann.boxes.size();
    }
    char summary[160];
    const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    std::snprintf(summary, sizeof(summary),
                  "TP=%zu FP=%zu FN=%zu precision=%.4f recall=%.4f threshold=%.2f\n",
                  tp, fp, fn, precision, recall, threshold);
    report << summary;

    if (out_path.empty()) {
        std::cout << report.str();
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << report.str();
        std::cout << summary;
    }
    return 0;
}

int cmd_calibrate(const std::string& targets_path, const std::string& out_path,
                  const std::string& template_name) {
    const CalibrationTargets targets = load_targets(targets_path);
    const SimScenario tmpl = resolve_scenario(template_name);
    const CalibrationResult result = calibrate(targets, tmpl);
    for (const std::string& w : result.deposition.warnings)
        std::cout << "warning: " << w << "\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "k=%.8g beta=%.8g b_max=%.8g gamma=%.8g",
                  result.scenario.dynamics.k, result.scenario.dynamics.beta,
                  result.scenario.dynamics.b_max, result.scenario.dynamics.gamma);
    std::cout << buf << "\n";
    std::snprintf(buf, sizeof(buf), "c0=%.8g c1=%.8g initial_load=%.8g",
                  result.scenario.angle.c0, result.scenario.angle.c1,
                  result.scenario.initial_load);
    std::cout << buf << "\n";
    std::cout << "residuals (pp):";
    for (double r : result.deposition.residuals) {
        std::snprintf(buf, sizeof(buf), " %+.3f", r * 100.0);
        std::cout << buf;
    }
    std::cout << "\n";
    save_scenario(out_path, result.scenario);
    std::cout << "wrote: " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PV soiling detection toolkit"};
    app.require_subcommand(1);

    std::string config_path, data_dir = "data";
    std::optional<std::uint64_t> seed;
    int timezone_min = 360;
    app.add_option("--config", config_path, "service config JSON");
    app.add_option("--data-dir", data_dir, "data directory (default: data)");
    app.add_option("--seed", seed, "override scenario seed");
    app.add_option("--timezone", timezone_min,
                   "site UTC offset in minutes (default 360 = UTC+6)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a sensor stream");
    std::string scenario_arg, out_dir = "sim-out";
    std::optional<int> interval;
    sim->add_option("--scenario", scenario_arg,
                    "preset name or scenario JSON file")->required();
    sim->add_option("--out", out_dir, "output directory");
    sim->add_option("--interval", interval, "sample interval seconds");

    // serve
    auto* serve = app.add_subcommand("serve", "run the ingestion service");
    std::string bind = "127.0.0.1", rules_file;
    int http_port = 8080, tcp_port = -1;
    std::int64_t window_ms = kDefaultPairingWindowMs;
    double floor_lux = kDefaultDayValidityFloorLux, led_default = 800.0;
    bool no_alerts = false;
    serve->add_option("--bind", bind, "bind address");
    serve->add_option("--http-port", http_port, "HTTP port (0 = ephemeral)");
    serve->add_option("--tcp-port", tcp_port,
                      "TCP line-protocol port (-1 off, 0 ephemeral)");
    serve->add_option("--rules", rules_file, "alert rules file (JSON lines)");
    serve->add_option("--window", window_ms, "pairing window ms");
    serve->add_option("--floor", floor_lux, "day validity floor lux");
    serve->add_option("--led-default", led_default,
                      "default LED reference lux (0 disables night mode)");
    serve->add_flag("--no-alerts", no_alerts, "disable alert evaluation");

    // replay
    auto* replay = app.add_subcommand("replay", "re-ingest raw logs");
    std::string raw_dir;
    replay->add_option("--raw", raw_dir, "raw log directory")->required();
    replay->add_option("--window", window_ms, "pairing window ms");
    replay->add_option("--floor", floor_lux, "day validity floor lux");
    replay->add_option("--led-default", led_default, "default LED reference lux");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "aggregate a derived log");
    std::string derived_path, analyze_out = "report";
    analyze->add_option("--derived", derived_path,
                        "derived CSV file or directory")->required();
    analyze->add_option("--out", analyze_out, "report output directory");

    // classify-image
    auto* classify = app.add_subcommand("classify-image",
                                        "pixel-ratio dust classification");
    std::string image_path, post_url, post_node = "cam1";
    std::vector<int> crop_rect;
    int radius = 15, threshold = kDefaultBinarizeThreshold;
    classify->add_option("image", image_path, "PGM/PPM image")->required();
    classify->add_option("--crop", crop_rect, "crop rectangle: x y w h")
        ->expected(4);
    classify->add_option("--radius", radius, "enhancement radius");
    classify->add_option("--threshold", threshold, "binarize threshold");
    classify->add_option("--post", post_url, "service base URL to post result");
    classify->add_option("--node", post_node, "node id for datastream posts");

    // detect
    auto* detect = app.add_subcommand("detect", "blob detector (dark regions)");
    std::string det_image, pred_out;
    int min_area = 25;
    detect->add_option("image", det_image, "PGM/PPM image")->required();
    detect->add_option("--min-area", min_area, "minimum region area (pixels)");
    detect->add_option("--radius", radius, "enhancement radius");
    detect->add_option("--threshold", threshold, "binarize threshold");
    detect->add_option("--pred-out", pred_out, "write predictions file");
    detect->add_option("--post", post_url, "service base URL to post result");
    detect->add_option("--node", post_node, "node id for datastream posts");

    // eval-iou
    auto* eval = app.add_subcommand("eval-iou", "IoU evaluation against VOC");
    std::string pred_path, voc_path, eval_out;
    double iou_threshold = kDefaultIouThreshold;
    eval->add_option("--pred", pred_path, "predictions file")->required();
    eval->add_option("--voc", voc_path, "VOC XML file or directory")->required();
    eval->add_option("--threshold", iou_threshold, "IoU match threshold");
    eval->add_option("--out", eval_out, "report file (default stdout)");

    // calibrate
    auto* calib = app.add_subcommand("calibrate", "fit simulator constants");
    std::string targets_path, calib_out = "calibrated.json",
                template_name = "april-month";
    calib->add_option("--targets", targets_path, "targets JSON file")->required();
    calib->add_option("--out", calib_out, "output scenario file");
    calib->add_option("--template", template_name, "template preset or file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return cmd_simulate(scenario_arg, out_dir, seed, interval);
        if (serve->parsed()) {
            ServiceConfig cfg;
            if (!config_path.empty()) cfg = load_service_config(config_path);
            if (serve->count("--bind") || config_path.empty()) cfg.bind_address = bind;
            if (serve->count("--http-port") || config_path.empty())
                cfg.http_port = http_port;
            if (serve->count("--tcp-port") || config_path.empty())
                cfg.tcp_port = tcp_port;
            if (app.count("--data-dir") || cfg.store.data_dir.empty())
                cfg.store.data_dir = data_dir;
            if (app.count("--timezone")) cfg.store.utc_offset_min = timezone_min;
            if (serve->count("--window")) cfg.store.pairing_window_ms = window_ms;
            if (serve->count("--floor")) cfg.store.day_validity_floor_lux = floor_lux;
            if (serve->count("--led-default") || !cfg.store.led_reference_default)
                if (led_default > 0.0) cfg.store.led_reference_default = led_default;
            if (!rules_file.empty()) cfg.rules = load_rules(rules_file);
            if (no_alerts) cfg.alerts_enabled = false;
            return cmd_serve(std::move(cfg));
        }
        if (replay->parsed()) {
            StoreConfig cfg;
            cfg.data_dir = data_dir;
            cfg.utc_offset_min = timezone_min;
            cfg.pairing_window_ms = window_ms;
            cfg.day_validity_floor_lux = floor_lux;
            if (led_default > 0.0) cfg.led_reference_default = led_default;
            return cmd_replay(raw_dir, std::move(cfg));
        }
        if (analyze->parsed())
            return cmd_analyze(derived_path, analyze_out, timezone_min);
        if (classify->parsed() || detect->parsed()) {
            PipelineOptions opts;
            opts.enhance_radius = radius;
            opts.threshold = threshold;
            if (crop_rect.size() == 4) {
                opts.do_crop = true;
                opts.crop_x = crop_rect[0];
                opts.crop_y = crop_rect[1];
                opts.crop_w = crop_rect[2];
                opts.crop_h = crop_rect[3];
            }
            if (classify->parsed())
                return cmd_classify_image(image_path, opts, post_url, post_node);
            return cmd_detect(det_image, opts, min_area, pred_out, post_url,
                              post_node);
        }
        if (eval->parsed())
            return cmd_eval_iou(pred_path, voc_path, iou_threshold, eval_out);
        if (calib->parsed())
            return cmd_calibrate(targets_path, calib_out, template_name);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
