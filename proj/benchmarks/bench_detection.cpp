#include <benchmark/benchmark.h>

#include <vector>

#include "soildet/detection.hpp"
#include "soildet/sim.hpp"

using namespace soildet;

namespace {

std::vector<BoundingBox> make_boxes(std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<BoundingBox> boxes;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform() * 500, y = rng.uniform() * 500;
        boxes.push_back({x, y, x + 10 + rng.uniform() * 60, y + 10 + rng.uniform() * 60});
    }
    return boxes;
}

}  // namespace

static void BM_IouComponents(benchmark::State& state) {
    const auto boxes = make_boxes(2, 7);
    for (auto _ : state) {
        auto c = iou_components(boxes[0], boxes[1]);
        benchmark::DoNotOptimize(c.iou);
    }
}
BENCHMARK(BM_IouComponents);

static void BM_MatchDetections(benchmark::State& state) {
    const auto preds = make_boxes(static_cast<std::size_t>(state.range(0)), 11);
    const auto gts = make_boxes(static_cast<std::size_t>(state.range(0)), 13);
    for (auto _ : state) {
        auto report = match_detections(preds, gts, 0.5);
        benchmark::DoNotOptimize(report.true_positives);
    }
}
BENCHMARK(BM_MatchDetections)->Arg(10)->Arg(50);

static void BM_ParseVoc(benchmark::State& state) {
    Annotation ann;
    ann.image_id = "bench.jpg";
    for (const BoundingBox& b : make_boxes(20, 17))
        ann.boxes.push_back({"bird droppings or dust", b});
    const std::string xml = serialize_voc(ann);
    for (auto _ : state) {
        auto parsed = parse_voc(xml);
        benchmark::DoNotOptimize(parsed.boxes.data());
    }
    state.SetBytesProcessed(state.iterations() * xml.size());
}
BENCHMARK(BM_ParseVoc);
