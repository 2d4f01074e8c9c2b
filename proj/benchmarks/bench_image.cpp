#include <benchmark/benchmark.h>

#include "soildet/image.hpp"
#include "soildet/sim.hpp"

using namespace soildet;

namespace {

RasterImage make_gray(int side, std::uint64_t seed) {
    SplitMix64 rng(seed);
    RasterImage img;
    img.width = img.height = side;
    img.channels = 1;
    img.pixels.resize(static_cast<std::size_t>(side) * side);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.next() & 0xFF);
    return img;
}

}  // namespace

static void BM_AdaptiveEnhance(benchmark::State& state) {
    const RasterImage img = make_gray(static_cast<int>(state.range(0)), 1);
    for (auto _ : state) {
        auto out = adaptive_enhance(img, 15);
        benchmark::DoNotOptimize(out.pixels.data());
    }
    state.SetItemsProcessed(state.iterations() * img.pixels.size());
}
BENCHMARK(BM_AdaptiveEnhance)->Arg(128)->Arg(512);

static void BM_Binarize(benchmark::State& state) {
    const RasterImage img = make_gray(static_cast<int>(state.range(0)), 2);
    for (auto _ : state) {
        auto bin = binarize(img, 128);
        benchmark::DoNotOptimize(bin.bits.data());
    }
    state.SetItemsProcessed(state.iterations() * img.pixels.size());
}
BENCHMARK(BM_Binarize)->Arg(512);

static void BM_FullPipeline(benchmark::State& state) {
    const RasterImage img = make_gray(static_cast<int>(state.range(0)), 3);
    for (auto _ : state) {
        auto result = run_dust_pipeline(img);
        benchmark::DoNotOptimize(result.report.black_ratio);
    }
}
BENCHMARK(BM_FullPipeline)->Arg(256);

static void BM_ConnectedComponents(benchmark::State& state) {
    RasterImage img = make_gray(static_cast<int>(state.range(0)), 4);
    const BinaryImage bin = binarize(img, 64);  // sparse blobs
    for (auto _ : state) {
        auto boxes = connected_components(bin, 4);
        benchmark::DoNotOptimize(boxes.data());
    }
}
BENCHMARK(BM_ConnectedComponents)->Arg(256);
