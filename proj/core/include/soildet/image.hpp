#pragma once

#include <cstdint>
#include <vector>

#include "soildet/detection.hpp"

namespace soildet {

/// Row-major 8-bit raster, 1 (gray) or 3 (RGB) channels.
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;  // width*height*channels samples

    std::uint8_t at(int x, int y, int c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t& at(int x, int y, int c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool operator==(const RasterImage&) const = default;
};

/// Row-major boolean grid; true = black (= dust).
struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // 0/1 per pixel

    bool at(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x] != 0;
    }
};

struct PixelReport {
    std::size_t black_pixels = 0;
    std::size_t white_pixels = 0;
    double black_ratio = 0.0;
};

enum class ImageDustClass { NoDust = 0, MediumDust = 1, HeavyDust = 2 };

const char* to_string(ImageDustClass c);

/// Black-ratio boundaries, left-closed upward: [0,medium) NoDust,
/// [medium,heavy) MediumDust, [heavy,1] HeavyDust.
struct ImageDustBands {
    double medium = 0.02;
    double heavy = 0.22;
};

/// Exact sub-grid copy. Throws std::out_of_range when the rectangle leaves
/// the image.
RasterImage crop(const RasterImage& img, int x, int y, int w, int h);

/// Broadcast luma: round(0.299 R + 0.587 G + 0.114 B). Throws
/// std::invalid_argument unless channels == 3.
RasterImage to_grayscale(const RasterImage& img);

/// Doc-scanner-style background division: each pixel divided by the mean of
/// its (2r+1)^2 box neighbourhood (windows clipped at the borders), scaled so
/// a flat field maps to 128, clamped to [0,255].
RasterImage adaptive_enhance(const RasterImage& gray, int radius = 15);

inline constexpr int kDefaultBinarizeThreshold = 128;

/// pixel < threshold => black; pixel >= threshold => white.
BinaryImage binarize(const RasterImage& gray, int threshold = kDefaultBinarizeThreshold);

PixelReport pixel_report(const BinaryImage& bin);

ImageDustClass classify_image_dust(const PixelReport& report,
                                   const ImageDustBands& bands = {});
ImageDustClass classify_image_dust(double black_ratio,
                                   const ImageDustBands& bands = {});

/// Tight boxes of 4-connected black regions with at least `min_area` pixels.
/// Box coordinates are pixel-grid edges: a single pixel at (x,y) yields
/// (x, y, x+1, y+1).
std::vector<BoundingBox> connected_components(const BinaryImage& bin,
                                              int min_area = 1);

/// Dust-pipeline settings: optional crop, enhancement radius, threshold.
struct PipelineOptions {
    bool do_crop = false;
    int crop_x = 0, crop_y = 0, crop_w = 0, crop_h = 0;
    int enhance_radius = 15;
    int threshold = kDefaultBinarizeThreshold;
    ImageDustBands bands;
};

struct PipelineResult {
    PixelReport report;
    ImageDustClass dust_class = ImageDustClass::NoDust;
    BinaryImage binary;
};

/// crop -> grayscale -> adaptive enhance -> threshold -> pixel counting.
PipelineResult run_dust_pipeline(const RasterImage& img,
                                 const PipelineOptions& options = {});

}  // namespace soildet
