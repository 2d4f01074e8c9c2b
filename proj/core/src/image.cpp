#include "soildet/image.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace soildet {

const char* to_string(ImageDustClass c) {
    switch (c) {
        case ImageDustClass::NoDust: return "NoDust";
        case ImageDustClass::MediumDust: return "MediumDust";
        case ImageDustClass::HeavyDust: return "HeavyDust";
    }
    return "?";
}

RasterImage crop(const RasterImage& img, int x, int y, int w, int h) {
    if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > img.width ||
        y + h > img.height)
        throw std::out_of_range("crop: rectangle outside image bounds");
    RasterImage out;
    out.width = w;
    out.height = h;
    out.channels = img.channels;
    out.pixels.resize(static_cast<std::size_t>(w) * h * img.channels);
    for (int row = 0; row < h; ++row) {
        const std::uint8_t* src =
            img.pixels.data() +
            (static_cast<std::size_t>(y + row) * img.width + x) * img.channels;
        std::uint8_t* dst =
            out.pixels.data() + static_cast<std::size_t>(row) * w * img.channels;
        std::copy(src, src + static_cast<std::size_t>(w) * img.channels, dst);
    }
    return out;
}

RasterImage to_grayscale(const RasterImage& img) {
    if (img.channels != 3)
        throw std::invalid_argument("to_grayscale: expected 3-channel image");
    RasterImage out;
    out.width = img.width;
    out.height = img.height;
    out.channels = 1;
    out.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        const std::uint8_t* p = img.pixels.data() + i * 3;
        double luma = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        out.pixels[i] = static_cast<std::uint8_t>(std::lround(luma));
    }
    return out;
}

RasterImage adaptive_enhance(const RasterImage& gray, int radius) {
    if (gray.channels != 1)
        throw std::invalid_argument("adaptive_enhance: expected grayscale image");
    if (radius < 1) throw std::invalid_argument("adaptive_enhance: radius must be >= 1");
    const int w = gray.width, h = gray.height;

    // summed-area table, (w+1)x(h+1)
    std::vector<std::uint64_t> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    auto sat_at = [&](int x, int y) -> std::uint64_t& {
        return sat[static_cast<std::size_t>(y) * (w + 1) + x];
    };
    for (int y = 1; y <= h; ++y)
        for (int x = 1; x <= w; ++x)
            sat_at(x, y) = gray.at(x - 1, y - 1) + sat_at(x - 1, y) +
                           sat_at(x, y - 1) - sat_at(x - 1, y - 1);

    RasterImage out;
    out.width = w;
    out.height = h;
    out.channels = 1;
    out.pixels.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
            const std::uint64_t sum = sat_at(x1 + 1, y1 + 1) - sat_at(x0, y1 + 1) -
                                      sat_at(x1 + 1, y0) + sat_at(x0, y0);
            const double count = static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1);
            const double mean = static_cast<double>(sum) / count;
            double v = mean == 0.0 ? 128.0 : 128.0 * gray.at(x, y) / mean;
            out.at(x, y) = static_cast<std::uint8_t>(
                std::clamp(std::lround(v), 0l, 255l));
        }
    }
    return out;
}

BinaryImage binarize(const RasterImage& gray, int threshold) {
    if (gray.channels != 1)
        throw std::invalid_argument("binarize: expected grayscale image");
    BinaryImage out;
    out.width = gray.width;
    out.height = gray.height;
    out.bits.resize(gray.pixels.size());
    for (std::size_t i = 0; i < gray.pixels.size(); ++i)
        out.bits[i] = gray.pixels[i] < threshold ? 1 : 0;
    return out;
}

PixelReport pixel_report(const BinaryImage& bin) {
    PixelReport r;
    for (std::uint8_t b : bin.bits)
        b ? ++r.black_pixels : ++r.white_pixels;
    const std::size_t total = r.black_pixels + r.white_pixels;
    if (total > 0)
        r.black_ratio = static_cast<double>(r.black_pixels) / static_cast<double>(total);
    return r;
}

ImageDustClass classify_image_dust(double black_ratio, const ImageDustBands& bands) {
    if (!(black_ratio >= 0.0) || !(black_ratio <= 1.0))
        throw std::domain_error("classify_image_dust: ratio outside [0,1]");
    if (black_ratio >= bands.heavy) return ImageDustClass::HeavyDust;
    if (black_ratio >= bands.medium) return ImageDustClass::MediumDust;
    return ImageDustClass::NoDust;
}

ImageDustClass classify_image_dust(const PixelReport& report,
                                   const ImageDustBands& bands) {
    return classify_image_dust(report.black_ratio, bands);
}

std::vector<BoundingBox> connected_components(const BinaryImage& bin, int min_area) {
    if (min_area < 1)
        throw std::invalid_argument("connected_components: min_area must be >= 1");
    const int w = bin.width, h = bin.height;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
    std::vector<BoundingBox> boxes;
    std::deque<std::pair<int, int>> queue;

    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            const std::size_t sidx = static_cast<std::size_t>(sy) * w + sx;
            if (!bin.bits[sidx] || seen[sidx]) continue;
            int minx = sx, maxx = sx, miny = sy, maxy = sy, area = 0;
            seen[sidx] = 1;
            queue.push_back({sx, sy});
            while (!queue.empty()) {
                auto [x, y] = queue.front();
                queue.pop_front();
                ++area;
                minx = std::min(minx, x);
                maxx = std::max(maxx, x);
                miny = std::min(miny, y);
                maxy = std::max(maxy, y);
                constexpr int dx[4] = {1, -1, 0, 0};
                constexpr int dy[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int nx = x + dx[k], ny = y + dy[k];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                    if (bin.bits[nidx] && !seen[nidx]) {
                        seen[nidx] = 1;
                        queue.push_back({nx, ny});
                    }
                }
            }
            if (area >= min_area)
                boxes.push_back({static_cast<double>(minx), static_cast<double>(miny),
                                 static_cast<double>(maxx + 1),
                                 static_cast<double>(maxy + 1)});
        }
    }
    return boxes;
}

PipelineResult run_dust_pipeline(const RasterImage& img,
                                 const PipelineOptions& options) {
    RasterImage work = img;
    if (options.do_crop)
        work = crop(work, options.crop_x, options.crop_y, options.crop_w,
                    options.crop_h);
    if (work.channels == 3) work = to_grayscale(work);
    work = adaptive_enhance(work, options.enhance_radius);
    PipelineResult result;
    result.binary = binarize(work, options.threshold);
    result.report = pixel_report(result.binary);
    result.dust_class = classify_image_dust(result.report, options.bands);
    return result;
}

}  // namespace soildet
