#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "doctest.h"
#include "soildet/image.hpp"
#include "soildet/pnm.hpp"
#include "soildet/sim.hpp"

using namespace soildet;

namespace {

std::vector<std::uint8_t> bytes_of(const char* text) {
    return {reinterpret_cast<const std::uint8_t*>(text),
            reinterpret_cast<const std::uint8_t*>(text) + std::strlen(text)};
}

RasterImage random_image(SplitMix64& rng, int channels, int max_dim = 24) {
    RasterImage img;
    img.width = 1 + static_cast<int>(rng.uniform() * max_dim);
    img.height = 1 + static_cast<int>(rng.uniform() * max_dim);
    img.channels = channels;
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * channels);
    for (auto& p : img.pixels)
        p = static_cast<std::uint8_t>(rng.next() & 0xFF);
    return img;
}

RasterImage uniform_gray(int w, int h, std::uint8_t v) {
    RasterImage img;
    img.width = w;
    img.height = h;
    img.channels = 1;
    img.pixels.assign(static_cast<std::size_t>(w) * h, v);
    return img;
}

}  // namespace

TEST_CASE("decode_pnm minimal files") {
    SUBCASE("plain PGM, single black pixel") {
        const auto img = decode_pnm(bytes_of("P2 1 1 255 0"));
        CHECK(img.width == 1);
        CHECK(img.height == 1);
        CHECK(img.channels == 1);
        CHECK(img.pixels == std::vector<std::uint8_t>{0});
    }
    SUBCASE("plain PPM, single red pixel") {
        const auto img = decode_pnm(bytes_of("P3 1 1 255 255 0 0"));
        CHECK(img.channels == 3);
        CHECK(img.pixels == std::vector<std::uint8_t>{255, 0, 0});
    }
    SUBCASE("header comments are honored") {
        const auto img = decode_pnm(bytes_of("P2 # comment\n2 1 # another\n255\n7 9"));
        CHECK(img.width == 2);
        CHECK(img.at(0, 0) == 7);
        CHECK(img.at(1, 0) == 9);
    }
    SUBCASE("unsupported maxval is rejected") {
        CHECK_THROWS_AS(decode_pnm(bytes_of("P5 2 2 65535 aaaaaaaa")), PnmError);
        CHECK_THROWS_AS(decode_pnm(bytes_of("P2 1 1 100 0")), PnmError);
    }
    SUBCASE("malformed and truncated input") {
        CHECK_THROWS_AS(decode_pnm(bytes_of("Q2 1 1 255 0")), PnmError);
        CHECK_THROWS_AS(decode_pnm(bytes_of("P5 2 2 255 \x01\x02")), PnmError);
        CHECK_THROWS_AS(decode_pnm(bytes_of("P2 1 1 255")), PnmError);
        CHECK_THROWS_AS(decode_pnm(bytes_of("P2 0 1 255 0")), PnmError);
        CHECK_THROWS_AS(decode_pnm(bytes_of("P2 1 1 255 300")), PnmError);
    }
}

TEST_CASE("pnm round trips") {
    SplitMix64 rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        const int channels = trial % 2 == 0 ? 1 : 3;
        const RasterImage img = random_image(rng, channels);
        for (bool plain : {false, true}) {
            const auto encoded = encode_pnm(img, plain);
            const RasterImage back = decode_pnm(encoded);
            CHECK(back == img);
            // canonical files re-encode bit-exactly
            CHECK(encode_pnm(back, plain) == encoded);
        }
    }
}

TEST_CASE("crop") {
    RasterImage img;
    img.width = img.height = 4;
    img.channels = 1;
    img.pixels.resize(16);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) img.at(x, y) = static_cast<std::uint8_t>(10 * y + x);

    SUBCASE("full-frame crop is the identity") {
        CHECK(crop(img, 0, 0, 4, 4) == img);
    }
    SUBCASE("inner 2x2 follows index arithmetic") {
        const auto inner = crop(img, 1, 1, 2, 2);
        CHECK(inner.at(0, 0) == 11);
        CHECK(inner.at(1, 0) == 12);
        CHECK(inner.at(0, 1) == 21);
        CHECK(inner.at(1, 1) == 22);
    }
    SUBCASE("out of bounds throws") {
        CHECK_THROWS_AS(crop(img, 2, 2, 3, 3), std::out_of_range);
        CHECK_THROWS_AS(crop(img, -1, 0, 2, 2), std::out_of_range);
        CHECK_THROWS_AS(crop(img, 0, 0, 0, 1), std::out_of_range);
    }
}

TEST_CASE("to_grayscale") {
    RasterImage rgb;
    rgb.width = 3;
    rgb.height = 1;
    rgb.channels = 3;
    rgb.pixels = {255, 255, 255, 0, 0, 0, 255, 0, 0};
    const auto gray = to_grayscale(rgb);
    CHECK(gray.at(0, 0) == 255);
    CHECK(gray.at(1, 0) == 0);
    CHECK(gray.at(2, 0) == 76);  // round(0.299 * 255)
    CHECK_THROWS_AS(to_grayscale(gray), std::invalid_argument);
}

TEST_CASE("adaptive_enhance") {
    SUBCASE("uniform fields map to 128") {
        for (std::uint8_t v : {std::uint8_t{0}, std::uint8_t{60}, std::uint8_t{255}}) {
            const auto out = adaptive_enhance(uniform_gray(9, 7, v), 2);
            for (auto p : out.pixels) CHECK(p == 128);
        }
    }
    SUBCASE("a dark blob on a bright field stays darker than its surround") {
        RasterImage img = uniform_gray(21, 21, 220);
        for (int y = 8; y <= 12; ++y)
            for (int x = 8; x <= 12; ++x) img.at(x, y) = 40;
        const auto out = adaptive_enhance(img, 5);
        CHECK(out.at(10, 10) < out.at(1, 1));
        CHECK(out.at(10, 10) < 128);
    }
    SUBCASE("checkerboard: direct-evaluation oracle, dark strictly below bright") {
        RasterImage img = uniform_gray(4, 4, 0);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) img.at(x, y) = ((x + y) % 2) ? 255 : 0;
        const int radius = 1;
        const auto out = adaptive_enhance(img, radius);

        // independent naive evaluation of the same definition
        for (int y = 0; y < 4; ++y) {
            for (int x = 0; x < 4; ++x) {
                double sum = 0;
                int count = 0;
                for (int dy = -radius; dy <= radius; ++dy)
                    for (int dx = -radius; dx <= radius; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= 4 || ny >= 4) continue;
                        sum += img.at(nx, ny);
                        ++count;
                    }
                const double mean = sum / count;
                const double expected =
                    mean == 0 ? 128.0
                              : std::clamp(128.0 * img.at(x, y) / mean, 0.0, 255.0);
                CHECK(out.at(x, y) == static_cast<std::uint8_t>(std::lround(
                                          std::clamp(expected, 0.0, 255.0))));
            }
        }
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x)
                if ((x + y) % 2 == 0)
                    CHECK(out.at(x, y) < out.at((x + 1) % 4, y));
    }
    SUBCASE("bad arguments") {
        CHECK_THROWS_AS(adaptive_enhance(uniform_gray(4, 4, 0), 0),
                        std::invalid_argument);
    }
}

TEST_CASE("binarize") {
    SUBCASE("all white / all black") {
        const auto white = binarize(uniform_gray(10, 10, 255), 128);
        CHECK(pixel_report(white).black_pixels == 0);
        const auto black = binarize(uniform_gray(10, 10, 0), 128);
        CHECK(pixel_report(black).black_pixels == 100);
    }
    SUBCASE("boundary convention: pixel == threshold counts as white") {
        RasterImage img = uniform_gray(3, 1, 0);
        img.pixels = {100, 128, 200};
        const auto bin = binarize(img, 128);
        CHECK(bin.at(0, 0) == true);
        CHECK(bin.at(1, 0) == false);
        CHECK(bin.at(2, 0) == false);
    }
    SUBCASE("monotone in threshold") {
        SplitMix64 rng(5);
        for (int trial = 0; trial < 40; ++trial) {
            const RasterImage img = random_image(rng, 1);
            int t1 = static_cast<int>(rng.uniform() * 256);
            int t2 = static_cast<int>(rng.uniform() * 256);
            if (t1 > t2) std::swap(t1, t2);
            CHECK(pixel_report(binarize(img, t1)).black_pixels <=
                  pixel_report(binarize(img, t2)).black_pixels);
        }
    }
}

TEST_CASE("pixel_report") {
    SUBCASE("all white") {
        const auto r = pixel_report(binarize(uniform_gray(10, 10, 255), 128));
        CHECK(r.black_ratio == 0.0);
        CHECK(r.white_pixels == 100);
    }
    SUBCASE("painted fraction is recovered exactly") {
        RasterImage img = uniform_gray(10, 10, 255);
        for (int i = 0; i < 25; ++i) img.pixels[static_cast<std::size_t>(i)] = 0;
        const auto r = pixel_report(binarize(img, 128));
        CHECK(r.black_pixels == 25);
        CHECK(r.black_ratio == 0.25);
    }
    SUBCASE("black + white always equals width*height") {
        SplitMix64 rng(17);
        for (int trial = 0; trial < 40; ++trial) {
            const RasterImage img = random_image(rng, 1);
            const auto r = pixel_report(binarize(img, 128));
            CHECK(r.black_pixels + r.white_pixels ==
                  static_cast<std::size_t>(img.width) * img.height);
        }
    }
}

TEST_CASE("classify_image_dust") {
    CHECK(classify_image_dust(0.2519) == ImageDustClass::HeavyDust);
    CHECK(classify_image_dust(0.1727) == ImageDustClass::MediumDust);
    CHECK(classify_image_dust(0.0) == ImageDustClass::NoDust);
    SUBCASE("boundaries and monotonicity") {
        CHECK(classify_image_dust(0.02) == ImageDustClass::MediumDust);
        CHECK(classify_image_dust(0.22) == ImageDustClass::HeavyDust);
        SplitMix64 rng(23);
        for (int i = 0; i < 200; ++i) {
            double a = rng.uniform(), b = rng.uniform();
            if (a > b) std::swap(a, b);
            CHECK(classify_image_dust(a) <= classify_image_dust(b));
        }
    }
    CHECK_THROWS_AS(classify_image_dust(-0.1), std::domain_error);
}

TEST_CASE("connected_components") {
    SUBCASE("all-white image has no regions") {
        CHECK(connected_components(binarize(uniform_gray(8, 8, 255), 128)).empty());
    }
    SUBCASE("single 3x3 square produces one tight box") {
        RasterImage img = uniform_gray(8, 8, 255);
        for (int y = 2; y <= 4; ++y)
            for (int x = 2; x <= 4; ++x) img.at(x, y) = 0;
        const auto boxes = connected_components(binarize(img, 128));
        REQUIRE(boxes.size() == 1);
        CHECK(boxes[0].xmin == 2);
        CHECK(boxes[0].ymin == 2);
        CHECK(boxes[0].xmax == 5);
        CHECK(boxes[0].ymax == 5);
    }
    SUBCASE("diagonal neighbours are separate regions under 4-connectivity") {
        RasterImage img = uniform_gray(4, 4, 255);
        img.at(1, 1) = 0;
        img.at(2, 2) = 0;
        CHECK(connected_components(binarize(img, 128)).size() == 2);
    }
    SUBCASE("min_area filters small regions") {
        RasterImage img = uniform_gray(8, 8, 255);
        img.at(0, 0) = 0;  // area 1
        for (int x = 3; x <= 6; ++x) img.at(x, 3) = 0;  // area 4
        CHECK(connected_components(binarize(img, 128), 2).size() == 1);
    }
    SUBCASE("flood-fill oracle: regions partition the black set") {
        SplitMix64 rng(31);
        for (int trial = 0; trial < 25; ++trial) {
            RasterImage img = random_image(rng, 1, 16);
            const BinaryImage bin = binarize(img, 100);
            const auto boxes = connected_components(bin, 1);
            // each pixel belongs to at most one box interior region; union of
            // region areas equals the black count (oracle: independent fill)
            std::vector<int> label(static_cast<std::size_t>(bin.width) * bin.height,
                                   -1);
            int regions = 0;
            std::size_t black = 0;
            for (int y = 0; y < bin.height; ++y)
                for (int x = 0; x < bin.width; ++x) {
                    if (!bin.at(x, y)) continue;
                    ++black;
                    if (label[static_cast<std::size_t>(y) * bin.width + x] >= 0)
                        continue;
                    // recursive fill via explicit stack
                    std::vector<std::pair<int, int>> stack{{x, y}};
                    label[static_cast<std::size_t>(y) * bin.width + x] = regions;
                    while (!stack.empty()) {
                        auto [cx, cy] = stack.back();
                        stack.pop_back();
                        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
                        for (int k = 0; k < 4; ++k) {
                            const int nx = cx + dx[k], ny = cy + dy[k];
                            if (nx < 0 || ny < 0 || nx >= bin.width ||
                                ny >= bin.height)
                                continue;
                            auto& l =
                                label[static_cast<std::size_t>(ny) * bin.width + nx];
                            if (bin.at(nx, ny) && l < 0) {
                                l = regions;
                                stack.push_back({nx, ny});
                            }
                        }
                    }
                    ++regions;
                }
            CHECK(boxes.size() == static_cast<std::size_t>(regions));
            for (const auto& b : boxes) {
                CHECK(b.xmin >= 0);
                CHECK(b.xmax <= bin.width);
                CHECK(b.area() >= 1);
            }
            // every black pixel falls inside some region box
            std::size_t covered = 0;
            for (int y = 0; y < bin.height; ++y)
                for (int x = 0; x < bin.width; ++x) {
                    if (!bin.at(x, y)) continue;
                    for (const auto& b : boxes)
                        if (x >= b.xmin && x < b.xmax && y >= b.ymin && y < b.ymax) {
                            ++covered;
                            break;
                        }
                }
            CHECK(covered == black);
        }
    }
}

TEST_CASE("full pipeline determinism and class separation") {
    SplitMix64 rng(77);
    RasterImage img = random_image(rng, 3, 32);
    const auto bytes = encode_pnm(img);
    const auto r1 = run_dust_pipeline(decode_pnm(bytes));
    const auto r2 = run_dust_pipeline(decode_pnm(bytes));
    CHECK(r1.report.black_pixels == r2.report.black_pixels);
    CHECK(r1.report.black_ratio == r2.report.black_ratio);
    CHECK(r1.dust_class == r2.dust_class);
}
