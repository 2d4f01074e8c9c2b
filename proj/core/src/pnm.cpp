#include "soildet/pnm.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace soildet {

namespace {

struct ByteCursor {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;

    bool eof() const { return pos >= data.size(); }

    // whitespace and '#' comments, PNM header rules
    void skip_ws_and_comments() {
        while (!eof()) {
            const std::uint8_t c = data[pos];
            if (c == '#') {
                while (!eof() && data[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' ||
                       c == '\f') {
                ++pos;
            } else {
                return;
            }
        }
    }

    int read_uint(const char* what) {
        skip_ws_and_comments();
        if (eof() || data[pos] < '0' || data[pos] > '9')
            throw PnmError(std::string("pnm: expected integer for ") + what);
        long v = 0;
        while (!eof() && data[pos] >= '0' && data[pos] <= '9') {
            v = v * 10 + (data[pos] - '0');
            if (v > 1 << 30) throw PnmError("pnm: integer overflow in header");
            ++pos;
        }
        return static_cast<int>(v);
    }
};

}  // namespace

RasterImage decode_pnm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw PnmError("pnm: bad magic");
    const char kind = static_cast<char>(bytes[1]);
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6')
        throw PnmError("pnm: unsupported format (want P2/P3/P5/P6)");
    const bool plain = kind == '2' || kind == '3';
    const int channels = (kind == '3' || kind == '6') ? 3 : 1;

    ByteCursor cur{bytes, 2};
    const int width = cur.read_uint("width");
    const int height = cur.read_uint("height");
    const int maxval = cur.read_uint("maxval");
    if (width <= 0 || height <= 0) throw PnmError("pnm: non-positive dimensions");
    if (maxval != 255) throw PnmError("pnm: unsupported maxval (must be 255)");

    RasterImage img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    const std::size_t count =
        static_cast<std::size_t>(width) * height * channels;
    img.pixels.resize(count);

    if (plain) {
        for (std::size_t i = 0; i < count; ++i) {
            const int v = cur.read_uint("sample");
            if (v > 255) throw PnmError("pnm: sample exceeds maxval");
            img.pixels[i] = static_cast<std::uint8_t>(v);
        }
    } else {
        // exactly one whitespace byte after maxval, then raw samples
        if (cur.eof()) throw PnmError("pnm: truncated after header");
        const std::uint8_t sep = bytes[cur.pos++];
        if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n')
            throw PnmError("pnm: missing separator before raster");
        if (bytes.size() - cur.pos < count) throw PnmError("pnm: truncated raster");
        std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(cur.pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(cur.pos + count),
                  img.pixels.begin());
    }
    return img;
}

std::vector<std::uint8_t> encode_pnm(const RasterImage& img, bool plain) {
    if (img.channels != 1 && img.channels != 3)
        throw PnmError("pnm: only 1- or 3-channel images");
    if (img.pixels.size() !=
        static_cast<std::size_t>(img.width) * img.height * img.channels)
        throw PnmError("pnm: pixel buffer size mismatch");
    char header[64];
    const char* magic = img.channels == 3 ? (plain ? "P3" : "P6")
                                          : (plain ? "P2" : "P5");
    std::snprintf(header, sizeof(header), "%s\n%d %d\n255\n", magic, img.width,
                  img.height);
    std::vector<std::uint8_t> out(header, header + std::char_traits<char>::length(header));
    if (plain) {
        char buf[8];
        // samples separated by single spaces, one image row per line
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width * img.channels; ++x) {
                const std::uint8_t v =
                    img.pixels[static_cast<std::size_t>(y) * img.width * img.channels + x];
                const int len = std::snprintf(buf, sizeof(buf), "%s%d",
                                              x == 0 ? "" : " ", v);
                out.insert(out.end(), buf, buf + len);
            }
            out.push_back('\n');
        }
    } else {
        out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    }
    return out;
}

RasterImage load_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PnmError("pnm: cannot open " + path.string());
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>()};
    return decode_pnm(bytes);
}

void save_pnm(const std::filesystem::path& path, const RasterImage& img,
              bool plain) {
    const std::vector<std::uint8_t> bytes = encode_pnm(img, plain);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PnmError("pnm: cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

}  // namespace soildet
