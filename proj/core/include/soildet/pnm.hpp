#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "soildet/image.hpp"

namespace soildet {

struct PnmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Decode plain or raw PGM/PPM (P2/P5/P3/P6), maxval 255 only. Header
/// comments (#) are honored. Throws PnmError on malformed headers, truncated
/// data or unsupported maxval.
RasterImage decode_pnm(std::span<const std::uint8_t> bytes);

/// Encode as canonical raw PGM/PPM: "P5\n<w> <h>\n255\n" + samples (P6 for
/// RGB), or the plain variants when `plain` is set. decode(encode(x)) == x,
/// and encode(decode(f)) == f for files already in canonical form.
std::vector<std::uint8_t> encode_pnm(const RasterImage& img, bool plain = false);

RasterImage load_pnm(const std::filesystem::path& path);
void save_pnm(const std::filesystem::path& path, const RasterImage& img,
              bool plain = false);

}  // namespace soildet
