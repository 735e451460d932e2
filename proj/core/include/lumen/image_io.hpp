#pragma once

#include <filesystem>

#include "lumen/raster.hpp"

namespace lumen {

// Binary PPM (P6), maxval 255. Byte-exact round trip.
RasterImage read_ppm(const std::filesystem::path& path);
void write_ppm(const RasterImage& img, const std::filesystem::path& path);

// 8-bit PNG; grayscale/palette inputs are expanded to RGB on read.
RasterImage read_png(const std::filesystem::path& path);
void write_png(const RasterImage& img, const std::filesystem::path& path);

// Dispatch on file magic (read) or extension (write: .ppm or .png).
RasterImage read_image(const std::filesystem::path& path);
void write_image(const RasterImage& img, const std::filesystem::path& path);

}  // namespace lumen
