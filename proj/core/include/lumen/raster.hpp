#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lumen/errors.hpp"

namespace lumen {

enum class SampleKind { U8, F32 };

// Interleaved row-major image, 1 or 3 channels. Samples are either 8-bit
// integers in [0,255] or floats in [0,1]; float data is clamped back into
// [0,1] by every producing operation.
class RasterImage {
 public:
  RasterImage() = default;

  static RasterImage make_u8(int width, int height, int channels);
  static RasterImage make_f32(int width, int height, int channels);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  SampleKind kind() const { return kind_; }
  bool empty() const { return width_ == 0 || height_ == 0; }
  std::size_t sample_count() const {
    return static_cast<std::size_t>(width_) * height_ * channels_;
  }

  std::span<const std::uint8_t> u8() const;
  std::span<std::uint8_t> u8();
  std::span<const float> f32() const;
  std::span<float> f32();

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  bool operator==(const RasterImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  SampleKind kind_ = SampleKind::U8;
  std::vector<std::uint8_t> bytes_;
  std::vector<float> floats_;
};

// CIELAB planes, planar row-major. L in [0,100]; a and b unbounded
// (|.| <= 128 for anything that came from 8-bit sRGB).
struct LabImage {
  int width = 0;
  int height = 0;
  std::vector<float> L;
  std::vector<float> a;
  std::vector<float> b;

  std::size_t plane_index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
};

struct PadRecord {
  int left = 0;
  int right = 0;
  int top = 0;
  int bottom = 0;

  bool is_zero() const { return left == 0 && right == 0 && top == 0 && bottom == 0; }
  bool operator==(const PadRecord&) const = default;
};

// sRGB (D65) to CIELAB. 3-channel input only.
LabImage rgb_to_lab(const RasterImage& img);

// CIELAB back to 8-bit sRGB; out-of-gamut values clamp.
RasterImage lab_to_rgb(const LabImage& lab);

// Pads to the smallest dimensions divisible by 256 with edge-excluding
// reflection (abc|cb). Requires width, height >= 2.
std::pair<RasterImage, PadRecord> pad_reflect_256(const RasterImage& img);

// Exact inverse of pad_reflect_256 on the pixel region.
RasterImage unpad(const RasterImage& img, const PadRecord& rec);

// Bilinear resize to explicit dimensions.
RasterImage resize_bilinear(const RasterImage& img, int out_width, int out_height);

// Bilinear resize so that the longer edge equals target, aspect preserved
// to within one pixel. A no-op (bit-identical copy) when already at target.
RasterImage resize_longest_edge(const RasterImage& img, int target);

}  // namespace lumen
