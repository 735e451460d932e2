#include "lumen/exposure.hpp"

#include <algorithm>
#include <cmath>

#include "lumen/rng.hpp"

namespace lumen {

namespace {

constexpr double kGamma = 2.2;

double to_linear(double u8_value) { return std::pow(u8_value / 255.0, kGamma); }

std::uint8_t from_linear(double lin) {
  const double enc = std::pow(std::clamp(lin, 0.0, 1.0), 1.0 / kGamma);
  return static_cast<std::uint8_t>(std::lround(enc * 255.0));
}

void check_pair(const ExposurePair& pair) {
  const RasterImage& s = pair.short_exposure;
  const RasterImage& l = pair.long_exposure;
  if (s.width() != l.width() || s.height() != l.height() ||
      s.channels() != l.channels())
    throw InvalidInput("exposure pair images must be pixel-aligned");
  if (s.kind() != SampleKind::U8 || l.kind() != SampleKind::U8)
    throw InvalidInput("exposure interpolation expects 8-bit images");
  if (s.empty()) throw InvalidInput("exposure pair is empty");
}

}  // namespace

RasterImage interpolate_exposure(const ExposurePair& pair, double alpha) {
  check_pair(pair);
  const auto s = pair.short_exposure.u8();
  const auto l = pair.long_exposure.u8();
  RasterImage out = RasterImage::make_u8(pair.short_exposure.width(),
                                         pair.short_exposure.height(),
                                         pair.short_exposure.channels());
  auto dst = out.u8();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double a = to_linear(s[i]);
    const double b = to_linear(l[i]);
    dst[i] = from_linear(a + alpha * (b - a));
  }
  return out;
}

std::vector<RasterImage> synth_levels(const ExposurePair& pair,
                                      std::span<const double> alphas) {
  if (alphas.empty()) throw InvalidInput("no illumination levels requested");
  std::vector<RasterImage> out;
  out.reserve(alphas.size());
  for (double a : alphas) out.push_back(interpolate_exposure(pair, a));
  return out;
}

RasterImage augment(const RasterImage& img, const AugmentConfig& cfg) {
  if (cfg.crop_width < 1 || cfg.crop_height < 1)
    throw InvalidInput("crop size must be positive");

  if (cfg.center_crop_only) {
    if (img.width() < cfg.crop_width || img.height() < cfg.crop_height)
      throw InvalidInput("image smaller than the requested centre crop");
    const int x0 = (img.width() - cfg.crop_width) / 2;
    const int y0 = (img.height() - cfg.crop_height) / 2;
    PadRecord rec{x0, img.width() - cfg.crop_width - x0, y0,
                  img.height() - cfg.crop_height - y0};
    return unpad(img, rec);
  }

  SplitMix64 rng(cfg.rng_seed);
  // Draw order is fixed: scale, flip, crop x, crop y.
  const double scale =
      cfg.scale_min + rng.next_double() * (cfg.scale_max - cfg.scale_min);
  const bool flip = rng.next_double() < cfg.hflip_prob;

  const int sw = std::max(1, static_cast<int>(std::lround(img.width() * scale)));
  const int sh = std::max(1, static_cast<int>(std::lround(img.height() * scale)));
  if (sw < cfg.crop_width || sh < cfg.crop_height)
    throw InvalidInput("scaled image smaller than the crop size");
  RasterImage scaled = resize_bilinear(img, sw, sh);

  if (flip) {
    RasterImage flipped = scaled;
    for (int y = 0; y < sh; ++y)
      for (int x = 0; x < sw; ++x)
        for (int c = 0; c < scaled.channels(); ++c) {
          if (scaled.kind() == SampleKind::U8)
            flipped.u8()[flipped.index(x, y, c)] =
                scaled.u8()[scaled.index(sw - 1 - x, y, c)];
          else
            flipped.f32()[flipped.index(x, y, c)] =
                scaled.f32()[scaled.index(sw - 1 - x, y, c)];
        }
    scaled = std::move(flipped);
  }

  const int x0 = static_cast<int>(
      rng.next_below(static_cast<std::uint64_t>(sw - cfg.crop_width) + 1));
  const int y0 = static_cast<int>(
      rng.next_below(static_cast<std::uint64_t>(sh - cfg.crop_height) + 1));
  PadRecord rec{x0, sw - cfg.crop_width - x0, y0, sh - cfg.crop_height - y0};
  return unpad(scaled, rec);
}

}  // namespace lumen
