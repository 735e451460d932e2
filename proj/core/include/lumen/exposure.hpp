#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lumen/raster.hpp"

namespace lumen {

// Pixel-aligned short/long exposure pair of one scene.
struct ExposurePair {
  RasterImage short_exposure;
  RasterImage long_exposure;
  std::string scene_id;
};

struct AugmentConfig {
  double scale_min = 0.4;
  double scale_max = 0.8;
  int crop_width = 768;
  int crop_height = 512;
  double hflip_prob = 0.5;
  std::uint64_t rng_seed = 0;
  // Validation mode: a single centre crop, no scaling or flipping.
  bool center_crop_only = false;
};

inline constexpr std::array<double, 5> kDefaultAlphas{0.25, 0.5, 0.75, 1.5, 2.0};

// Linear-domain blend between the two exposures: both images are linearised
// with an inverse 2.2 power, mixed as short + alpha * (long - short), clamped
// to [0,1] and re-encoded. alpha outside [0,1] extrapolates.
RasterImage interpolate_exposure(const ExposurePair& pair, double alpha);

// One synthesised image per alpha.
std::vector<RasterImage> synth_levels(const ExposurePair& pair,
                                      std::span<const double> alphas);

// Seeded scale -> horizontal flip -> crop. Draw order is scale factor, flip,
// crop x offset, crop y offset (see SplitMix64 for the stream definition).
RasterImage augment(const RasterImage& img, const AugmentConfig& cfg);

}  // namespace lumen
