#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "lumen/raster.hpp"

namespace lumen {

// 256-bin histogram of lightness quantised over [0,100].
struct Histogram256 {
  std::array<std::uint64_t, 256> bins{};
  std::uint64_t total = 0;

  void add(int bin, std::uint64_t count = 1) {
    bins[static_cast<std::size_t>(bin)] += count;
    total += count;
  }

  bool operator==(const Histogram256&) const = default;
};

// Non-decreasing map over the 256 quantised lightness levels.
struct MonotoneLut {
  std::array<std::uint8_t, 256> map{};

  bool is_monotone() const {
    for (int i = 1; i < 256; ++i)
      if (map[i] < map[i - 1]) return false;
    return true;
  }

  static MonotoneLut identity();
};

struct ClaheConfig {
  int grid_cols = 8;
  int grid_rows = 8;
  // Multiplier of the uniform bin level; the effective per-tile cap is
  // ceil(clip_limit * tile_pixels / 256). A value of 1 flattens.
  double clip_limit = 4.0;
  // When set, derives the grid as ceil(side / target_window_px) per side
  // instead of using grid_cols/grid_rows. 45 matches the reference setting.
  std::optional<int> target_window_px;
};

struct GammaConfig {
  double target_mean = 0.5;  // in (0,1)
};

struct HistEqConfig {};

struct HistMatchConfig {
  Histogram256 target;
};

struct NoneConfig {};

using NormalisationMethod =
    std::variant<NoneConfig, HistEqConfig, ClaheConfig, GammaConfig, HistMatchConfig>;

// Quantisation between the real lightness domain [0,100] and 8-bit bins.
int lightness_bin(float lightness);
float bin_to_lightness(double bin);

Histogram256 histogram_of(std::span<const float> lightness);

// Equalisation LUT of a histogram:
//   lut(v) = round(255 * (cdf(v) - cdf_min) / (1 - cdf_min))
// with the inclusive normalised CDF and cdf_min the CDF of the lowest
// occupied bin. A histogram concentrated in one bin yields the identity.
MonotoneLut equalize_lut(const Histogram256& hist);

struct EqualizeResult {
  std::vector<float> plane;
  MonotoneLut lut;
};

EqualizeResult equalize(std::span<const float> lightness);

std::vector<float> clahe(std::span<const float> lightness, int width, int height,
                         const ClaheConfig& cfg);

// Resolves the effective tile grid for an image (honours target_window_px).
std::pair<int, int> clahe_grid(const ClaheConfig& cfg, int width, int height);

// Clips a histogram at ceil(clip_limit * total / 256) and redistributes the
// excess uniformly (<= 16 re-clip passes, round-robin remainder).
Histogram256 clip_histogram(const Histogram256& hist, double clip_limit);

struct GammaResult {
  std::vector<float> plane;  // input raised to gamma, still in [0,1]
  double gamma = 1.0;
};

// Secant search for the exponent with mean(plane^gamma) = target_mean,
// bounded to [1/16, 16]; unreachable targets return the nearer bound.
// The plane must be scaled to [0,1] and contain a value strictly inside.
GammaResult gamma_to_mean(std::span<const float> unit_plane, double target_mean);

std::vector<float> match_histogram(std::span<const float> lightness,
                                   const Histogram256& target);

// Monotone matching LUT: v -> argmin_w |cdf_target(w) - cdf_source(v)|,
// ties to the smaller w.
MonotoneLut match_lut(const Histogram256& source, const Histogram256& target);

// Mean of the values ranked in [trim*N, (1-trim)*N) after ascending sort.
double trimmed_mean_lightness(std::span<const float> lightness, double trim = 0.4);

// RGB -> LAB -> transform L -> RGB. NoneConfig is the strict identity
// (no colour-space round trip at all).
RasterImage normalize_image(const RasterImage& img, const NormalisationMethod& method);

}  // namespace lumen
