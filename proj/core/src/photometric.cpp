#include "lumen/photometric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lumen {

namespace {

constexpr double kGammaLo = 1.0 / 16.0;
constexpr double kGammaHi = 16.0;
constexpr int kMaxSecantIters = 50;
constexpr int kMaxReclipPasses = 16;

double plane_pow_mean(std::span<const float> plane, double gamma) {
  double sum = 0.0;
  for (float v : plane) sum += std::pow(static_cast<double>(v), gamma);
  return sum / static_cast<double>(plane.size());
}

bool plane_is_constant(std::span<const float> plane) {
  for (float v : plane)
    if (v != plane.front()) return false;
  return true;
}

}  // namespace

MonotoneLut MonotoneLut::identity() {
  MonotoneLut lut;
  for (int i = 0; i < 256; ++i) lut.map[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  return lut;
}

int lightness_bin(float lightness) {
  const long b = std::lround(static_cast<double>(lightness) / 100.0 * 255.0);
  return static_cast<int>(std::clamp(b, 0L, 255L));
}

float bin_to_lightness(double bin) {
  return static_cast<float>(bin / 255.0 * 100.0);
}

Histogram256 histogram_of(std::span<const float> lightness) {
  if (lightness.empty()) throw InvalidInput("histogram of an empty plane");
  Histogram256 hist;
  for (float v : lightness) hist.add(lightness_bin(v));
  return hist;
}

MonotoneLut equalize_lut(const Histogram256& hist) {
  if (hist.total == 0) throw InvalidInput("histogram is empty");
  int first = 0;
  while (first < 256 && hist.bins[static_cast<std::size_t>(first)] == 0) ++first;
  const double total = static_cast<double>(hist.total);
  const double cdf_min = static_cast<double>(hist.bins[static_cast<std::size_t>(first)]) / total;
  if (cdf_min >= 1.0) return MonotoneLut::identity();  // single occupied bin

  MonotoneLut lut;
  std::uint64_t cum = 0;
  for (int v = 0; v < 256; ++v) {
    cum += hist.bins[static_cast<std::size_t>(v)];
    const double cdf = static_cast<double>(cum) / total;
    const double mapped = 255.0 * (cdf - cdf_min) / (1.0 - cdf_min);
    lut.map[static_cast<std::size_t>(v)] =
        static_cast<std::uint8_t>(std::clamp<long>(std::lround(mapped), 0, 255));
  }
  return lut;
}

EqualizeResult equalize(std::span<const float> lightness) {
  const Histogram256 hist = histogram_of(lightness);
  const MonotoneLut lut = equalize_lut(hist);
  int first = 0;
  while (first < 256 && hist.bins[static_cast<std::size_t>(first)] == 0) ++first;
  if (hist.bins[static_cast<std::size_t>(first)] == hist.total) {
    // Degenerate constant plane: any output is equally flat, keep the input.
    return {std::vector<float>(lightness.begin(), lightness.end()), lut};
  }
  EqualizeResult res;
  res.lut = lut;
  res.plane.resize(lightness.size());
  for (std::size_t i = 0; i < lightness.size(); ++i)
    res.plane[i] = bin_to_lightness(lut.map[static_cast<std::size_t>(lightness_bin(lightness[i]))]);
  return res;
}

Histogram256 clip_histogram(const Histogram256& hist, double clip_limit) {
  if (clip_limit < 1.0) throw InvalidInput("clip limit must be >= 1");
  if (hist.total == 0) throw InvalidInput("histogram is empty");
  const std::uint64_t limit = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(
             std::ceil(clip_limit * static_cast<double>(hist.total) / 256.0)));

  Histogram256 out = hist;
  auto clip_pass = [&]() {
    std::uint64_t excess = 0;
    for (auto& b : out.bins) {
      if (b > limit) {
        excess += b - limit;
        b = limit;
      }
    }
    return excess;
  };

  std::uint64_t excess = clip_pass();
  for (int pass = 0; pass < kMaxReclipPasses && excess >= 256; ++pass) {
    const std::uint64_t share = excess / 256;
    excess %= 256;
    for (auto& b : out.bins) b += share;
    excess += clip_pass();
  }
  // Round-robin remainder into bins still below the limit. Capacity
  // 256*limit >= total guarantees termination.
  for (std::size_t k = 0; excess > 0; k = (k + 1) & 255) {
    if (out.bins[k] < limit) {
      ++out.bins[k];
      --excess;
    }
  }
  return out;
}

std::pair<int, int> clahe_grid(const ClaheConfig& cfg, int width, int height) {
  if (cfg.target_window_px) {
    const int win = *cfg.target_window_px;
    if (win < 1) throw InvalidInput("target window must be >= 1 px");
    return {std::max(1, (width + win - 1) / win), std::max(1, (height + win - 1) / win)};
  }
  if (cfg.grid_cols < 1 || cfg.grid_rows < 1)
    throw InvalidInput("tile grid must be at least 1x1");
  return {cfg.grid_cols, cfg.grid_rows};
}

std::vector<float> clahe(std::span<const float> lightness, int width, int height,
                         const ClaheConfig& cfg) {
  if (width < 1 || height < 1 ||
      lightness.size() != static_cast<std::size_t>(width) * height)
    throw InvalidInput("plane size does not match the stated dimensions");
  if (cfg.clip_limit < 1.0) throw InvalidInput("clip limit must be >= 1");
  const auto [cols, rows] = clahe_grid(cfg, width, height);
  if (cols > width || rows > height)
    throw InvalidInput("tile grid larger than the image");

  if (plane_is_constant(lightness))
    return std::vector<float>(lightness.begin(), lightness.end());

  // Tile boundaries as even integer splits; tiles differ by at most one
  // pixel in each dimension.
  auto x_lo = [&, cols = cols](int c) { return static_cast<int>(static_cast<long long>(c) * width / cols); };
  auto y_lo = [&, rows = rows](int r) { return static_cast<int>(static_cast<long long>(r) * height / rows); };

  std::vector<MonotoneLut> luts(static_cast<std::size_t>(cols) * rows);
  std::vector<double> cx(static_cast<std::size_t>(cols)), cy(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    const int ty0 = y_lo(r), ty1 = y_lo(r + 1);
    cy[static_cast<std::size_t>(r)] = (ty0 + ty1 - 1) / 2.0;
    for (int c = 0; c < cols; ++c) {
      const int tx0 = x_lo(c), tx1 = x_lo(c + 1);
      if (r == 0) cx[static_cast<std::size_t>(c)] = (tx0 + tx1 - 1) / 2.0;
      Histogram256 hist;
      for (int y = ty0; y < ty1; ++y)
        for (int x = tx0; x < tx1; ++x)
          hist.add(lightness_bin(lightness[static_cast<std::size_t>(y) * width + x]));
      luts[static_cast<std::size_t>(r) * cols + c] =
          equalize_lut(clip_histogram(hist, cfg.clip_limit));
    }
  }

  // Segment lookup along one axis: returns (lo tile, hi tile, weight of hi).
  auto segment = [](const std::vector<double>& centers, int coord) {
    const int n = static_cast<int>(centers.size());
    if (n == 1 || coord <= centers.front()) return std::tuple<int, int, double>{0, 0, 0.0};
    if (coord >= centers.back()) return std::tuple<int, int, double>{n - 1, n - 1, 0.0};
    int lo = 0;
    while (lo + 1 < n && centers[static_cast<std::size_t>(lo) + 1] <= coord) ++lo;
    const double w = (coord - centers[static_cast<std::size_t>(lo)]) /
                     (centers[static_cast<std::size_t>(lo) + 1] - centers[static_cast<std::size_t>(lo)]);
    return std::tuple<int, int, double>{lo, lo + 1, w};
  };

  std::vector<std::tuple<int, int, double>> col_seg(static_cast<std::size_t>(width));
  for (int x = 0; x < width; ++x) col_seg[static_cast<std::size_t>(x)] = segment(cx, x);

  std::vector<float> out(lightness.size());
  for (int y = 0; y < height; ++y) {
    const auto [r0, r1, wy] = segment(cy, y);
    for (int x = 0; x < width; ++x) {
      const auto [c0, c1, wx] = col_seg[static_cast<std::size_t>(x)];
      const int v = lightness_bin(lightness[static_cast<std::size_t>(y) * width + x]);
      const double t00 = luts[static_cast<std::size_t>(r0) * cols + c0].map[static_cast<std::size_t>(v)];
      const double t10 = luts[static_cast<std::size_t>(r0) * cols + c1].map[static_cast<std::size_t>(v)];
      const double t01 = luts[static_cast<std::size_t>(r1) * cols + c0].map[static_cast<std::size_t>(v)];
      const double t11 = luts[static_cast<std::size_t>(r1) * cols + c1].map[static_cast<std::size_t>(v)];
      const double top = t00 + (t10 - t00) * wx;
      const double bot = t01 + (t11 - t01) * wx;
      out[static_cast<std::size_t>(y) * width + x] =
          bin_to_lightness(top + (bot - top) * wy);
    }
  }
  return out;
}

GammaResult gamma_to_mean(std::span<const float> unit_plane, double target_mean) {
  if (unit_plane.empty()) throw InvalidInput("gamma correction of an empty plane");
  if (!(target_mean > 0.0 && target_mean < 1.0))
    throw InvalidInput("gamma target mean must lie strictly inside (0,1)");
  bool has_interior = false;
  for (float v : unit_plane) {
    if (v < 0.0f || v > 1.0f)
      throw InvalidInput("gamma correction expects samples in [0,1]");
    if (v > 0.0f && v < 1.0f) has_interior = true;
  }
  if (!has_interior)
    throw UnreachableTarget(
        "plane holds only exact 0/1 samples; no exponent changes its mean");

  auto apply = [&](double gamma) {
    GammaResult res;
    res.gamma = gamma;
    res.plane.resize(unit_plane.size());
    for (std::size_t i = 0; i < unit_plane.size(); ++i)
      res.plane[i] = static_cast<float>(std::pow(static_cast<double>(unit_plane[i]), gamma));
    return res;
  };

  // mean(v^gamma) decreases in gamma; outside-bound targets clamp.
  const double mean_lo = plane_pow_mean(unit_plane, kGammaLo);
  const double mean_hi = plane_pow_mean(unit_plane, kGammaHi);
  if (target_mean >= mean_lo) return apply(kGammaLo);
  if (target_mean <= mean_hi) return apply(kGammaHi);

  double lo = kGammaLo, hi = kGammaHi;  // f(lo) > 0 > f(hi)
  auto f = [&](double gamma) { return plane_pow_mean(unit_plane, gamma) - target_mean; };

  double g_prev = 1.0, f_prev = f(g_prev);
  double g_cur = 1.5, f_cur = f(g_cur);
  auto shrink = [&](double g, double fg) {
    if (fg > 0)
      lo = std::max(lo, g);
    else
      hi = std::min(hi, g);
  };
  shrink(g_prev, f_prev);
  shrink(g_cur, f_cur);

  double best_g = std::abs(f_prev) < std::abs(f_cur) ? g_prev : g_cur;
  double best_f = std::min(std::abs(f_prev), std::abs(f_cur));
  bool secant_ok = true;
  for (int it = 0; it < kMaxSecantIters && best_f > 1e-12; ++it) {
    double g_next;
    if (secant_ok && f_cur != f_prev) {
      g_next = g_cur - f_cur * (g_cur - g_prev) / (f_cur - f_prev);
      if (!(g_next > lo && g_next < hi)) {
        secant_ok = false;
        g_next = 0.5 * (lo + hi);
      }
    } else {
      g_next = 0.5 * (lo + hi);
    }
    const double f_next = f(g_next);
    shrink(g_next, f_next);
    g_prev = g_cur;
    f_prev = f_cur;
    g_cur = g_next;
    f_cur = f_next;
    if (std::abs(f_cur) < best_f) {
      best_f = std::abs(f_cur);
      best_g = g_cur;
    }
  }
  return apply(best_g);
}

MonotoneLut match_lut(const Histogram256& source, const Histogram256& target) {
  if (source.total == 0) throw InvalidInput("source histogram is empty");
  if (target.total == 0) throw InvalidInput("target histogram is empty");

  std::array<double, 256> cdf_s{}, cdf_t{};
  std::uint64_t cs = 0, ct = 0;
  for (int i = 0; i < 256; ++i) {
    cs += source.bins[static_cast<std::size_t>(i)];
    ct += target.bins[static_cast<std::size_t>(i)];
    cdf_s[static_cast<std::size_t>(i)] = static_cast<double>(cs) / static_cast<double>(source.total);
    cdf_t[static_cast<std::size_t>(i)] = static_cast<double>(ct) / static_cast<double>(target.total);
  }

  MonotoneLut lut;
  int w = 0;
  for (int v = 0; v < 256; ++v) {
    const double s = cdf_s[static_cast<std::size_t>(v)];
    while (w < 255 && cdf_t[static_cast<std::size_t>(w)] < s) ++w;
    int chosen = w;
    if (w > 0) {
      const double d_lo = s - cdf_t[static_cast<std::size_t>(w) - 1];
      const double d_hi = std::abs(cdf_t[static_cast<std::size_t>(w)] - s);
      if (d_lo <= d_hi) chosen = w - 1;  // ties to the smaller level
    }
    if (v > 0) chosen = std::max<int>(chosen, lut.map[static_cast<std::size_t>(v) - 1]);
    lut.map[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(chosen);
  }
  return lut;
}

std::vector<float> match_histogram(std::span<const float> lightness,
                                   const Histogram256& target) {
  const Histogram256 source = histogram_of(lightness);
  const MonotoneLut lut = match_lut(source, target);
  std::vector<float> out(lightness.size());
  for (std::size_t i = 0; i < lightness.size(); ++i)
    out[i] = bin_to_lightness(lut.map[static_cast<std::size_t>(lightness_bin(lightness[i]))]);
  return out;
}

double trimmed_mean_lightness(std::span<const float> lightness, double trim) {
  if (!(trim >= 0.0 && trim < 0.5))
    throw InvalidInput("trim fraction must lie in [0, 0.5)");
  if (lightness.empty()) throw InvalidInput("trimmed mean of an empty plane");

  std::vector<float> sorted(lightness.begin(), lightness.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto lo = static_cast<std::size_t>(std::floor(trim * n));
  auto hi = static_cast<std::size_t>(std::ceil((1.0 - trim) * n));
  hi = std::min(hi, sorted.size());
  if (hi <= lo) hi = lo + 1;  // keep at least one sample

  double sum = 0.0;
  for (std::size_t i = lo; i < hi; ++i) sum += sorted[i];
  return sum / static_cast<double>(hi - lo);
}

RasterImage normalize_image(const RasterImage& img, const NormalisationMethod& method) {
  if (img.channels() != 3)
    throw InvalidInput("normalisation expects a 3-channel image");
  if (std::holds_alternative<NoneConfig>(method)) return img;

  LabImage lab = rgb_to_lab(img);
  if (std::holds_alternative<HistEqConfig>(method)) {
    lab.L = equalize(lab.L).plane;
  } else if (const auto* c = std::get_if<ClaheConfig>(&method)) {
    lab.L = clahe(lab.L, lab.width, lab.height, *c);
  } else if (const auto* g = std::get_if<GammaConfig>(&method)) {
    std::vector<float> unit(lab.L.size());
    for (std::size_t i = 0; i < unit.size(); ++i) unit[i] = lab.L[i] / 100.0f;
    GammaResult res = gamma_to_mean(unit, g->target_mean);
    for (std::size_t i = 0; i < unit.size(); ++i) lab.L[i] = res.plane[i] * 100.0f;
  } else if (const auto* m = std::get_if<HistMatchConfig>(&method)) {
    lab.L = match_histogram(lab.L, m->target);
  }
  return lab_to_rgb(lab);
}

}  // namespace lumen
