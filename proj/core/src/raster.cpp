#include "lumen/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lumen {

namespace {

void check_dims(int width, int height, int channels) {
  if (width < 0 || height < 0)
    throw InvalidInput("image dimensions must be non-negative");
  if (channels != 1 && channels != 3)
    throw InvalidInput("images carry 1 or 3 channels, got " +
                       std::to_string(channels));
}

// sRGB <-> linear companding.
double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

// D65 reference white.
constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

constexpr double kLabEps = 216.0 / 24389.0;   // (6/29)^3
constexpr double kLabKappa = 24389.0 / 27.0;  // (29/3)^3

double lab_f(double t) {
  return t > kLabEps ? std::cbrt(t) : (kLabKappa * t + 16.0) / 116.0;
}

double lab_f_inv(double f) {
  double f3 = f * f * f;
  return f3 > kLabEps ? f3 : (116.0 * f - 16.0) / kLabKappa;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

// Reflected source index for coordinate i on an axis of size n, excluding the
// edge sample from the mirror (abc|cb). Period of the reflection is 2(n-1).
int reflect_index(long long i, int n) {
  if (n == 1) return 0;
  const long long period = 2LL * (n - 1);
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= n) m = period - m;
  return static_cast<int>(m);
}

int next_multiple_256(int v) { return ((v + 255) / 256) * 256; }

}  // namespace

RasterImage RasterImage::make_u8(int width, int height, int channels) {
  check_dims(width, height, channels);
  RasterImage img;
  img.width_ = width;
  img.height_ = height;
  img.channels_ = channels;
  img.kind_ = SampleKind::U8;
  img.bytes_.assign(static_cast<std::size_t>(width) * height * channels, 0);
  return img;
}

RasterImage RasterImage::make_f32(int width, int height, int channels) {
  check_dims(width, height, channels);
  RasterImage img;
  img.width_ = width;
  img.height_ = height;
  img.channels_ = channels;
  img.kind_ = SampleKind::F32;
  img.floats_.assign(static_cast<std::size_t>(width) * height * channels, 0.0f);
  return img;
}

std::span<const std::uint8_t> RasterImage::u8() const {
  if (kind_ != SampleKind::U8) throw InvalidInput("image does not hold 8-bit samples");
  return bytes_;
}

std::span<std::uint8_t> RasterImage::u8() {
  if (kind_ != SampleKind::U8) throw InvalidInput("image does not hold 8-bit samples");
  return bytes_;
}

std::span<const float> RasterImage::f32() const {
  if (kind_ != SampleKind::F32) throw InvalidInput("image does not hold float samples");
  return floats_;
}

std::span<float> RasterImage::f32() {
  if (kind_ != SampleKind::F32) throw InvalidInput("image does not hold float samples");
  return floats_;
}

LabImage rgb_to_lab(const RasterImage& img) {
  if (img.channels() != 3)
    throw InvalidInput("rgb_to_lab expects a 3-channel image");
  LabImage lab;
  lab.width = img.width();
  lab.height = img.height();
  const std::size_t n = static_cast<std::size_t>(lab.width) * lab.height;
  lab.L.resize(n);
  lab.a.resize(n);
  lab.b.resize(n);

  const bool is_u8 = img.kind() == SampleKind::U8;
  for (std::size_t p = 0; p < n; ++p) {
    double r, g, b;
    if (is_u8) {
      r = img.u8()[p * 3 + 0] / 255.0;
      g = img.u8()[p * 3 + 1] / 255.0;
      b = img.u8()[p * 3 + 2] / 255.0;
    } else {
      r = img.f32()[p * 3 + 0];
      g = img.f32()[p * 3 + 1];
      b = img.f32()[p * 3 + 2];
    }
    const double rl = srgb_to_linear(r);
    const double gl = srgb_to_linear(g);
    const double bl = srgb_to_linear(b);

    const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
    const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;

    const double fx = lab_f(x / kXn);
    const double fy = lab_f(y / kYn);
    const double fz = lab_f(z / kZn);

    lab.L[p] = static_cast<float>(std::clamp(116.0 * fy - 16.0, 0.0, 100.0));
    lab.a[p] = static_cast<float>(500.0 * (fx - fy));
    lab.b[p] = static_cast<float>(200.0 * (fy - fz));
  }
  return lab;
}

RasterImage lab_to_rgb(const LabImage& lab) {
  const std::size_t n = static_cast<std::size_t>(lab.width) * lab.height;
  if (lab.L.size() != n || lab.a.size() != n || lab.b.size() != n)
    throw InvalidInput("lab planes do not match the stated dimensions");
  RasterImage img = RasterImage::make_u8(lab.width, lab.height, 3);
  auto out = img.u8();
  for (std::size_t p = 0; p < n; ++p) {
    const double L = lab.L[p];
    const double fy = (L + 16.0) / 116.0;
    const double fx = fy + lab.a[p] / 500.0;
    const double fz = fy - lab.b[p] / 200.0;

    const double x = kXn * lab_f_inv(fx);
    const double y = kYn * (L > kLabKappa * kLabEps ? fy * fy * fy : L / kLabKappa);
    const double z = kZn * lab_f_inv(fz);

    const double rl = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
    const double gl = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
    const double bl = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;

    out[p * 3 + 0] = quantize(255.0 * linear_to_srgb(std::clamp(rl, 0.0, 1.0)));
    out[p * 3 + 1] = quantize(255.0 * linear_to_srgb(std::clamp(gl, 0.0, 1.0)));
    out[p * 3 + 2] = quantize(255.0 * linear_to_srgb(std::clamp(bl, 0.0, 1.0)));
  }
  return img;
}

std::pair<RasterImage, PadRecord> pad_reflect_256(const RasterImage& img) {
  if (img.width() < 2 || img.height() < 2)
    throw InvalidInput("reflection padding needs width and height >= 2");

  const int out_w = next_multiple_256(img.width());
  const int out_h = next_multiple_256(img.height());
  PadRecord rec;
  rec.left = (out_w - img.width()) / 2;
  rec.right = out_w - img.width() - rec.left;
  rec.top = (out_h - img.height()) / 2;
  rec.bottom = out_h - img.height() - rec.top;
  if (rec.is_zero()) return {img, rec};

  RasterImage out = img.kind() == SampleKind::U8
                        ? RasterImage::make_u8(out_w, out_h, img.channels())
                        : RasterImage::make_f32(out_w, out_h, img.channels());
  const int ch = img.channels();
  for (int y = 0; y < out_h; ++y) {
    const int sy = reflect_index(static_cast<long long>(y) - rec.top, img.height());
    for (int x = 0; x < out_w; ++x) {
      const int sx = reflect_index(static_cast<long long>(x) - rec.left, img.width());
      for (int c = 0; c < ch; ++c) {
        if (img.kind() == SampleKind::U8)
          out.u8()[out.index(x, y, c)] = img.u8()[img.index(sx, sy, c)];
        else
          out.f32()[out.index(x, y, c)] = img.f32()[img.index(sx, sy, c)];
      }
    }
  }
  return {std::move(out), rec};
}

RasterImage unpad(const RasterImage& img, const PadRecord& rec) {
  if (rec.left < 0 || rec.right < 0 || rec.top < 0 || rec.bottom < 0)
    throw InvalidInput("pad record fields must be non-negative");
  const int w = img.width() - rec.left - rec.right;
  const int h = img.height() - rec.top - rec.bottom;
  if (w < 1 || h < 1)
    throw InvalidInput("pad record exceeds image dimensions");
  if (rec.is_zero()) return img;

  RasterImage out = img.kind() == SampleKind::U8
                        ? RasterImage::make_u8(w, h, img.channels())
                        : RasterImage::make_f32(w, h, img.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        if (img.kind() == SampleKind::U8)
          out.u8()[out.index(x, y, c)] = img.u8()[img.index(x + rec.left, y + rec.top, c)];
        else
          out.f32()[out.index(x, y, c)] = img.f32()[img.index(x + rec.left, y + rec.top, c)];
      }
    }
  }
  return out;
}

RasterImage resize_bilinear(const RasterImage& img, int out_width, int out_height) {
  if (out_width < 1 || out_height < 1)
    throw InvalidInput("resize target must be at least 1x1");
  if (img.empty()) throw InvalidInput("cannot resize an empty image");
  if (out_width == img.width() && out_height == img.height()) return img;

  const bool is_u8 = img.kind() == SampleKind::U8;
  RasterImage out = is_u8 ? RasterImage::make_u8(out_width, out_height, img.channels())
                          : RasterImage::make_f32(out_width, out_height, img.channels());
  const double sx = static_cast<double>(img.width()) / out_width;
  const double sy = static_cast<double>(img.height()) / out_height;
  const int ch = img.channels();

  for (int y = 0; y < out_height; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < ch; ++c) {
        double v00, v10, v01, v11;
        if (is_u8) {
          v00 = img.u8()[img.index(x0, y0, c)];
          v10 = img.u8()[img.index(x1, y0, c)];
          v01 = img.u8()[img.index(x0, y1, c)];
          v11 = img.u8()[img.index(x1, y1, c)];
        } else {
          v00 = img.f32()[img.index(x0, y0, c)];
          v10 = img.f32()[img.index(x1, y0, c)];
          v01 = img.f32()[img.index(x0, y1, c)];
          v11 = img.f32()[img.index(x1, y1, c)];
        }
        const double top = v00 + (v10 - v00) * wx;
        const double bot = v01 + (v11 - v01) * wx;
        const double v = top + (bot - top) * wy;
        if (is_u8)
          out.u8()[out.index(x, y, c)] = quantize(v);
        else
          out.f32()[out.index(x, y, c)] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

RasterImage resize_longest_edge(const RasterImage& img, int target) {
  if (target < 1) throw InvalidInput("resize target must be >= 1");
  if (img.empty()) throw InvalidInput("cannot resize an empty image");
  const int longer = std::max(img.width(), img.height());
  if (longer == target) return img;
  const double scale = static_cast<double>(target) / longer;
  int w, h;
  if (img.width() >= img.height()) {
    w = target;
    h = std::max(1, static_cast<int>(std::lround(img.height() * scale)));
  } else {
    h = target;
    w = std::max(1, static_cast<int>(std::lround(img.width() * scale)));
  }
  return resize_bilinear(img, w, h);
}

}  // namespace lumen
