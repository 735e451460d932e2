#include "lumen/descriptor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "lumen/errors.hpp"

namespace lumen {

namespace {

// Gradients weaker than this (in 8-bit grey levels) do not vote. An absolute
// cut keeps the descriptor sensitive to global illumination level, which is
// exactly what the normalisation stages are meant to repair.
constexpr double kMagnitudeThreshold = 8.0;

double grey_at(const RasterImage& img, int x, int y) {
  if (img.channels() == 1) {
    return img.kind() == SampleKind::U8 ? static_cast<double>(img.u8()[img.index(x, y, 0)])
                                        : 255.0 * img.f32()[img.index(x, y, 0)];
  }
  double r, g, b;
  if (img.kind() == SampleKind::U8) {
    r = img.u8()[img.index(x, y, 0)];
    g = img.u8()[img.index(x, y, 1)];
    b = img.u8()[img.index(x, y, 2)];
  } else {
    r = 255.0 * img.f32()[img.index(x, y, 0)];
    g = 255.0 * img.f32()[img.index(x, y, 1)];
    b = 255.0 * img.f32()[img.index(x, y, 2)];
  }
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

void put_u32_le(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>((v >> 8) & 0xFF),
                              static_cast<unsigned char>((v >> 16) & 0xFF),
                              static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32_le(const unsigned char* p) {
  return std::bit_cast<float>(get_u32_le(p));
}

}  // namespace

void DescriptorSet::add(Descriptor d) {
  if (dim_ == 0 && entries_.empty()) dim_ = d.dim();
  if (d.dim() != dim_)
    throw InvalidInput("descriptor dimension " + std::to_string(d.dim()) +
                       " does not match set dimension " + std::to_string(dim_));
  if (index_.contains(d.image_id))
    throw InvalidInput("duplicate descriptor id: " + d.image_id);
  index_.emplace(d.image_id, entries_.size());
  entries_.push_back(std::move(d));
}

const Descriptor* DescriptorSet::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::optional<std::size_t> DescriptorSet::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Descriptor l2_normalize(Descriptor d) {
  double sq = 0.0;
  for (float v : d.values) sq += static_cast<double>(v) * v;
  if (sq == 0.0) throw InvalidInput("cannot normalise a zero descriptor");
  const double inv = 1.0 / std::sqrt(sq);
  for (float& v : d.values) v = static_cast<float>(v * inv);
  return d;
}

Descriptor extract_toy_descriptor(const RasterImage& img, int grid, int orientations) {
  if (grid < 1 || orientations < 1)
    throw InvalidInput("grid and orientation counts must be positive");
  if (img.width() < 8 || img.height() < 8 || img.width() < grid || img.height() < grid)
    throw InvalidInput("image too small for the toy descriptor (needs >= 8x8)");

  const int w = img.width(), h = img.height();
  std::vector<double> grey(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      grey[static_cast<std::size_t>(y) * w + x] = grey_at(img, x, y);

  const int dim = grid * grid * orientations;
  std::vector<double> hist(static_cast<std::size_t>(dim), 0.0);
  for (int y = 1; y < h - 1; ++y) {
    const int cy = std::min(grid - 1, y * grid / h);
    for (int x = 1; x < w - 1; ++x) {
      const double gx = 0.5 * (grey[static_cast<std::size_t>(y) * w + x + 1] -
                               grey[static_cast<std::size_t>(y) * w + x - 1]);
      const double gy = 0.5 * (grey[static_cast<std::size_t>(y + 1) * w + x] -
                               grey[static_cast<std::size_t>(y - 1) * w + x]);
      const double mag = std::hypot(gx, gy);
      if (mag < kMagnitudeThreshold) continue;
      const double angle = std::atan2(gy, gx);  // (-pi, pi]
      int bin = static_cast<int>((angle + std::numbers::pi) /
                                 (2.0 * std::numbers::pi) * orientations);
      bin = std::clamp(bin, 0, orientations - 1);
      const int cx = std::min(grid - 1, x * grid / w);
      hist[static_cast<std::size_t>((cy * grid + cx) * orientations + bin)] += 1.0;
    }
  }

  Descriptor d;
  d.values.resize(static_cast<std::size_t>(dim));
  double sq = 0.0;
  for (double v : hist) sq += v * v;
  if (sq == 0.0) {
    // No gradients at all: the uniform unit vector keeps batch pipelines total.
    const float u = static_cast<float>(1.0 / std::sqrt(static_cast<double>(dim)));
    std::fill(d.values.begin(), d.values.end(), u);
    return d;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (int i = 0; i < dim; ++i)
    d.values[static_cast<std::size_t>(i)] = static_cast<float>(hist[static_cast<std::size_t>(i)] * inv);
  return d;
}

Descriptor concat(const Descriptor& a, const Descriptor& b) {
  if (a.image_id != b.image_id)
    throw InvalidInput("concat requires descriptors of the same image (" +
                       a.image_id + " vs " + b.image_id + ")");
  Descriptor out;
  out.image_id = a.image_id;
  out.values.reserve(a.values.size() + b.values.size());
  out.values.insert(out.values.end(), a.values.begin(), a.values.end());
  out.values.insert(out.values.end(), b.values.begin(), b.values.end());
  return out;
}

double contrastive_loss(const Descriptor& d1, const Descriptor& d2, bool is_match,
                        const ContrastiveConfig& cfg) {
  if (d1.dim() != d2.dim())
    throw InvalidInput("contrastive loss requires equal dimensions");
  if (cfg.margin <= 0.0) throw InvalidInput("contrastive margin must be positive");
  double sq = 0.0;
  for (std::size_t i = 0; i < d1.values.size(); ++i) {
    const double diff = static_cast<double>(d1.values[i]) - d2.values[i];
    sq += diff * diff;
  }
  if (is_match) return 0.5 * sq;
  const double hinge = std::max(0.0, cfg.margin - std::sqrt(sq));
  return 0.5 * hinge * hinge;
}

DescriptorSet read_descriptors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(path.string() + ": cannot open for reading");
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  if (data.size() < 4 || std::memcmp(data.data(), "DSC1", 4) != 0)
    throw FormatError(path.string() + ": bad magic, expected DSC1", 0);
  if (data.size() < 12)
    throw FormatError(path.string() + ": truncated header, expected 12 bytes, found " +
                          std::to_string(data.size()),
                      data.size());

  const std::uint32_t count = get_u32_le(data.data() + 4);
  const std::uint32_t dim = get_u32_le(data.data() + 8);
  if (count > 0 && dim == 0)
    throw FormatError(path.string() + ": zero dimension with non-zero count", 8);

  const std::uint64_t payload = static_cast<std::uint64_t>(count) * dim * 4;
  if (data.size() < 12 + payload)
    throw FormatError(path.string() + ": truncated float payload, expected " +
                          std::to_string(payload) + " bytes, found " +
                          std::to_string(data.size() - 12),
                      12);

  DescriptorSet set(static_cast<int>(dim));
  std::size_t offset = 12;
  std::vector<std::vector<float>> rows(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    rows[i].resize(dim);
    for (std::uint32_t j = 0; j < dim; ++j) {
      rows[i][j] = get_f32_le(data.data() + offset + static_cast<std::size_t>(j) * 4);
      if (!std::isfinite(rows[i][j]))
        throw FormatError(path.string() + ": non-finite descriptor value",
                          offset + static_cast<std::size_t>(j) * 4);
    }
    offset += static_cast<std::size_t>(dim) * 4;
  }

  // Id table: one id per '\n'-terminated row.
  std::vector<std::string> ids;
  std::string current;
  for (std::size_t i = offset; i < data.size(); ++i) {
    const char c = static_cast<char>(data[i]);
    if (c == '\n') {
      ids.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) ids.push_back(current);
  if (ids.size() != count)
    throw FormatError(path.string() + ": id table holds " + std::to_string(ids.size()) +
                          " rows, expected " + std::to_string(count),
                      offset);

  for (std::uint32_t i = 0; i < count; ++i) {
    if (ids[i].empty())
      throw FormatError(path.string() + ": empty id in table row " + std::to_string(i),
                        offset);
    Descriptor d;
    d.image_id = ids[i];
    d.values = std::move(rows[i]);
    try {
      set.add(std::move(d));
    } catch (const InvalidInput& e) {
      throw FormatError(path.string() + ": " + e.what(), offset);
    }
  }
  return set;
}

void write_descriptors(const DescriptorSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput(path.string() + ": cannot open for writing");
  out.write("DSC1", 4);
  put_u32_le(out, static_cast<std::uint32_t>(set.size()));
  put_u32_le(out, static_cast<std::uint32_t>(set.dim()));
  for (const Descriptor& d : set) {
    for (float v : d.values) put_u32_le(out, std::bit_cast<std::uint32_t>(v));
  }
  for (const Descriptor& d : set) {
    out.write(d.image_id.data(), static_cast<std::streamsize>(d.image_id.size()));
    out.put('\n');
  }
  if (!out) throw InvalidInput(path.string() + ": short write");
}

}  // namespace lumen
