#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lumen/raster.hpp"

namespace lumen {

struct Descriptor {
  std::string image_id;
  std::vector<float> values;

  int dim() const { return static_cast<int>(values.size()); }
};

// Ordered, id-indexed collection of equal-dimension descriptors.
class DescriptorSet {
 public:
  DescriptorSet() = default;
  explicit DescriptorSet(int dim) : dim_(dim) {}

  void add(Descriptor d);

  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const Descriptor& at(std::size_t i) const { return entries_.at(i); }
  const Descriptor* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  int dim_ = 0;
  std::vector<Descriptor> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ContrastiveConfig {
  double margin = 0.75;
};

// Unit Euclidean norm; a zero vector is invalid input.
Descriptor l2_normalize(Descriptor d);

// Self-contained stand-in for an embedding network: per-cell counts of
// gradient orientations on the greyscale image, 4x4 cells x 8 bins = 128-D,
// L2-normalised. A gradient-free (constant) image maps to the uniform unit
// vector.
Descriptor extract_toy_descriptor(const RasterImage& img, int grid = 4,
                                  int orientations = 8);

// a then b, same image_id required; not re-normalised (whitening follows).
Descriptor concat(const Descriptor& a, const Descriptor& b);

// Matching pairs: 0.5 * ||d1 - d2||^2.
// Non-matching:   0.5 * max(0, margin - ||d1 - d2||)^2.
double contrastive_loss(const Descriptor& d1, const Descriptor& d2, bool is_match,
                        const ContrastiveConfig& cfg = {});

// DSC1 container: "DSC1" | u32le count | u32le dim | count*dim f32le
// row-major | one UTF-8 id per '\n'-terminated row.
DescriptorSet read_descriptors(const std::filesystem::path& path);
void write_descriptors(const DescriptorSet& set, const std::filesystem::path& path);

}  // namespace lumen
