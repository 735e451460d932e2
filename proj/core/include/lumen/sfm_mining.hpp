#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lumen/descriptor.hpp"
#include "lumen/errors.hpp"
#include "lumen/rng.hpp"

namespace lumen {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

// One image of a 3D reconstruction: pose, reconstructed points and the
// trimmed-mean lightness used to rank illumination differences.
struct SfmImageRecord {
  std::string image_id;
  std::string cluster_id;
  Vec3 camera_center;
  Vec3 optical_axis;  // unit
  std::vector<Vec3> points;
  std::optional<double> trimmed_lightness;
};

struct Ball {
  Vec3 center;
  double radius = 0;
};

struct PositivePair {
  std::string anchor_id;    // the darker image
  std::string positive_id;  // the lighter image
  double iou = 0;
  double axis_angle_deg = 0;
  double delta_lightness = 0;
};

// center = mean of points, radius = RMS distance to the center. Fewer than
// two points, or all points coincident, is degenerate.
Ball ball_approx(std::span<const Vec3> points);

// Analytic volume IoU of two spheres (lens formula; containment handled via
// the volume ratio).
double sphere_iou(const Ball& a, const Ball& b);

// Angle between unit vectors in degrees, [0, 180].
double axis_angle_deg(const Vec3& a, const Vec3& b);

struct CandidatePair {
  std::string id_a, id_b;  // id_a < id_b
  double iou = 0;
  double angle_deg = 0;
};

struct CandidateResult {
  std::vector<CandidatePair> pairs;
  std::vector<std::string> skipped;  // records without a valid ball
};

// Exhaustive same-cluster pair scan keeping iou > iou_threshold and
// angle <= angle_threshold_deg.
CandidateResult candidate_positives(std::span<const SfmImageRecord> records,
                                    double iou_threshold = 0.55,
                                    double angle_threshold_deg = 45.0);

// Top-k candidates by |delta trimmed lightness| descending (ties by id pair);
// the darker image becomes the anchor.
std::vector<PositivePair> select_hard_positives(
    std::span<const CandidatePair> candidates,
    const std::unordered_map<std::string, double>& lightness, std::size_t k = 20000);

struct MiningResult {
  std::vector<std::string> ids;  // by descending similarity
  bool pool_exhausted = false;   // fewer eligible clusters than requested
};

// The n nearest pool descriptors to the anchor, skipping the anchor's cluster
// and taking at most one per cluster. Ties break by ascending id.
MiningResult mine_hard_negatives(
    const Descriptor& anchor, const DescriptorSet& pool,
    const std::unordered_map<std::string, std::string>& cluster_of,
    std::size_t n = 5);

enum class MixMode { DeterministicCycle, SeededRandom };

namespace detail {
void check_mix_args(std::size_t a_size, std::size_t b_size, int ratio_a, int ratio_b);
}

// Interleaves two streams at ratio_a:ratio_b. DeterministicCycle emits
// ratio_a draws from a then ratio_b from b per window; SeededRandom draws
// from a with probability ratio_a/(ratio_a+ratio_b). Sources cycle.
template <typename T>
std::vector<T> mix_datasets(std::span<const T> a, std::span<const T> b, int ratio_a,
                            int ratio_b, std::size_t count, MixMode mode,
                            std::uint64_t seed = 0) {
  detail::check_mix_args(a.size(), b.size(), ratio_a, ratio_b);
  std::vector<T> out;
  out.reserve(count);
  SplitMix64 rng(seed);
  const int window = ratio_a + ratio_b;
  const double p_a = window > 0 ? static_cast<double>(ratio_a) / window : 1.0;
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < count; ++i) {
    bool from_a;
    if (mode == MixMode::DeterministicCycle) {
      from_a = static_cast<int>(i % window) < ratio_a;
    } else {
      from_a = rng.next_double() < p_a;
    }
    if (from_a) {
      out.push_back(a[ia]);
      ia = (ia + 1) % a.size();
    } else {
      out.push_back(b[ib]);
      ib = (ib + 1) % b.size();
    }
  }
  return out;
}

// SfM model JSON: array (or {"images": array}) of
//   {"id", "cluster", "camera_center":[x,y,z], "optical_axis":[x,y,z],
//    "points":[[x,y,z],...]}
std::vector<SfmImageRecord> load_sfm_model(const std::filesystem::path& path);

// Sidecar CSV `image_id,trimmed_lightness`.
std::unordered_map<std::string, double> load_lightness_csv(
    const std::filesystem::path& path);

}  // namespace lumen
