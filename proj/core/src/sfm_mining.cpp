#include "lumen/sfm_mining.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numbers>

#include <nlohmann/json.hpp>

namespace lumen {

namespace {

using json = nlohmann::json;

double sphere_volume(double r) {
  return 4.0 / 3.0 * std::numbers::pi * r * r * r;
}

}  // namespace

namespace detail {

void check_mix_args(std::size_t a_size, std::size_t b_size, int ratio_a, int ratio_b) {
  if (ratio_a < 0 || ratio_b < 0 || ratio_a + ratio_b < 1)
    throw InvalidInput("mix ratio must have at least one positive component");
  if (ratio_a > 0 && a_size == 0)
    throw InvalidInput("stream a is empty but has a positive ratio");
  if (ratio_b > 0 && b_size == 0)
    throw InvalidInput("stream b is empty but has a positive ratio");
}

}  // namespace detail

Ball ball_approx(std::span<const Vec3> points) {
  if (points.size() < 2)
    throw DegenerateGeometry("ball approximation needs at least two points");
  Vec3 center;
  for (const Vec3& p : points) center = center + p;
  center = center * (1.0 / static_cast<double>(points.size()));

  double sq = 0.0;
  for (const Vec3& p : points) {
    const Vec3 d = p - center;
    sq += d.dot(d);
  }
  const double radius = std::sqrt(sq / static_cast<double>(points.size()));
  if (radius <= 0.0)
    throw DegenerateGeometry("all points coincide; ball radius is zero");
  return {center, radius};
}

double sphere_iou(const Ball& a, const Ball& b) {
  if (!(a.radius > 0.0) || !(b.radius > 0.0))
    throw InvalidInput("sphere IoU requires positive radii");
  const double d = (a.center - b.center).norm();
  const double r_sum = a.radius + b.radius;
  if (d >= r_sum) return 0.0;

  const double va = sphere_volume(a.radius);
  const double vb = sphere_volume(b.radius);
  if (d <= std::abs(a.radius - b.radius)) {
    // One ball inside the other: intersection is the smaller volume.
    return std::min(va, vb) / std::max(va, vb);
  }

  const double r = a.radius, s = b.radius;
  const double lens = std::numbers::pi * (r_sum - d) * (r_sum - d) *
                      (d * d + 2.0 * d * s - 3.0 * s * s + 2.0 * d * r +
                       6.0 * r * s - 3.0 * r * r) /
                      (12.0 * d);
  return lens / (va + vb - lens);
}

double axis_angle_deg(const Vec3& a, const Vec3& b) {
  if (std::abs(a.norm() - 1.0) > 1e-3 || std::abs(b.norm() - 1.0) > 1e-3)
    throw InvalidInput("axis angle expects unit vectors");
  const double dot = std::clamp(a.dot(b), -1.0, 1.0);
  return std::acos(dot) * 180.0 / std::numbers::pi;
}

CandidateResult candidate_positives(std::span<const SfmImageRecord> records,
                                    double iou_threshold,
                                    double angle_threshold_deg) {
  CandidateResult result;
  std::vector<std::optional<Ball>> balls(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      balls[i] = ball_approx(records[i].points);
    } catch (const DegenerateGeometry&) {
      result.skipped.push_back(records[i].image_id);
    }
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!balls[i]) continue;
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      if (!balls[j]) continue;
      if (records[i].cluster_id != records[j].cluster_id) continue;
      const double iou = sphere_iou(*balls[i], *balls[j]);
      if (!(iou > iou_threshold)) continue;
      const double angle = axis_angle_deg(records[i].optical_axis, records[j].optical_axis);
      if (angle > angle_threshold_deg) continue;
      CandidatePair pair;
      pair.id_a = std::min(records[i].image_id, records[j].image_id);
      pair.id_b = std::max(records[i].image_id, records[j].image_id);
      pair.iou = iou;
      pair.angle_deg = angle;
      result.pairs.push_back(std::move(pair));
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end(),
            [](const CandidatePair& a, const CandidatePair& b) {
              return std::tie(a.id_a, a.id_b) < std::tie(b.id_a, b.id_b);
            });
  return result;
}

std::vector<PositivePair> select_hard_positives(
    std::span<const CandidatePair> candidates,
    const std::unordered_map<std::string, double>& lightness, std::size_t k) {
  if (k == 0) throw InvalidInput("pair budget k must be positive");
  auto light = [&](const std::string& id) {
    auto it = lightness.find(id);
    if (it == lightness.end())
      throw InvalidInput("no trimmed lightness for image: " + id);
    return it->second;
  };

  std::vector<PositivePair> pairs;
  pairs.reserve(candidates.size());
  for (const CandidatePair& c : candidates) {
    const double la = light(c.id_a);
    const double lb = light(c.id_b);
    PositivePair p;
    // The darker image anchors; equal lightness keeps id order.
    if (la <= lb) {
      p.anchor_id = c.id_a;
      p.positive_id = c.id_b;
    } else {
      p.anchor_id = c.id_b;
      p.positive_id = c.id_a;
    }
    p.iou = c.iou;
    p.axis_angle_deg = c.angle_deg;
    p.delta_lightness = std::abs(la - lb);
    pairs.push_back(std::move(p));
  }

  std::sort(pairs.begin(), pairs.end(), [](const PositivePair& a, const PositivePair& b) {
    if (a.delta_lightness != b.delta_lightness)
      return a.delta_lightness > b.delta_lightness;
    return std::tie(a.anchor_id, a.positive_id) < std::tie(b.anchor_id, b.positive_id);
  });
  if (pairs.size() > k) pairs.resize(k);
  return pairs;
}

MiningResult mine_hard_negatives(
    const Descriptor& anchor, const DescriptorSet& pool,
    const std::unordered_map<std::string, std::string>& cluster_of, std::size_t n) {
  if (pool.empty()) throw InvalidInput("hard-negative pool is empty");
  if (anchor.dim() != pool.dim())
    throw InvalidInput("anchor dimension does not match the pool");
  auto cluster = [&](const std::string& id) -> const std::string& {
    auto it = cluster_of.find(id);
    if (it == cluster_of.end()) throw InvalidInput("no cluster for id: " + id);
    return it->second;
  };
  const std::string anchor_cluster = cluster(anchor.image_id);

  // Best candidate per foreign cluster, then the top n clusters.
  struct Candidate {
    double sim;
    const std::string* id;
  };
  std::map<std::string, Candidate> best;
  for (const Descriptor& d : pool) {
    const std::string& c = cluster(d.image_id);
    if (c == anchor_cluster) continue;
    double sim = 0.0;
    for (std::size_t i = 0; i < d.values.size(); ++i)
      sim += static_cast<double>(anchor.values[i]) * d.values[i];
    auto it = best.find(c);
    if (it == best.end() || sim > it->second.sim ||
        (sim == it->second.sim && d.image_id < *it->second.id)) {
      best[c] = {sim, &d.image_id};
    }
  }

  std::vector<Candidate> winners;
  winners.reserve(best.size());
  for (auto& [c, cand] : best) winners.push_back(cand);
  std::sort(winners.begin(), winners.end(), [](const Candidate& a, const Candidate& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return *a.id < *b.id;
  });

  MiningResult result;
  result.pool_exhausted = winners.size() < n;
  const std::size_t take = std::min(n, winners.size());
  result.ids.reserve(take);
  for (std::size_t i = 0; i < take; ++i) result.ids.push_back(*winners[i].id);
  return result;
}

std::vector<SfmImageRecord> load_sfm_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path.string() + ": cannot open for reading");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what(), e.byte);
  }

  const json* images = &j;
  if (j.is_object()) {
    if (!j.contains("images"))
      throw InvalidInput(path.string() + ": expected an array or {\"images\": [...]}");
    images = &j.at("images");
  }
  if (!images->is_array())
    throw InvalidInput(path.string() + ": image list is not an array");

  auto parse_vec3 = [&](const json& v, const char* field, const std::string& id) {
    if (!v.is_array() || v.size() != 3)
      throw InvalidInput(path.string() + ": image " + id + ": " + field +
                         " must be [x, y, z]");
    return Vec3{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  };

  std::vector<SfmImageRecord> records;
  records.reserve(images->size());
  for (const json& ji : *images) {
    SfmImageRecord rec;
    try {
      rec.image_id = ji.at("id").get<std::string>();
      rec.cluster_id = ji.at("cluster").is_string()
                           ? ji.at("cluster").get<std::string>()
                           : std::to_string(ji.at("cluster").get<long long>());
      rec.camera_center = parse_vec3(ji.at("camera_center"), "camera_center", rec.image_id);
      rec.optical_axis = parse_vec3(ji.at("optical_axis"), "optical_axis", rec.image_id);
      for (const json& jp : ji.at("points"))
        rec.points.push_back(parse_vec3(jp, "points[]", rec.image_id));
      if (ji.contains("trimmed_lightness"))
        rec.trimmed_lightness = ji.at("trimmed_lightness").get<double>();
    } catch (const json::exception& e) {
      throw InvalidInput(path.string() + ": image entry " +
                         std::to_string(records.size()) + ": " + e.what());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::unordered_map<std::string, double> load_lightness_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path.string() + ": cannot open for reading");
  std::unordered_map<std::string, double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && (line == "image_id,trimmed_lightness" || line == "id,trimmed_lightness"))
      continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) +
                         ": expected `id,value`");
    try {
      out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) +
                         ": malformed lightness value");
    }
  }
  return out;
}

}  // namespace lumen
