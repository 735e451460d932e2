#include "lumen/whitening.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "lumen/errors.hpp"
#include "lumen/rng.hpp"

namespace lumen {

namespace {

Eigen::VectorXd to_vector(const Descriptor& d) {
  Eigen::VectorXd v(d.dim());
  for (int i = 0; i < d.dim(); ++i) v(i) = d.values[static_cast<std::size_t>(i)];
  return v;
}

const Descriptor& resolve(const DescriptorSet& set, const std::string& id) {
  const Descriptor* d = set.find(id);
  if (!d) throw InvalidInput("pair references unknown descriptor id: " + id);
  return *d;
}

// Mean outer-product scatter of pair differences.
Eigen::MatrixXd pair_scatter(const DescriptorSet& set,
                             const std::vector<std::pair<std::string, std::string>>& pairs) {
  const int dim = set.dim();
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& [ia, ib] : pairs) {
    if (ia == ib) throw InvalidInput("pair (" + ia + ", " + ib + ") is a self-pair");
    const Eigen::VectorXd diff = to_vector(resolve(set, ia)) - to_vector(resolve(set, ib));
    scatter.noalias() += diff * diff.transpose();
  }
  scatter /= static_cast<double>(pairs.size());
  return scatter;
}

// Flips each eigenvector so its largest-magnitude entry is positive; removes
// the solver's sign ambiguity so learned transforms are reproducible.
Eigen::VectorXd canonical_sign(Eigen::VectorXd v) {
  int arg = 0;
  for (int i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
  if (v(arg) < 0) v = -v;
  return v;
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

}  // namespace

PairList pairs_from_clusters(
    const DescriptorSet& set,
    const std::unordered_map<std::string, std::string>& cluster_of,
    std::size_t max_non_matching, std::uint64_t seed) {
  PairList out;
  auto cluster = [&](const Descriptor& d) -> const std::string& {
    auto it = cluster_of.find(d.image_id);
    if (it == cluster_of.end())
      throw InvalidInput("no cluster for descriptor id: " + d.image_id);
    return it->second;
  };

  SplitMix64 rng(seed);
  std::size_t cross_seen = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      const Descriptor& a = set.at(i);
      const Descriptor& b = set.at(j);
      if (cluster(a) == cluster(b)) {
        out.matching.emplace_back(a.image_id, b.image_id);
      } else {
        ++cross_seen;
        if (out.non_matching.size() < max_non_matching) {
          out.non_matching.emplace_back(a.image_id, b.image_id);
        } else {
          // Reservoir sampling keeps a uniform subsample of the cross pairs.
          const std::uint64_t slot = rng.next_below(cross_seen);
          if (slot < max_non_matching)
            out.non_matching[static_cast<std::size_t>(slot)] = {a.image_id, b.image_id};
        }
      }
    }
  }
  return out;
}

WhiteningTransform learn_whitening(const DescriptorSet& set, const PairList& pairs,
                                   int d_out) {
  const int dim = set.dim();
  if (dim < 1) throw InvalidInput("descriptor set carries no dimensions");
  if (d_out < 1 || d_out > dim)
    throw InvalidInput("d_out must lie in [1, " + std::to_string(dim) + "]");
  if (pairs.matching.empty())
    throw InvalidInput("whitening needs at least one matching pair");

  const Eigen::MatrixXd intra = pair_scatter(set, pairs.matching);
  const double trace = intra.trace();
  if (!(trace > 0.0))
    throw RankError("matching-pair differences are identically zero");
  const double lambda = 1e-6 * trace / dim;

  // Inverse square root with the spectrum floored at lambda: well-conditioned
  // directions whiten exactly, degenerate ones are capped instead of blowing up.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> intra_eig(intra);
  if (intra_eig.info() != Eigen::Success)
    throw RankError("eigendecomposition of the intra-pair scatter failed");
  const Eigen::VectorXd floored = intra_eig.eigenvalues().cwiseMax(lambda);
  const Eigen::MatrixXd whitener = intra_eig.eigenvectors() *
                                   floored.cwiseSqrt().cwiseInverse().asDiagonal() *
                                   intra_eig.eigenvectors().transpose();

  Eigen::MatrixXd basis;  // d_out x dim, rows are whitened-space directions
  if (pairs.non_matching.empty()) {
    if (d_out != dim)
      throw InvalidInput("dimensionality reduction needs non-matching pairs");
    basis = Eigen::MatrixXd::Identity(dim, dim);
  } else {
    const Eigen::MatrixXd inter_raw = pair_scatter(set, pairs.non_matching);
    const Eigen::MatrixXd inter = whitener * inter_raw * whitener.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> inter_eig(
        0.5 * (inter + inter.transpose()));
    if (inter_eig.info() != Eigen::Success)
      throw RankError("eigendecomposition of the inter-pair scatter failed");
    basis.resize(d_out, dim);
    for (int k = 0; k < d_out; ++k)
      basis.row(k) = canonical_sign(inter_eig.eigenvectors().col(dim - 1 - k)).transpose();
  }

  const Eigen::MatrixXd projection = basis * whitener;

  WhiteningTransform t;
  t.d_in = dim;
  t.d_out = d_out;
  t.mean.assign(static_cast<std::size_t>(dim), 0.0);
  for (const Descriptor& d : set)
    for (int i = 0; i < dim; ++i) t.mean[static_cast<std::size_t>(i)] += d.values[static_cast<std::size_t>(i)];
  for (double& m : t.mean) m /= static_cast<double>(set.size());

  t.projection.resize(static_cast<std::size_t>(d_out) * dim);
  for (int r = 0; r < d_out; ++r)
    for (int c = 0; c < dim; ++c)
      t.projection[static_cast<std::size_t>(r) * dim + c] = projection(r, c);
  return t;
}

Descriptor apply_whitening(const WhiteningTransform& t, const Descriptor& d) {
  if (d.dim() != t.d_in)
    throw InvalidInput("descriptor dimension " + std::to_string(d.dim()) +
                       " does not match transform input " + std::to_string(t.d_in));
  std::vector<double> centered(static_cast<std::size_t>(t.d_in));
  for (int i = 0; i < t.d_in; ++i)
    centered[static_cast<std::size_t>(i)] = d.values[static_cast<std::size_t>(i)] - t.mean[static_cast<std::size_t>(i)];

  Descriptor out;
  out.image_id = d.image_id;
  out.values.resize(static_cast<std::size_t>(t.d_out));
  std::vector<double> projected(static_cast<std::size_t>(t.d_out), 0.0);
  double sq = 0.0;
  for (int r = 0; r < t.d_out; ++r) {
    double acc = 0.0;
    const double* row = t.projection.data() + static_cast<std::size_t>(r) * t.d_in;
    for (int c = 0; c < t.d_in; ++c) acc += row[c] * centered[static_cast<std::size_t>(c)];
    projected[static_cast<std::size_t>(r)] = acc;
    sq += acc * acc;
  }
  if (sq == 0.0) {
    // Input collapsed onto the mean: flagged as the all-zero descriptor.
    std::fill(out.values.begin(), out.values.end(), 0.0f);
    return out;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (int r = 0; r < t.d_out; ++r)
    out.values[static_cast<std::size_t>(r)] = static_cast<float>(projected[static_cast<std::size_t>(r)] * inv);
  return out;
}

DescriptorSet apply_whitening(const WhiteningTransform& t, const DescriptorSet& set) {
  DescriptorSet out(t.d_out);
  for (const Descriptor& d : set) out.add(apply_whitening(t, d));
  return out;
}

EnsembleResult reduce_ensemble(const DescriptorSet& a, const DescriptorSet& b,
                               const PairList& pairs, int d_out) {
  if (a.size() != b.size())
    throw InvalidInput("ensemble sets differ in size");
  DescriptorSet joint(a.dim() + b.dim());
  for (const Descriptor& da : a) {
    const Descriptor* db = b.find(da.image_id);
    if (!db)
      throw InvalidInput("ensemble id misalignment: " + da.image_id +
                         " missing from the second set");
    joint.add(concat(da, *db));
  }
  WhiteningTransform t = learn_whitening(joint, pairs, d_out);
  return {apply_whitening(t, joint), std::move(t)};
}

WhiteningTransform read_whitening(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(path.string() + ": cannot open for reading");
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  if (data.size() < 4 || std::memcmp(data.data(), "WHT1", 4) != 0)
    throw FormatError(path.string() + ": bad magic, expected WHT1", 0);
  if (data.size() < 12)
    throw FormatError(path.string() + ": truncated header, expected 12 bytes, found " +
                          std::to_string(data.size()),
                      data.size());
  const std::uint32_t d_in = get_u32_le(data.data() + 4);
  const std::uint32_t d_out = get_u32_le(data.data() + 8);
  if (d_in == 0 || d_out == 0 || d_out > d_in)
    throw FormatError(path.string() + ": inconsistent dimensions d_in=" +
                          std::to_string(d_in) + " d_out=" + std::to_string(d_out),
                      4);

  const std::uint64_t expected =
      (static_cast<std::uint64_t>(d_in) + static_cast<std::uint64_t>(d_out) * d_in) * 4;
  if (data.size() - 12 < expected)
    throw FormatError(path.string() + ": truncated payload, expected " +
                          std::to_string(expected) + " bytes, found " +
                          std::to_string(data.size() - 12),
                      12);

  auto f32_at = [&](std::size_t off) {
    return std::bit_cast<float>(get_u32_le(data.data() + off));
  };

  WhiteningTransform t;
  t.d_in = static_cast<int>(d_in);
  t.d_out = static_cast<int>(d_out);
  std::size_t off = 12;
  t.mean.resize(d_in);
  for (std::uint32_t i = 0; i < d_in; ++i, off += 4) t.mean[i] = f32_at(off);
  t.projection.resize(static_cast<std::size_t>(d_out) * d_in);
  for (std::size_t i = 0; i < t.projection.size(); ++i, off += 4)
    t.projection[i] = f32_at(off);
  return t;
}

void write_whitening(const WhiteningTransform& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput(path.string() + ": cannot open for writing");
  out.write("WHT1", 4);
  put_u32_le(out, static_cast<std::uint32_t>(t.d_in));
  put_u32_le(out, static_cast<std::uint32_t>(t.d_out));
  for (double m : t.mean)
    put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(m)));
  for (double p : t.projection)
    put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(p)));
  if (!out) throw InvalidInput(path.string() + ": short write");
}

}  // namespace lumen
