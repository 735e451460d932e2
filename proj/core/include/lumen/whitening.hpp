#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lumen/descriptor.hpp"

namespace lumen {

// Matching / non-matching id pairs over one DescriptorSet.
struct PairList {
  std::vector<std::pair<std::string, std::string>> matching;
  std::vector<std::pair<std::string, std::string>> non_matching;
};

// Default pair construction: matching = all same-cluster pairs, non-matching
// = all cross-cluster pairs subsampled to max_non_matching with the seeded
// generator (exhaustive cross pairs explode combinatorially).
PairList pairs_from_clusters(
    const DescriptorSet& set,
    const std::unordered_map<std::string, std::string>& cluster_of,
    std::size_t max_non_matching = 100000, std::uint64_t seed = 0);

// Supervised whitening with discriminative dimensionality reduction.
// projection is d_out x d_in row-major; applied as projection * (x - mean).
struct WhiteningTransform {
  int d_in = 0;
  int d_out = 0;
  std::vector<double> mean;        // d_in
  std::vector<double> projection;  // d_out * d_in

  double projection_at(int row, int col) const {
    return projection[static_cast<std::size_t>(row) * d_in + col];
  }
};

// Intra-pair scatter C = mean of (di - dj)(di - dj)^T over matching pairs;
// eigenvalues floored at lambda = 1e-6 * trace(C) / D; W = C^(-1/2); the
// retained basis is the top-d_out eigenvectors of the non-matching scatter
// in the whitened space. mean is the set mean.
WhiteningTransform learn_whitening(const DescriptorSet& set, const PairList& pairs,
                                   int d_out);

// projection * (values - mean), L2-normalised. A collapsed (zero) output is
// returned as the flagged all-zero descriptor rather than an error.
Descriptor apply_whitening(const WhiteningTransform& t, const Descriptor& d);
DescriptorSet apply_whitening(const WhiteningTransform& t, const DescriptorSet& set);

struct EnsembleResult {
  DescriptorSet set;
  WhiteningTransform transform;
};

// Per-id concatenation of two aligned sets followed by learn + apply at d_out.
EnsembleResult reduce_ensemble(const DescriptorSet& a, const DescriptorSet& b,
                               const PairList& pairs, int d_out);

// WHT1 container: "WHT1" | u32le d_in | u32le d_out | d_in f32le mean |
// d_out*d_in f32le projection, row-major.
WhiteningTransform read_whitening(const std::filesystem::path& path);
void write_whitening(const WhiteningTransform& t, const std::filesystem::path& path);

}  // namespace lumen
