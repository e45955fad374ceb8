#pragma once

// Desk-scale stand-in for frozen-backbone features: a balanced tree whose
// node means drift from their parent's by Gaussian noise, with leaf samples
// scattered around the leaf mean.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hace/features.hpp"
#include "hace/taxonomy.hpp"

namespace hace {

struct SyntheticSpec {
  std::vector<std::size_t> branching;  // children per node, one entry per level
  std::size_t dim = 64;
  double sigma_leaf = 1.0;
  double sigma_level = 3.0;
  std::size_t samples_per_leaf = 40;  // per split

  void validate() const;
};

struct SyntheticData {
  Taxonomy taxonomy;
  FeatureDataset train;
  FeatureDataset test;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace hace
