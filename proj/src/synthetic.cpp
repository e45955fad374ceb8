#include "hace/synthetic.hpp"

#include <cmath>
#include <random>
#include <string>

#include "hace/errors.hpp"

namespace hace {

void SyntheticSpec::validate() const {
  if (branching.size() < 2) throw ValidationError("synthetic hierarchy needs at least 2 levels");
  for (auto b : branching)
    if (b == 0) throw ValidationError("branching factors must be positive");
  if (dim == 0) throw ValidationError("feature dimension must be positive");
  if (samples_per_leaf == 0) throw ValidationError("samples per leaf must be positive");
  if (!(sigma_leaf >= 0.0) || !(sigma_level >= 0.0) || !std::isfinite(sigma_leaf) ||
      !std::isfinite(sigma_level))
    throw ValidationError("noise scales must be finite and non-negative");
}

namespace {

std::string padded(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  struct Node {
    std::string name;
    std::vector<double> mean;
  };
  // Level-by-level expansion; names are zero-padded index paths so that
  // lexicographic order equals creation order.
  std::vector<Taxonomy::Edge> edges;
  std::vector<Node> frontier{{"root", std::vector<double>(spec.dim, 0.0)}};
  for (std::size_t level = 0; level < spec.branching.size(); ++level) {
    const std::size_t fan = spec.branching[level];
    const std::size_t width = std::to_string(fan - 1).size();
    std::vector<Node> next;
    for (const auto& parent : frontier) {
      for (std::size_t c = 0; c < fan; ++c) {
        Node child;
        child.name = (level == 0 ? "c" : parent.name + "_") + padded(c, width);
        child.mean = parent.mean;
        for (double& m : child.mean) m += spec.sigma_level * unit(rng);
        edges.emplace_back(parent.name, child.name);
        next.push_back(std::move(child));
      }
    }
    frontier = std::move(next);
  }

  SyntheticData data{Taxonomy::from_edges(edges, HierarchyMode::kTree), {}, {}};
  const std::size_t n = frontier.size();
  const std::size_t per = spec.samples_per_leaf;
  for (auto* split : {&data.train, &data.test}) {
    split->x = Matrix(n * per, spec.dim);
    split->y.resize(n * per);
    split->split = split == &data.train ? Split::kTrain : Split::kTest;
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
      const NodeId label = data.taxonomy.index_of(frontier[leaf].name);
      for (std::size_t s = 0; s < per; ++s) {
        const std::size_t r = leaf * per + s;
        split->y[r] = label;
        auto row = split->x.row(r);
        for (std::size_t d = 0; d < spec.dim; ++d)
          row[d] = frontier[leaf].mean[d] + spec.sigma_leaf * unit(rng);
      }
    }
  }
  return data;
}

}  // namespace hace
