#include "hace/targets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "hace/errors.hpp"
#include "numeric_text.hpp"

namespace hace {

namespace {

constexpr double kNormTolerance = 1e-9;

void check_leaf(const Taxonomy& t, NodeId leaf) {
  if (leaf >= t.node_count()) throw ValidationError("node index out of range");
  if (!t.is_leaf(leaf)) throw ValidationError("not a leaf: " + t.name(leaf));
}

void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw ValidationError("epsilon must lie in [0, 1)");
}

void check_dilution(double dilution) {
  if (!(dilution > 0.0 && dilution <= 1.0))
    throw ValidationError("dilution must lie in (0, 1]");
}

void check_leaf_dist(const Taxonomy& t, std::span<const double> dist) {
  if (dist.size() != t.leaf_count())
    throw ValidationError("leaf distribution has " + std::to_string(dist.size()) +
                          " entries, expected " + std::to_string(t.leaf_count()));
  double total = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw ValidationError("leaf distribution has a negative or non-finite entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kNormTolerance)
    throw ValidationError("leaf distribution is not normalized");
}

TargetRow pad_leaf_dist(const Taxonomy& t, std::vector<double> dist) {
  TargetRow row;
  row.values.assign(t.node_count(), 0.0);
  std::ranges::copy(dist, row.values.begin());
  return row;
}

// The root's share is computed as 1 - sum over all indexed nodes, so each
// row closes exactly up to the rounding of that sum.
void close_root_mass(TargetRow& row, std::span<const double> leaf_dist) {
  double in = std::accumulate(leaf_dist.begin(), leaf_dist.end(), 0.0);
  double kept = std::accumulate(row.values.begin(), row.values.end(), 0.0);
  row.root_mass = std::max(0.0, in - kept);
}

}  // namespace

std::string_view to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::kOneHot: return "one_hot";
    case TargetKind::kUniformSmooth: return "uniform_smooth";
    case TargetKind::kAncestral: return "ancestral";
    case TargetKind::kAncestralWithUniform: return "ancestral_with_uniform";
    case TargetKind::kLcaSoft: return "lca_soft";
    case TargetKind::kAncestralWithLca: return "ancestral_with_lca";
  }
  return "?";
}

TargetKind parse_target_kind(std::string_view name) {
  for (auto kind : {TargetKind::kOneHot, TargetKind::kUniformSmooth, TargetKind::kAncestral,
                    TargetKind::kAncestralWithUniform, TargetKind::kLcaSoft,
                    TargetKind::kAncestralWithLca})
    if (to_string(kind) == name) return kind;
  throw ValidationError("unknown target scheme: " + std::string(name));
}

void TargetScheme::validate() const {
  bool wants_eps = kind == TargetKind::kUniformSmooth || kind == TargetKind::kAncestralWithUniform;
  bool wants_d = is_vertical();
  bool wants_beta = kind == TargetKind::kLcaSoft || kind == TargetKind::kAncestralWithLca;
  auto name = std::string(to_string(kind));

  if (wants_eps && !epsilon) throw ValidationError(name + " requires epsilon");
  if (!wants_eps && epsilon && !(kind == TargetKind::kAncestral && *epsilon == 0.0))
    throw ValidationError(name + " does not take epsilon");
  if (wants_d && !dilution) throw ValidationError(name + " requires dilution");
  if (!wants_d && dilution) throw ValidationError(name + " does not take dilution");
  if (wants_beta && !beta) throw ValidationError(name + " requires beta");
  if (!wants_beta && beta) throw ValidationError(name + " does not take beta");

  if (epsilon) check_epsilon(*epsilon);
  if (dilution) check_dilution(*dilution);
  if (beta && !(*beta > 0.0 && std::isfinite(*beta)))
    throw ValidationError("beta must be positive");
}

bool TargetScheme::is_vertical() const {
  return kind == TargetKind::kAncestral || kind == TargetKind::kAncestralWithUniform ||
         kind == TargetKind::kAncestralWithLca;
}

TargetMatrix::TargetMatrix(Matrix table, std::vector<double> root_mass)
    : table_(std::move(table)), root_mass_(std::move(root_mass)) {
  if (root_mass_.size() != table_.rows())
    throw ValidationError("root mass vector does not match target rows");
}

bool TargetMatrix::leaf_only() const {
  const std::size_t n = leaf_count();
  for (std::size_t i = 0; i < n; ++i) {
    if (root_mass_[i] != 0.0) return false;
    auto r = row(i);
    for (std::size_t j = n; j < r.size(); ++j)
      if (r[j] != 0.0) return false;
  }
  return true;
}

Matrix TargetMatrix::gather(std::span<const std::size_t> labels) const {
  Matrix out(labels.size(), node_count());
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (labels[b] >= leaf_count()) throw ValidationError("label out of range");
    std::ranges::copy(row(labels[b]), out.row(b).begin());
  }
  return out;
}

std::vector<double> one_hot_leaves(const Taxonomy& taxonomy, NodeId leaf) {
  check_leaf(taxonomy, leaf);
  std::vector<double> dist(taxonomy.leaf_count(), 0.0);
  dist[leaf] = 1.0;
  return dist;
}

std::vector<double> uniform_smooth(const Taxonomy& taxonomy, NodeId leaf, double epsilon) {
  check_leaf(taxonomy, leaf);
  check_epsilon(epsilon);
  const double share = epsilon / static_cast<double>(taxonomy.leaf_count());
  std::vector<double> dist(taxonomy.leaf_count(), share);
  dist[leaf] = (1.0 - epsilon) + share;
  return dist;
}

std::vector<double> lca_soft_labels(const Taxonomy& taxonomy, NodeId leaf, double beta) {
  check_leaf(taxonomy, leaf);
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  if (!taxonomy.is_tree()) throw ValidationError("LCA soft labels require a tree hierarchy");
  const std::size_t n = taxonomy.leaf_count();
  std::vector<double> dist(n);
  for (NodeId c = 0; c < n; ++c)
    dist[c] = std::exp(-beta * static_cast<double>(lca_height(taxonomy, c, leaf)));
  const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
  for (double& p : dist) p /= total;
  return dist;
}

TargetRow one_hot(const Taxonomy& taxonomy, NodeId leaf) {
  return pad_leaf_dist(taxonomy, one_hot_leaves(taxonomy, leaf));
}

TargetRow one_hot(const Taxonomy& taxonomy, std::string_view leaf) {
  return one_hot(taxonomy, taxonomy.index_of(leaf));
}

TargetRow ancestral_smooth(const Taxonomy& taxonomy, std::span<const double> leaf_dist,
                           double dilution) {
  if (!taxonomy.is_tree())
    throw ValidationError("ancestral_smooth needs a tree; use ancestral_smooth_dag");
  check_dilution(dilution);
  check_leaf_dist(taxonomy, leaf_dist);

  TargetRow row;
  row.values.assign(taxonomy.node_count(), 0.0);
  for (NodeId c = 0; c < leaf_dist.size(); ++c) {
    if (leaf_dist[c] <= 0.0) continue;
    // weight = d (1-d)^j p(c) at step j.
    double carried = leaf_dist[c];
    for (NodeId v = c; v != kRoot; v = taxonomy.parents(v).front()) {
      row.values[v] += dilution * carried;
      carried *= 1.0 - dilution;
    }
  }
  close_root_mass(row, leaf_dist);
  return row;
}

TargetRow ancestral_smooth_dag(const Taxonomy& taxonomy, std::span<const double> leaf_dist,
                               double dilution) {
  check_dilution(dilution);
  check_leaf_dist(taxonomy, leaf_dist);
  for (NodeId c = 0; c < leaf_dist.size(); ++c)
    if (leaf_dist[c] > 0.0 && count_paths(taxonomy, c) > kMaxPathsPerLeaf)
      throw ValidationError("leaf " + taxonomy.name(c) + " has more than " +
                            std::to_string(kMaxPathsPerLeaf) + " ancestral paths");

  // Mass flow in topological order (children before parents). Each node
  // keeps the fraction d of what arrives and splits the rest evenly across
  // its parents. Summing per-path contributions gives the same numbers.
  const std::size_t n_nodes = taxonomy.node_count();
  std::vector<std::size_t> pending(n_nodes, 0);
  for (NodeId v = 0; v < n_nodes; ++v) pending[v] = taxonomy.children(v).size();
  std::vector<double> arriving(n_nodes, 0.0);
  std::ranges::copy(leaf_dist, arriving.begin());

  std::vector<NodeId> ready;
  for (NodeId v = 0; v < taxonomy.leaf_count(); ++v) ready.push_back(v);
  TargetRow row;
  row.values.assign(n_nodes, 0.0);
  while (!ready.empty()) {
    NodeId v = ready.back();
    ready.pop_back();
    const double in = arriving[v];
    row.values[v] = dilution * in;
    auto ps = taxonomy.parents(v);
    const double share = (1.0 - dilution) * in / static_cast<double>(ps.size());
    for (NodeId p : ps) {
      if (p == kRoot) continue;
      arriving[p] += share;
      if (--pending[p] == 0) ready.push_back(p);
    }
  }
  close_root_mass(row, leaf_dist);
  return row;
}

TargetMatrix build_target_matrix(const Taxonomy& taxonomy, const TargetScheme& scheme) {
  scheme.validate();
  const std::size_t n = taxonomy.leaf_count();
  Matrix table(n, taxonomy.node_count());
  std::vector<double> root_mass(n, 0.0);

  for (NodeId leaf = 0; leaf < n; ++leaf) {
    std::vector<double> horizontal;
    switch (scheme.kind) {
      case TargetKind::kOneHot:
      case TargetKind::kAncestral:
        horizontal = one_hot_leaves(taxonomy, leaf);
        break;
      case TargetKind::kUniformSmooth:
      case TargetKind::kAncestralWithUniform:
        horizontal = uniform_smooth(taxonomy, leaf, *scheme.epsilon);
        break;
      case TargetKind::kLcaSoft:
      case TargetKind::kAncestralWithLca:
        horizontal = lca_soft_labels(taxonomy, leaf, *scheme.beta);
        break;
    }
    TargetRow row;
    if (!scheme.is_vertical())
      row = pad_leaf_dist(taxonomy, std::move(horizontal));
    else if (taxonomy.is_tree())
      row = ancestral_smooth(taxonomy, horizontal, *scheme.dilution);
    else
      row = ancestral_smooth_dag(taxonomy, horizontal, *scheme.dilution);
    std::ranges::copy(row.values, table.row(leaf).begin());
    root_mass[leaf] = row.root_mass;
  }
  return TargetMatrix(std::move(table), std::move(root_mass));
}

void write_target_csv(const TargetMatrix& targets, const Taxonomy& taxonomy,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "leaf";
  for (const auto& name : taxonomy.names()) out << ',' << csv_field(name);
  out << ",__root__\n";
  for (std::size_t i = 0; i < targets.leaf_count(); ++i) {
    out << csv_field(taxonomy.name(i));
    for (double v : targets.row(i)) out << ',' << format_double(v);
    out << ',' << format_double(targets.root_mass(i)) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace hace
