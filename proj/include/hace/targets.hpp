#pragma once

// Ground-truth soft targets.
//
// Targets are built in two steps: a horizontal distribution over the n
// leaves (one-hot, uniform smoothing or LCA soft labels), then optionally a
// vertical pass that pushes each leaf's mass geometrically up its ancestral
// path. Whatever reaches the root is kept in `root_mass`; the root has no
// logit and no loss term.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hace/matrix.hpp"
#include "hace/taxonomy.hpp"

namespace hace {

enum class TargetKind {
  kOneHot,
  kUniformSmooth,
  kAncestral,
  kAncestralWithUniform,
  kLcaSoft,
  kAncestralWithLca,
};

std::string_view to_string(TargetKind kind);
TargetKind parse_target_kind(std::string_view name);

struct TargetScheme {
  TargetKind kind = TargetKind::kOneHot;
  std::optional<double> epsilon;   // [0, 1)
  std::optional<double> dilution;  // (0, 1]
  std::optional<double> beta;      // > 0

  // Parameters must be present exactly when the kind uses them. `ancestral`
  // tolerates an explicit epsilon of 0.
  void validate() const;
  bool is_vertical() const;
};

// A soft target over the N indexed nodes plus the mass parked at the root.
struct TargetRow {
  std::vector<double> values;
  double root_mass = 0.0;
};

// n x N lookup table, row i = target for leaf class i.
class TargetMatrix {
 public:
  TargetMatrix(Matrix table, std::vector<double> root_mass);

  std::size_t leaf_count() const { return table_.rows(); }
  std::size_t node_count() const { return table_.cols(); }
  std::span<const double> row(std::size_t leaf) const { return table_.row(leaf); }
  double root_mass(std::size_t leaf) const { return root_mass_.at(leaf); }
  const Matrix& table() const { return table_; }

  // True when every row lives on the leaf prefix and nothing reaches the root.
  bool leaf_only() const;

  // Batch gather: one row per label.
  Matrix gather(std::span<const std::size_t> labels) const;

 private:
  Matrix table_;
  std::vector<double> root_mass_;
};

// Horizontal step. All return distributions over the n leaves.
std::vector<double> one_hot_leaves(const Taxonomy& taxonomy, NodeId leaf);
std::vector<double> uniform_smooth(const Taxonomy& taxonomy, NodeId leaf, double epsilon);
std::vector<double> lca_soft_labels(const Taxonomy& taxonomy, NodeId leaf, double beta);

// Full-width one-hot row (leaf prefix, internal nodes zero, no root mass).
TargetRow one_hot(const Taxonomy& taxonomy, NodeId leaf);
TargetRow one_hot(const Taxonomy& taxonomy, std::string_view leaf);

// Vertical step on a tree: node b_j on the path of leaf c gains
// d (1-d)^j p(c); the root takes the remainder.
TargetRow ancestral_smooth(const Taxonomy& taxonomy, std::span<const double> leaf_dist,
                           double dilution);

// DAG generalization: mass leaving a node is split evenly over its parents.
TargetRow ancestral_smooth_dag(const Taxonomy& taxonomy, std::span<const double> leaf_dist,
                               double dilution);

TargetMatrix build_target_matrix(const Taxonomy& taxonomy, const TargetScheme& scheme);

// CSV with one column per node identifier and a trailing `__root__` column.
void write_target_csv(const TargetMatrix& targets, const Taxonomy& taxonomy,
                      const std::filesystem::path& path);

}  // namespace hace
