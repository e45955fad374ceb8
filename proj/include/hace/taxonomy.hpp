#pragma once

// Class hierarchies: parsing, validation, indexing and the derived
// reachability relation.
//
// Indexing convention: the N non-root nodes get contiguous indices with the
// n leaves first (lexicographic), then the internal nodes (lexicographic).
// The root is kept out of the index space; where a path or parent list has to
// mention it, the sentinel kRoot is used.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hace {

using NodeId = std::size_t;
inline constexpr NodeId kRoot = std::numeric_limits<NodeId>::max();

// Upper bound on leaf-to-root paths enumerated for a single leaf.
inline constexpr std::size_t kMaxPathsPerLeaf = 10'000;

enum class HierarchyMode { kTree, kDag };

class Taxonomy {
 public:
  using Edge = std::pair<std::string, std::string>;  // parent, child

  // Validates and indexes the edge set. Throws TaxonomyError.
  static Taxonomy from_edges(std::span<const Edge> edges, HierarchyMode mode);

  std::size_t leaf_count() const { return leaf_count_; }
  std::size_t node_count() const { return names_.size(); }
  HierarchyMode mode() const { return mode_; }
  // True when every node has exactly one parent, whatever the parse mode.
  bool is_tree() const { return is_tree_; }

  const std::string& root() const { return root_; }
  const std::string& name(NodeId id) const;
  std::span<const std::string> names() const { return names_; }
  bool is_leaf(NodeId id) const { return id < leaf_count_; }

  std::optional<NodeId> find(std::string_view name) const;
  // Throws ValidationError for unknown identifiers. The root is not indexed
  // and is rejected here as well.
  NodeId index_of(std::string_view name) const;

  // Parent lists may contain kRoot.
  std::span<const NodeId> parents(NodeId id) const { return parents_.at(id); }
  std::span<const NodeId> children(NodeId id) const { return children_.at(id); }
  std::span<const NodeId> root_children() const { return root_children_; }

  // Minimum number of edges from the root.
  std::size_t depth(NodeId id) const { return depth_.at(id); }
  std::size_t max_depth() const { return max_depth_; }
  // Nodes at exactly the given depth, in index order.
  std::vector<NodeId> nodes_at_depth(std::size_t depth) const;

  std::vector<Edge> edges() const;

 private:
  Taxonomy() = default;

  HierarchyMode mode_ = HierarchyMode::kTree;
  bool is_tree_ = true;
  std::string root_;
  std::size_t leaf_count_ = 0;
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::vector<NodeId>> parents_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> root_children_;
  std::vector<std::size_t> depth_;
  std::size_t max_depth_ = 0;
};

// Parses `parent<TAB>child` lines. Blank lines and lines starting with '#'
// are skipped. The root is the unique node that never appears as a child.
Taxonomy parse_taxonomy(std::string_view source, HierarchyMode mode = HierarchyMode::kTree);
Taxonomy load_taxonomy(const std::filesystem::path& path,
                       HierarchyMode mode = HierarchyMode::kTree);
// Inverse of parse_taxonomy: root edges first, then by parent index.
std::string format_taxonomy(const Taxonomy& taxonomy);

// Reflexive transitive closure of the parent->child adjacency over the N
// indexed nodes. Stored densely; sorted descendant/ancestor lists are kept
// alongside for sparse traversal.
class ReachabilityMatrix {
 public:
  explicit ReachabilityMatrix(const Taxonomy& taxonomy);

  std::size_t size() const { return size_; }
  // True iff `to` is `from` or a descendant of it.
  bool operator()(NodeId from, NodeId to) const { return bits_[from * size_ + to] != 0; }

  // Row `i`: i and all its descendants, ascending.
  std::span<const NodeId> descendants(NodeId i) const { return descendants_[i]; }
  // Column `j`: j and all its ancestors (excluding the root), ascending.
  std::span<const NodeId> ancestors(NodeId j) const { return ancestors_[j]; }

 private:
  std::size_t size_ = 0;
  std::vector<std::uint8_t> bits_;
  std::vector<std::vector<NodeId>> descendants_;
  std::vector<std::vector<NodeId>> ancestors_;
};

ReachabilityMatrix reachability(const Taxonomy& taxonomy);

struct AncestralPath {
  // b_0 (the leaf) ... b_k (always kRoot).
  std::vector<NodeId> nodes;
  // parent_counts[j] = |P(b_j)| for j < k: how many ways the mass leaving
  // b_j is split.
  std::vector<std::size_t> parent_counts;

  std::size_t length() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

// One path for trees; every simple leaf-to-root path for DAGs. Throws when
// the leaf has more than kMaxPathsPerLeaf paths.
std::vector<AncestralPath> ancestral_paths(const Taxonomy& taxonomy, NodeId leaf);
std::vector<AncestralPath> ancestral_paths(const Taxonomy& taxonomy, std::string_view leaf);

// Number of leaf-to-root paths, saturating at kMaxPathsPerLeaf + 1.
std::size_t count_paths(const Taxonomy& taxonomy, NodeId leaf);

// Root is level 0. DAG nodes report their minimum distance.
std::size_t node_level(const Taxonomy& taxonomy, std::string_view node);

// Edges from the deeper of the two leaves up to their lowest common ancestor.
// Trees only.
std::size_t lca_height(const Taxonomy& taxonomy, NodeId leaf_a, NodeId leaf_b);
std::size_t lca_height(const Taxonomy& taxonomy, std::string_view leaf_a, std::string_view leaf_b);

}  // namespace hace
