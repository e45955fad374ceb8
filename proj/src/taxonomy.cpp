#include "hace/taxonomy.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hace/errors.hpp"

namespace hace {

namespace {

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

}  // namespace

Taxonomy Taxonomy::from_edges(std::span<const Edge> edges, HierarchyMode mode) {
  if (edges.empty()) throw TaxonomyError("empty hierarchy", {});

  std::map<std::string, std::set<std::string>> children_of;
  std::map<std::string, std::set<std::string>> parents_of;
  std::vector<std::string> duplicates;
  for (const auto& [parent, child] : edges) {
    if (parent.empty() || child.empty()) throw TaxonomyError("empty node identifier", {});
    if (parent == child) throw TaxonomyError("cycle detected", {parent});
    if (!children_of[parent].insert(child).second) duplicates.push_back(parent + "->" + child);
    children_of.try_emplace(child);
    parents_of[child].insert(parent);
    parents_of.try_emplace(parent);
  }
  if (!duplicates.empty()) throw TaxonomyError("duplicate edge", duplicates);

  // Kahn's algorithm; whatever cannot be peeled off sits on or behind a cycle.
  std::map<std::string, std::size_t> indegree;
  for (const auto& [node, ps] : parents_of) indegree[node] = ps.size();
  std::deque<std::string> ready;
  for (const auto& [node, deg] : indegree)
    if (deg == 0) ready.push_back(node);
  std::size_t peeled = 0;
  while (!ready.empty()) {
    std::string node = std::move(ready.front());
    ready.pop_front();
    ++peeled;
    for (const auto& child : children_of[node])
      if (--indegree[child] == 0) ready.push_back(child);
  }
  if (peeled != indegree.size()) {
    std::vector<std::string> stuck;
    for (const auto& [node, deg] : indegree)
      if (deg > 0) stuck.push_back(node);
    throw TaxonomyError("cycle detected", stuck);
  }

  std::vector<std::string> roots;
  for (const auto& [node, ps] : parents_of)
    if (ps.empty()) roots.push_back(node);
  if (roots.size() != 1) throw TaxonomyError("multiple roots", roots);
  const std::string& root = roots.front();

  if (mode == HierarchyMode::kTree) {
    std::vector<std::string> multi;
    for (const auto& [node, ps] : parents_of)
      if (ps.size() > 1) multi.push_back(node);
    if (!multi.empty()) throw TaxonomyError("multiple parents in tree mode", multi);
  }

  {
    std::set<std::string> seen{root};
    std::deque<std::string> queue{root};
    while (!queue.empty()) {
      std::string node = std::move(queue.front());
      queue.pop_front();
      for (const auto& child : children_of[node])
        if (seen.insert(child).second) queue.push_back(child);
    }
    std::vector<std::string> orphans;
    for (const auto& [node, ps] : parents_of)
      if (!seen.contains(node)) orphans.push_back(node);
    if (!orphans.empty()) throw TaxonomyError("orphan node", orphans);
  }

  Taxonomy t;
  t.mode_ = mode;
  t.root_ = root;
  // std::map iteration is already lexicographic.
  for (const auto& [node, cs] : children_of)
    if (node != root && cs.empty()) t.names_.push_back(node);
  t.leaf_count_ = t.names_.size();
  for (const auto& [node, cs] : children_of)
    if (node != root && !cs.empty()) t.names_.push_back(node);
  for (NodeId i = 0; i < t.names_.size(); ++i) t.index_.emplace(t.names_[i], i);

  const std::size_t n_nodes = t.names_.size();
  t.parents_.resize(n_nodes);
  t.children_.resize(n_nodes);
  auto id_or_root = [&](const std::string& name) {
    return name == root ? kRoot : t.index_.at(name);
  };
  for (NodeId i = 0; i < n_nodes; ++i) {
    for (const auto& p : parents_of[t.names_[i]]) t.parents_[i].push_back(id_or_root(p));
    for (const auto& c : children_of[t.names_[i]]) t.children_[i].push_back(t.index_.at(c));
    std::ranges::sort(t.parents_[i]);
    std::ranges::sort(t.children_[i]);
    if (t.parents_[i].size() != 1) t.is_tree_ = false;
  }
  for (const auto& c : children_of[root]) t.root_children_.push_back(t.index_.at(c));
  std::ranges::sort(t.root_children_);

  constexpr auto kUnset = std::numeric_limits<std::size_t>::max();
  t.depth_.assign(n_nodes, kUnset);
  std::deque<NodeId> queue;
  for (NodeId c : t.root_children_) {
    t.depth_[c] = 1;
    queue.push_back(c);
  }
  while (!queue.empty()) {
    NodeId v = queue.front();
    queue.pop_front();
    for (NodeId c : t.children_[v]) {
      if (t.depth_[c] == kUnset) {
        t.depth_[c] = t.depth_[v] + 1;
        queue.push_back(c);
      }
    }
  }
  t.max_depth_ = *std::ranges::max_element(t.depth_);
  return t;
}

const std::string& Taxonomy::name(NodeId id) const {
  if (id == kRoot) return root_;
  return names_.at(id);
}

std::optional<NodeId> Taxonomy::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId Taxonomy::index_of(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw ValidationError("unknown node: " + std::string(name));
}

std::vector<NodeId> Taxonomy::nodes_at_depth(std::size_t depth) const {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < depth_.size(); ++i)
    if (depth_[i] == depth) out.push_back(i);
  return out;
}

std::vector<Taxonomy::Edge> Taxonomy::edges() const {
  std::vector<Edge> out;
  for (NodeId c : root_children_) out.emplace_back(root_, names_[c]);
  for (NodeId p = 0; p < names_.size(); ++p)
    for (NodeId c : children_[p]) out.emplace_back(names_[p], names_[c]);
  return out;
}

Taxonomy parse_taxonomy(std::string_view source, HierarchyMode mode) {
  std::vector<Taxonomy::Edge> edges;
  std::size_t line_no = 0;
  while (!source.empty()) {
    auto eol = source.find('\n');
    std::string_view line = strip_cr(source.substr(0, eol));
    source.remove_prefix(eol == std::string_view::npos ? source.size() : eol + 1);
    ++line_no;
    if (is_blank(line) || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": expected exactly one tab separating parent and child");
    auto parent = line.substr(0, tab);
    auto child = line.substr(tab + 1);
    if (parent.empty() || child.empty())
      throw ValidationError("line " + std::to_string(line_no) + ": empty node identifier");
    edges.emplace_back(std::string(parent), std::string(child));
  }
  return Taxonomy::from_edges(edges, mode);
}

Taxonomy load_taxonomy(const std::filesystem::path& path, HierarchyMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open hierarchy file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_taxonomy(buffer.str(), mode);
}

std::string format_taxonomy(const Taxonomy& taxonomy) {
  std::string out;
  for (const auto& [parent, child] : taxonomy.edges()) out += parent + '\t' + child + '\n';
  return out;
}

ReachabilityMatrix::ReachabilityMatrix(const Taxonomy& taxonomy)
    : size_(taxonomy.node_count()),
      bits_(size_ * size_, 0),
      descendants_(size_),
      ancestors_(size_) {
  // Depth-first closure from every node.
  std::vector<NodeId> stack;
  for (NodeId i = 0; i < size_; ++i) {
    stack.assign(1, i);
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      auto& bit = bits_[i * size_ + v];
      if (bit) continue;
      bit = 1;
      for (NodeId c : taxonomy.children(v)) stack.push_back(c);
    }
  }
  for (NodeId i = 0; i < size_; ++i) {
    for (NodeId j = 0; j < size_; ++j) {
      if (bits_[i * size_ + j]) {
        descendants_[i].push_back(j);
        ancestors_[j].push_back(i);
      }
    }
  }
}

ReachabilityMatrix reachability(const Taxonomy& taxonomy) { return ReachabilityMatrix(taxonomy); }

namespace {

void require_leaf(const Taxonomy& t, NodeId leaf) {
  if (leaf >= t.node_count()) throw ValidationError("node index out of range");
  if (!t.is_leaf(leaf)) throw ValidationError("not a leaf: " + t.name(leaf));
}

}  // namespace

std::size_t count_paths(const Taxonomy& taxonomy, NodeId leaf) {
  require_leaf(taxonomy, leaf);
  constexpr std::size_t kSaturated = kMaxPathsPerLeaf + 1;
  // Memoized count of paths to the root from each node.
  std::vector<std::size_t> memo(taxonomy.node_count(), 0);
  std::vector<bool> done(taxonomy.node_count(), false);
  auto visit = [&](auto&& self, NodeId v) -> std::size_t {
    if (done[v]) return memo[v];
    std::size_t total = 0;
    for (NodeId p : taxonomy.parents(v)) {
      total += p == kRoot ? 1 : self(self, p);
      total = std::min(total, kSaturated);
    }
    done[v] = true;
    return memo[v] = total;
  };
  return visit(visit, leaf);
}

std::vector<AncestralPath> ancestral_paths(const Taxonomy& taxonomy, NodeId leaf) {
  if (count_paths(taxonomy, leaf) > kMaxPathsPerLeaf)
    throw ValidationError("leaf " + taxonomy.name(leaf) + " has more than " +
                          std::to_string(kMaxPathsPerLeaf) + " ancestral paths");
  std::vector<AncestralPath> out;
  AncestralPath current;
  auto walk = [&](auto&& self, NodeId v) -> void {
    auto ps = taxonomy.parents(v);
    current.nodes.push_back(v);
    current.parent_counts.push_back(ps.size());
    for (NodeId p : ps) {
      if (p == kRoot) {
        AncestralPath done = current;
        done.nodes.push_back(kRoot);
        out.push_back(std::move(done));
      } else {
        self(self, p);
      }
    }
    current.nodes.pop_back();
    current.parent_counts.pop_back();
  };
  walk(walk, leaf);
  return out;
}

std::vector<AncestralPath> ancestral_paths(const Taxonomy& taxonomy, std::string_view leaf) {
  return ancestral_paths(taxonomy, taxonomy.index_of(leaf));
}

std::size_t node_level(const Taxonomy& taxonomy, std::string_view node) {
  if (node == taxonomy.root()) return 0;
  return taxonomy.depth(taxonomy.index_of(node));
}

std::size_t lca_height(const Taxonomy& taxonomy, NodeId leaf_a, NodeId leaf_b) {
  if (!taxonomy.is_tree())
    throw ValidationError("lca_height is only defined for tree hierarchies");
  require_leaf(taxonomy, leaf_a);
  require_leaf(taxonomy, leaf_b);
  std::vector<NodeId> chain_a;
  for (NodeId v = leaf_a; v != kRoot; v = taxonomy.parents(v).front()) chain_a.push_back(v);
  std::size_t lca_depth = 0;
  for (NodeId v = leaf_b; v != kRoot; v = taxonomy.parents(v).front()) {
    if (std::ranges::find(chain_a, v) != chain_a.end()) {
      lca_depth = taxonomy.depth(v);
      break;
    }
  }
  return std::max(taxonomy.depth(leaf_a), taxonomy.depth(leaf_b)) - lca_depth;
}

std::size_t lca_height(const Taxonomy& taxonomy, std::string_view leaf_a,
                       std::string_view leaf_b) {
  return lca_height(taxonomy, taxonomy.index_of(leaf_a), taxonomy.index_of(leaf_b));
}

}  // namespace hace
