#pragma once

// Reference implementations used only by tests. They work on the raw edge
// list with string identifiers and share no code with the library beyond the
// Taxonomy's name<->index mapping, so agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hace/taxonomy.hpp"

namespace oracle {

struct Graph {
  std::map<std::string, std::vector<std::string>> children;
  std::map<std::string, std::vector<std::string>> parents;
  std::string root;

  explicit Graph(const std::vector<hace::Taxonomy::Edge>& edges) {
    std::set<std::string> has_parent, all;
    for (const auto& [p, c] : edges) {
      children[p].push_back(c);
      parents[c].push_back(p);
      has_parent.insert(c);
      all.insert(p);
      all.insert(c);
    }
    for (const auto& v : all)
      if (!has_parent.contains(v)) root = v;
  }
};

// Descendants of v (inclusive), by plain DFS over the edge list.
inline std::set<std::string> descendants(const Graph& g, const std::string& v) {
  std::set<std::string> seen{v};
  std::vector<std::string> stack{v};
  while (!stack.empty()) {
    auto u = stack.back();
    stack.pop_back();
    auto it = g.children.find(u);
    if (it == g.children.end()) continue;
    for (const auto& c : it->second)
      if (seen.insert(c).second) stack.push_back(c);
  }
  return seen;
}

// r[i][j] over the taxonomy's own index space.
inline std::vector<std::vector<int>> reachability(const hace::Taxonomy& t) {
  Graph g(t.edges());
  const auto n = t.node_count();
  std::vector<std::vector<int>> r(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& d : descendants(g, t.name(i))) r[i][t.index_of(d)] = 1;
  return r;
}

// Every leaf-to-root path as a list of names.
inline std::vector<std::vector<std::string>> paths(const Graph& g, const std::string& leaf) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> cur{leaf};
  std::function<void()> walk = [&] {
    if (cur.back() == g.root) {
      out.push_back(cur);
      return;
    }
    for (const auto& p : g.parents.at(cur.back())) {
      cur.push_back(p);
      walk();
      cur.pop_back();
    }
  };
  walk();
  return out;
}

// Sums closed-form contributions over every leaf-to-root path. A path carries
// the share 1 / prod |P(b_i)| of the leaf's mass (the chance that an even
// random walk upward picks it), and along it b_j receives d(1-d)^j of that
// share while the root takes (1-d)^k.
inline std::map<std::string, double> path_mass(const hace::Taxonomy& t,
                                               const std::vector<double>& leaf_dist, double d) {
  Graph g(t.edges());
  std::map<std::string, double> mass;
  for (std::size_t c = 0; c < leaf_dist.size(); ++c) {
    if (leaf_dist[c] == 0.0) continue;
    for (const auto& path : paths(g, t.name(c))) {
      double share = leaf_dist[c];
      for (std::size_t j = 0; j + 1 < path.size(); ++j)
        share /= static_cast<double>(g.parents.at(path[j]).size());
      double decay = 1.0;
      for (std::size_t j = 0; j + 1 < path.size(); ++j) {
        mass[path[j]] += share * d * decay;
        decay *= 1.0 - d;
      }
      mass[path.back()] += share * decay;
    }
  }
  return mass;
}

// Loss of one sample: -sum_i p*(i) log(sum_{j in D(i)} softmax(z)_j).
inline double hace_loss(const hace::Taxonomy& t, const std::vector<double>& z,
                        std::span<const double> target) {
  Graph g(t.edges());
  double zmax = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - zmax);
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (target[i] <= 0.0) continue;
    double subtree = 0.0;
    for (const auto& d : descendants(g, t.name(i))) subtree += std::exp(z[t.index_of(d)] - zmax);
    loss -= target[i] * std::log(subtree / total);
  }
  return loss;
}

// Edge count from the deeper leaf up to the lowest shared ancestor (trees).
inline std::size_t lca_height(const hace::Taxonomy& t, std::size_t a, std::size_t b) {
  Graph g(t.edges());
  auto chain = [&](std::string v) {
    std::vector<std::string> up{v};
    while (v != g.root) {
      v = g.parents.at(v).front();
      up.push_back(v);
    }
    return up;
  };
  auto ua = chain(t.name(a));
  auto ub = chain(t.name(b));
  for (std::size_t i = 0; i < ua.size(); ++i) {
    auto it = std::find(ub.begin(), ub.end(), ua[i]);
    if (it != ub.end()) {
      auto j = static_cast<std::size_t>(it - ub.begin());
      return std::max(i, j);
    }
  }
  return ua.size();
}

// Central differences of f at x, one coordinate at a time.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// max_i |a_i - n_i| / (|a_i| + 1e-8)
inline double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / (std::abs(analytic[i]) + 1e-8));
  return worst;
}

}  // namespace oracle
