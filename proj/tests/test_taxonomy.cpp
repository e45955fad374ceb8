#include <algorithm>
#include <set>

#include "doctest.h"
#include "hace/errors.hpp"
#include "hace/taxonomy.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace hace;

namespace {

const char* kAnimals = "root\tDog\nroot\tCat\nDog\tHusky\nDog\tBeagle\n";
const char* kDiamond = "root\tX\nroot\tY\nX\tL\nY\tL\n";

std::vector<std::string> error_ids(const std::string& source, HierarchyMode mode) {
  try {
    parse_taxonomy(source, mode);
  } catch (const TaxonomyError& e) {
    return e.offending();
  }
  FAIL("expected a TaxonomyError");
  return {};
}

}  // namespace

TEST_CASE("animal toy indexes leaves first in lexicographic order") {
  auto t = parse_taxonomy(kAnimals);
  CHECK(t.leaf_count() == 3);
  CHECK(t.node_count() == 4);
  CHECK(t.root() == "root");
  CHECK(t.name(0) == "Beagle");
  CHECK(t.name(1) == "Cat");
  CHECK(t.name(2) == "Husky");
  CHECK(t.name(3) == "Dog");
  CHECK(t.is_tree());
  CHECK(t.max_depth() == 2);
}

TEST_CASE("parser skips comments, blank lines and carriage returns") {
  auto t = parse_taxonomy("# header\n\nroot\tA\r\nA\tB\r\n# tail\n");
  CHECK(t.node_count() == 2);
  CHECK(t.leaf_count() == 1);
  CHECK(t.name(0) == "B");
}

TEST_CASE("malformed hierarchies name the offending identifiers") {
  CHECK(error_ids("A\tB\nB\tA\n", HierarchyMode::kTree) == std::vector<std::string>{"A", "B"});
  CHECK(error_ids("root\tA\nA\tB\nB\tC\nC\tA\n", HierarchyMode::kDag).size() == 3);
  CHECK(error_ids("r1\tA\nr2\tB\n", HierarchyMode::kTree) == std::vector<std::string>{"r1", "r2"});
  CHECK(error_ids("root\tA\nroot\tA\n", HierarchyMode::kTree).size() >= 1);
  CHECK_THROWS_AS(parse_taxonomy(""), TaxonomyError);
  CHECK_THROWS_AS(parse_taxonomy("# only a comment\n"), TaxonomyError);
  CHECK_THROWS_AS(parse_taxonomy("root\tA\tB\n"), ValidationError);
  CHECK_THROWS_AS(parse_taxonomy("rootA\n"), ValidationError);
  CHECK_THROWS_AS(parse_taxonomy("root\tA\nA\tA\n"), TaxonomyError);
}

TEST_CASE("tree mode rejects a second parent, DAG mode accepts it") {
  CHECK(error_ids(kDiamond, HierarchyMode::kTree) == std::vector<std::string>{"L"});
  auto t = parse_taxonomy(kDiamond, HierarchyMode::kDag);
  CHECK_FALSE(t.is_tree());
  CHECK(t.parents(t.index_of("L")).size() == 2);
}

TEST_CASE("format_taxonomy round-trips") {
  auto t = parse_taxonomy(kAnimals);
  auto again = parse_taxonomy(format_taxonomy(t));
  CHECK(std::vector<std::string>(again.names().begin(), again.names().end()) ==
        std::vector<std::string>(t.names().begin(), t.names().end()));
  CHECK(again.edges() == t.edges());
}

TEST_CASE("reachability on the small examples") {
  SUBCASE("single leaf") {
    auto r = reachability(parse_taxonomy("root\tA\n"));
    CHECK(r.size() == 1);
    CHECK(r(0, 0));
  }
  SUBCASE("animal toy") {
    auto t = parse_taxonomy(kAnimals);
    auto r = reachability(t);
    CHECK(r(t.index_of("Dog"), t.index_of("Husky")));
    CHECK(r(t.index_of("Dog"), t.index_of("Beagle")));
    CHECK_FALSE(r(t.index_of("Cat"), t.index_of("Husky")));
    CHECK_FALSE(r(t.index_of("Husky"), t.index_of("Dog")));
  }
  SUBCASE("chain closure is transitive") {
    auto t = parse_taxonomy("root\tA\nA\tB\nB\tC\n");
    auto r = reachability(t);
    CHECK(r(t.index_of("A"), t.index_of("C")));
  }
}

TEST_CASE("reachability equals DFS enumeration and is a partial order") {
  gen::Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto nodes = 2 + rng() % 11;
    const bool dag = trial % 2 == 1;
    auto edges = dag ? gen::random_dag(rng, nodes) : gen::random_tree(rng, nodes);
    auto t = Taxonomy::from_edges(edges, dag ? HierarchyMode::kDag : HierarchyMode::kTree);
    ReachabilityMatrix r(t);
    auto expected = oracle::reachability(t);
    const auto n = t.node_count();
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(r(i, i));
      if (t.is_leaf(i)) CHECK(r.descendants(i).size() == 1);
      for (std::size_t j = 0; j < n; ++j) {
        REQUIRE(r(i, j) == (expected[i][j] == 1));
        if (i != j && r(i, j)) CHECK_FALSE(r(j, i));
        for (std::size_t k = 0; k < n; ++k)
          if (r(i, j) && r(j, k)) CHECK(r(i, k));
      }
    }
  }
}

TEST_CASE("ancestral paths") {
  SUBCASE("tree has one path") {
    auto t = parse_taxonomy(kAnimals);
    auto paths = ancestral_paths(t, "Husky");
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].length() == 2);
    CHECK(paths[0].nodes == std::vector<NodeId>{t.index_of("Husky"), t.index_of("Dog"), kRoot});
  }
  SUBCASE("diamond has two, each leaving L through a 2-way split") {
    auto t = parse_taxonomy(kDiamond, HierarchyMode::kDag);
    auto paths = ancestral_paths(t, "L");
    REQUIRE(paths.size() == 2);
    for (const auto& p : paths) {
      CHECK(p.length() == 2);
      CHECK(p.parent_counts[0] == 2);
      CHECK(p.parent_counts[1] == 1);
    }
  }
  SUBCASE("depth-4 chain") {
    auto t = parse_taxonomy("root\tA\nA\tB\nB\tC\nC\tD\n");
    auto paths = ancestral_paths(t, "D");
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].length() == 4);
  }
  SUBCASE("internal node is rejected") {
    auto t = parse_taxonomy(kAnimals);
    CHECK_THROWS_AS(ancestral_paths(t, "Dog"), ValidationError);
  }
  SUBCASE("tree path nodes are the leaf's reachability column plus the root") {
    gen::Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      auto t = Taxonomy::from_edges(gen::random_tree(rng, 2 + rng() % 12), HierarchyMode::kTree);
      ReachabilityMatrix r(t);
      for (NodeId leaf = 0; leaf < t.leaf_count(); ++leaf) {
        auto path = ancestral_paths(t, leaf).at(0).nodes;
        std::set<NodeId> on_path(path.begin(), path.end());
        std::set<NodeId> expected{kRoot};
        for (NodeId i = 0; i < t.node_count(); ++i)
          if (r(i, leaf)) expected.insert(i);
        CHECK(on_path == expected);
      }
    }
  }
}

TEST_CASE("path enumeration is capped") {
  // 15 stacked diamonds give 2^15 paths for the bottom leaf.
  std::string src;
  std::string prev = "root";
  for (int layer = 0; layer < 15; ++layer) {
    auto a = "a" + std::to_string(layer), b = "b" + std::to_string(layer);
    auto join = "j" + std::to_string(layer);
    src += prev + "\t" + a + "\n" + prev + "\t" + b + "\n" + a + "\t" + join + "\n" + b + "\t" +
           join + "\n";
    prev = join;
  }
  auto t = parse_taxonomy(src, HierarchyMode::kDag);
  const auto leaf = t.index_of(prev);
  CHECK(count_paths(t, leaf) == kMaxPathsPerLeaf + 1);
  CHECK_THROWS_AS(ancestral_paths(t, leaf), ValidationError);
}

TEST_CASE("node levels") {
  auto t = parse_taxonomy(kAnimals);
  CHECK(node_level(t, "root") == 0);
  CHECK(node_level(t, "Husky") == 2);
  CHECK(node_level(t, "Cat") == 1);
  CHECK_THROWS_AS(node_level(t, "Wolf"), ValidationError);
  auto d = parse_taxonomy("root\tX\nX\tY\nY\tL\nroot\tL\n", HierarchyMode::kDag);
  CHECK(node_level(d, "L") == 1);
}

TEST_CASE("lca height") {
  auto t = parse_taxonomy(kAnimals);
  CHECK(lca_height(t, "Husky", "Beagle") == 1);
  CHECK(lca_height(t, "Husky", "Cat") == 2);
  CHECK(lca_height(t, "Cat", "Husky") == 2);
  CHECK(lca_height(t, "Husky", "Husky") == 0);
  CHECK_THROWS_AS(lca_height(parse_taxonomy(kDiamond, HierarchyMode::kDag), "L", "L"),
                  ValidationError);

  gen::Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    auto r = Taxonomy::from_edges(gen::random_tree(rng, 2 + rng() % 12), HierarchyMode::kTree);
    for (NodeId a = 0; a < r.leaf_count(); ++a)
      for (NodeId b = 0; b < r.leaf_count(); ++b)
        REQUIRE(lca_height(r, a, b) == oracle::lca_height(r, a, b));
  }
}
