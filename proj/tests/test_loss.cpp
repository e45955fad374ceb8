#include <cmath>
#include <numeric>

#include "doctest.h"
#include "hace/errors.hpp"
#include "hace/loss.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace hace;
using doctest::Approx;

namespace {

const char* kAnimals = "root\tDog\nroot\tCat\nDog\tHusky\nDog\tBeagle\n";

LogitBatch batch_of(std::vector<std::vector<double>> rows, std::vector<std::size_t> labels) {
  LogitBatch b{Matrix(rows.size(), rows.at(0).size()), std::move(labels)};
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].begin(), rows[r].end(), b.logits.row(r).begin());
  return b;
}

Taxonomy flat(std::size_t n) {
  std::string src;
  for (std::size_t i = 0; i < n; ++i) src += "root\tleaf" + std::to_string(10 + i) + "\n";
  return parse_taxonomy(src);
}

}  // namespace

TEST_CASE("softmax") {
  auto a = softmax(std::vector<double>{0, 0, 0});
  for (double v : a) CHECK(v == Approx(1.0 / 3.0));
  auto b = softmax(std::vector<double>{1000, 0});
  CHECK(b[0] == Approx(1.0));
  CHECK(std::isfinite(b[1]));
  auto c = softmax(std::vector<double>{0.0, std::log(2.0), std::log(3.0)});
  CHECK(c[0] == Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(c[1] == Approx(2.0 / 6.0).epsilon(1e-14));
  CHECK(c[2] == Approx(3.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("aggregation sums subtree mass") {
  auto t = parse_taxonomy(kAnimals);
  ReachabilityMatrix r(t);
  auto one = aggregate(r, std::vector<double>{0, 0, 1, 0});
  CHECK(one == std::vector<double>{0, 0, 1, 1});
  auto q = aggregate(r, std::vector<double>{0.2, 0.2, 0.3, 0.3});
  CHECK(q[0] == Approx(0.2));
  CHECK(q[1] == Approx(0.2));
  CHECK(q[2] == Approx(0.3));
  CHECK(q[3] == Approx(0.8));
  CHECK_THROWS_AS(aggregate(r, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("aggregated scores are hierarchically consistent") {
  gen::Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const bool dag = trial % 2 == 0;
    auto edges = dag ? gen::random_dag(rng, 2 + rng() % 20) : gen::random_tree(rng, 2 + rng() % 20);
    auto t = Taxonomy::from_edges(edges, dag ? HierarchyMode::kDag : HierarchyMode::kTree);
    ReachabilityMatrix r(t);
    auto q = aggregate(r, softmax(gen::normal_vector(rng, t.node_count(), 3.0)));
    for (NodeId i = 0; i < t.node_count(); ++i)
      for (NodeId j : r.descendants(i)) REQUIRE(q[i] >= q[j] - 1e-12);
  }
}

TEST_CASE("HACE chain toy at uniform logits") {
  auto t = parse_taxonomy("root\tP\nP\tL\n");
  ReachabilityMatrix r(t);
  auto targets = build_target_matrix(t, {TargetKind::kAncestral, {}, 0.6, {}});
  auto res = hace_loss(batch_of({{0.0, 0.0}}, {0}), targets, r, true);
  CHECK(res.loss == Approx(0.6 * std::log(2.0)).epsilon(1e-12));
  CHECK(res.loss == Approx(0.41589).epsilon(1e-4));
  CHECK((*res.aggregated)(0, t.index_of("L")) == Approx(0.5));
  CHECK((*res.aggregated)(0, t.index_of("P")) == Approx(1.0));
}

TEST_CASE("HACE on a flat hierarchy with eps=0, d=1 is SCE bit for bit") {
  gen::Rng rng(43);
  auto t = flat(7);
  ReachabilityMatrix r(t);
  auto hace_targets = build_target_matrix(t, {TargetKind::kAncestralWithUniform, 0.0, 1.0, {}});
  auto sce_targets = build_target_matrix(t, {TargetKind::kOneHot, {}, {}, {}});
  for (int trial = 0; trial < 20; ++trial) {
    LogitBatch b{Matrix(5, 7), {}};
    for (auto& v : b.logits.data()) v = gen::normal_vector(rng, 1, 2.0)[0];
    for (int i = 0; i < 5; ++i) b.labels.push_back(rng() % 7);
    auto h = hace_loss(b, hace_targets, r);
    auto s = sce_loss(b, sce_targets);
    CHECK(h.loss == s.loss);
    CHECK(h.grad == s.grad);
  }
}

TEST_CASE("SCE closed forms") {
  auto two = flat(2);
  auto onehot = build_target_matrix(two, {TargetKind::kOneHot, {}, {}, {}});
  auto res = sce_loss(batch_of({{0.0, 0.0}}, {0}), onehot);
  CHECK(res.loss == Approx(std::log(2.0)));
  CHECK(res.grad(0, 0) == Approx(-0.5));
  CHECK(res.grad(0, 1) == Approx(0.5));

  auto confident = sce_loss(batch_of({{800.0, 0.0}}, {0}), onehot);
  CHECK(confident.loss == Approx(0.0));

  auto t = flat(5);
  auto uniform = build_target_matrix(t, {TargetKind::kUniformSmooth, 0.999999999999, {}, {}});
  auto u = sce_loss(batch_of({{1, 1, 1, 1, 1}}, {3}), uniform);
  CHECK(u.loss == Approx(std::log(5.0)).epsilon(1e-10));

  auto animals = parse_taxonomy(kAnimals);
  CHECK_THROWS_AS(
      sce_loss(batch_of({{0, 0, 0}}, {0}),
               build_target_matrix(animals, {TargetKind::kAncestral, {}, 0.5, {}})),
      ValidationError);
}

TEST_CASE("HXE worked value and telescoping") {
  auto t = parse_taxonomy(kAnimals);
  // q̂ = (Beagle 0.2, Cat 0.2, Husky 0.6) through logits log q̂.
  auto b = batch_of({{std::log(0.2), std::log(0.2), std::log(0.6)}}, {t.index_of("Husky")});
  auto res = hxe_loss(b, t, 0.2);
  const double expected = -(std::log(0.6 / 0.8) + std::exp(-0.2) * std::log(0.8));
  CHECK(res.loss == Approx(expected).epsilon(1e-12));
  CHECK(res.loss == Approx(0.47035).epsilon(1e-4));

  gen::Rng rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    auto r = Taxonomy::from_edges(gen::random_tree(rng, 2 + rng() % 20), HierarchyMode::kTree);
    LogitBatch lb{Matrix(3, r.leaf_count()), {}};
    for (auto& v : lb.logits.data()) v = gen::normal_vector(rng, 1, 2.0)[0];
    for (int i = 0; i < 3; ++i) lb.labels.push_back(rng() % r.leaf_count());
    auto h = hxe_loss(lb, r, 0.0);
    auto s = sce_loss(lb, build_target_matrix(r, {TargetKind::kOneHot, {}, {}, {}}));
    REQUIRE(std::abs(h.loss - s.loss) < 1e-10);
    for (std::size_t i = 0; i < h.grad.data().size(); ++i)
      REQUIRE(std::abs(h.grad.data()[i] - s.grad.data()[i]) < 1e-10);
  }
  CHECK_THROWS_AS(hxe_loss(b, t, -1.0), ValidationError);
  CHECK_THROWS_AS(hxe_loss(b, parse_taxonomy("root\tX\nroot\tY\nX\tL\nY\tL\nX\tM\n",
                                             HierarchyMode::kDag),
                           0.5),
                  ValidationError);
}

TEST_CASE("HACE equals the naive descendant-set sum") {
  gen::Rng rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    const bool dag = trial % 2 == 0;
    auto edges = dag ? gen::random_dag(rng, 2 + rng() % 7) : gen::random_tree(rng, 2 + rng() % 7);
    auto t = Taxonomy::from_edges(edges, dag ? HierarchyMode::kDag : HierarchyMode::kTree);
    ReachabilityMatrix r(t);
    auto targets =
        build_target_matrix(t, {TargetKind::kAncestralWithUniform, gen::uniform(rng, 0, 0.5),
                                gen::uniform(rng, 0.05, 1.0), {}});
    auto z = gen::normal_vector(rng, t.node_count(), 2.0);
    const std::size_t label = rng() % t.leaf_count();
    auto res = hace_loss(batch_of({z}, {label}), targets, r);
    REQUIRE(std::abs(res.loss - oracle::hace_loss(t, z, targets.row(label))) < 1e-12);
  }
}

TEST_CASE("gradients: finite differences, zero row sums, shift invariance") {
  gen::Rng rng(59);
  for (int trial = 0; trial < 60; ++trial) {
    const bool dag = trial % 3 == 0;
    auto edges = dag ? gen::random_dag(rng, 3 + rng() % 18) : gen::random_tree(rng, 3 + rng() % 18);
    auto t = Taxonomy::from_edges(edges, dag ? HierarchyMode::kDag : HierarchyMode::kTree);
    ReachabilityMatrix r(t);
    const std::size_t label = rng() % t.leaf_count();

    auto hace_targets = build_target_matrix(
        t, {TargetKind::kAncestralWithUniform, 0.1, gen::uniform(rng, 0.1, 1.0), {}});
    auto z = gen::normal_vector(rng, t.node_count());
    auto f = [&](const std::vector<double>& x) {
      return hace_loss(batch_of({x}, {label}), hace_targets, r).loss;
    };
    auto res = hace_loss(batch_of({z}, {label}), hace_targets, r);
    auto grad = res.grad.row(0);
    REQUIRE(oracle::max_relative_error(grad, oracle::numeric_gradient(f, z)) < 1e-5);
    REQUIRE(std::abs(std::accumulate(grad.begin(), grad.end(), 0.0)) < 1e-10);
    auto shifted = z;
    for (auto& v : shifted) v += 3.7;
    REQUIRE(std::abs(f(shifted) - res.loss) < 1e-10);

    if (t.is_tree()) {
      auto zl = gen::normal_vector(rng, t.leaf_count());
      const double alpha = gen::uniform(rng, 0.0, 2.0);
      auto g = [&](const std::vector<double>& x) {
        return hxe_loss(batch_of({x}, {label}), t, alpha).loss;
      };
      auto hx = hxe_loss(batch_of({zl}, {label}), t, alpha);
      auto hg = hx.grad.row(0);
      REQUIRE(oracle::max_relative_error(hg, oracle::numeric_gradient(g, zl)) < 1e-5);
      REQUIRE(std::abs(std::accumulate(hg.begin(), hg.end(), 0.0)) < 1e-10);
    }
  }
}

TEST_CASE("batch validation and float widening") {
  auto t = parse_taxonomy(kAnimals);
  ReachabilityMatrix r(t);
  auto targets = build_target_matrix(t, {TargetKind::kAncestral, {}, 0.5, {}});
  CHECK_THROWS_AS(hace_loss(batch_of({{0, 0, 0}}, {0}), targets, r), ValidationError);
  CHECK_THROWS_AS(hace_loss(batch_of({{0, 0, 0, 0}}, {3}), targets, r), ValidationError);
  CHECK_THROWS_AS(hace_loss(batch_of({{0, NAN, 0, 0}}, {0}), targets, r), ValidationError);

  std::vector<float> raw{0.5f, -1.0f, 2.0f, 0.0f};
  auto b = LogitBatch::from_float(raw, 4, {1});
  CHECK(b.logits(0, 0) == 0.5);
  CHECK(b.logits(0, 2) == 2.0);
}

TEST_CASE("log floor hits are counted") {
  auto t = flat(2);
  auto onehot = build_target_matrix(t, {TargetKind::kOneHot, {}, {}, {}});
  auto res = sce_loss(batch_of({{-1000.0, 1000.0}}, {0}), onehot);
  CHECK(res.clamped == 1);
  CHECK(std::isfinite(res.loss));
}
