#include <algorithm>
#include <random>

#include "doctest.h"
#include "aot/error.hpp"
#include "aot/topology.hpp"

using namespace aot;

namespace {

NodePath random_path(Rng& rng, std::size_t max_depth, std::size_t actions, std::size_t branches) {
  std::vector<Step> steps(1 + rng() % max_depth);
  for (auto& s : steps) {
    s.action = static_cast<std::uint32_t>(rng() % actions);
    s.branch = static_cast<std::int32_t>(rng() % branches);
  }
  if (rng() % 2) steps.back().branch = Step::kOpen;
  return NodePath(std::move(steps));
}

/// Quadratic reference for reusable_nodes: prefix relation checked pairwise.
bool related(const NodePath& a, const NodePath& b) {
  return a.is_ancestor_or_self_of(b) || b.is_ancestor_or_self_of(a);
}

}  // namespace

TEST_CASE("node paths") {
  const NodePath root;
  const NodePath p = root.propagated(1);
  CHECK(p.is_propagated());
  CHECK(p.depth() == 1);
  const NodePath c = p.child(3);
  CHECK_FALSE(c.is_propagated());
  CHECK(c.parent_propagated() == p);
  CHECK(root.is_ancestor_or_self_of(c));
  CHECK(p.is_ancestor_or_self_of(c));
  CHECK(p.is_ancestor_or_self_of(p.child(0)));
  CHECK_FALSE(c.is_ancestor_or_self_of(p));
  CHECK_FALSE(p.child(2).is_ancestor_or_self_of(c.propagated(0)));
  CHECK(c.is_ancestor_or_self_of(c.propagated(0).child(1)));
  CHECK(c.to_string() == "[1:3]");
  CHECK(c.propagated(0).to_string() == "[1:3 0]");
}

TEST_CASE("fixed topologies") {
  Rng rng(1);
  const Topology z = Topology::all_original();
  const Topology o = Topology::all_alternative();
  for (int i = 0; i < 200; ++i) {
    const NodePath p = random_path(rng, 4, 3, 5);
    CHECK(z.beta(p));
    CHECK_FALSE(o.beta(p));
  }
  CHECK(z.label() == "tau_Z");
  CHECK(o.label() == "tau_O");
}

TEST_CASE("seeded topology hits its original fraction") {
  const Topology t = Topology::seeded(7, 0.15);
  std::size_t ones = 0;
  std::size_t n = 0;
  NodePath root;
  // 10,000 distinct propagated paths: [a0:b0 a1] for a0<2, b0<50, a1<100.
  for (std::size_t a0 = 0; a0 < 2; ++a0)
    for (std::size_t b0 = 0; b0 < 50; ++b0)
      for (std::size_t a1 = 0; a1 < 100; ++a1) {
        ones += t.beta(root.propagated(a0).child(b0).propagated(a1));
        ++n;
      }
  CHECK(n == 10000);
  CHECK(std::abs(static_cast<double>(ones) / n - 0.15) <= 0.01);
}

TEST_CASE("initial topology") {
  Rng rng(2);
  const Topology full = initial_topology(1.0, 3);
  const Topology none = initial_topology(0.0, 3);
  const Topology a = initial_topology(0.15, 42);
  const Topology b = initial_topology(0.15, 42);
  for (int i = 0; i < 500; ++i) {
    const NodePath p = random_path(rng, 3, 2, 20);
    CHECK(full.beta(p));
    CHECK_FALSE(none.beta(p));
    CHECK(a.beta(p) == b.beta(p));
    for (int k = 0; k < 3; ++k) CHECK(a.beta(p) == a.beta(p));
  }
  CHECK(a.overrides().empty());
  CHECK_THROWS_AS(initial_topology(1.5, 0), Error);
}

TEST_CASE("explicit bits default to the alternative regime") {
  const NodePath p = NodePath().propagated(0);
  const Topology t = Topology::explicit_bits({{p, true}});
  CHECK(t.beta(p));
  CHECK_FALSE(t.beta(NodePath().propagated(1)));
}

TEST_CASE("effective regime is absorbing below an alternative node") {
  const NodePath p0 = NodePath().propagated(0);
  const NodePath deep = p0.child(1).propagated(1);
  const Topology t = Topology::explicit_bits({{deep, true}});
  CHECK(t.beta(deep));
  CHECK_FALSE(t.effective_beta(deep));
  const Topology both = Topology::explicit_bits({{deep, true}, {p0, true}});
  CHECK(both.effective_beta(deep));
}

TEST_CASE("refine on a reachable-tree-equivalent topology has nothing to flip") {
  Rng rng(3);
  try {
    refine(Topology::all_original(), {}, 5, rng);
    FAIL("expected NothingToFlip");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NothingToFlip);
  }
}

TEST_CASE("refine clamps to the available nodes") {
  Rng rng(4);
  const Topology t = Topology::all_alternative();
  std::set<NodePath> nodes{NodePath().propagated(0), NodePath().propagated(1), NodePath().propagated(2)};
  const Refinement r = refine(t, nodes, 5, rng);
  CHECK(r.flipped == nodes);
  for (const auto& p : nodes) CHECK(r.topology.beta(p));
}

TEST_CASE("refine flips exactly n new nodes and keeps earlier ones") {
  Rng rng(5);
  const Topology t = Topology::seeded(11, 0.0).with_overrides({NodePath().propagated(7)}, "x");
  std::set<NodePath> summary;
  for (std::size_t b = 0; b < 100; ++b) summary.insert(NodePath().propagated(0).child(b).propagated(1));
  const Refinement r = refine(t, summary, 5, rng);
  CHECK(r.flipped.size() == 5);
  std::size_t new_ones = 0;
  for (const auto& p : summary) {
    const bool before = t.beta(p);
    const bool after = r.topology.beta(p);
    CHECK(after >= before);
    new_ones += after && !before;
    CHECK(r.flipped.contains(p) == (after && !before));
  }
  CHECK(new_ones == 5);
  CHECK(r.topology.beta(NodePath().propagated(7)));
}

TEST_CASE("refinement is monotone on arbitrary queries") {
  Rng rng(6);
  Topology t = Topology::seeded(13, 0.3);
  std::vector<NodePath> pool;
  for (int i = 0; i < 300; ++i) pool.push_back(random_path(rng, 3, 2, 4));
  for (int round = 0; round < 10; ++round) {
    std::set<NodePath> alt;
    for (const auto& p : pool)
      if (!t.beta(p)) alt.insert(p);
    if (alt.empty()) break;
    const Refinement r = refine(t, alt, 5, rng);
    for (const auto& p : pool) CHECK(r.topology.beta(p) >= t.beta(p));
    t = r.topology;
  }
}

TEST_CASE("reusable nodes: no flips keeps everything") {
  std::set<NodePath> all{NodePath(), NodePath().propagated(0).child(1)};
  CHECK(reusable_nodes({}, all) == all);
}

TEST_CASE("reusable nodes: flipping one action's child keeps the other action's subtree") {
  const NodePath root;
  std::set<NodePath> all{root};
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b) {
      all.insert(root.propagated(a).child(b));
      all.insert(root.propagated(a).child(b).propagated(0).child(0));
    }
  const std::set<NodePath> kept = reusable_nodes({root.propagated(0)}, all);
  for (const auto& n : all) {
    const bool other_action = !n.empty() && n.steps().front().action == 1;
    CHECK(kept.contains(n) == other_action);
  }
}

TEST_CASE("reusable nodes match a pairwise prefix check") {
  Rng rng(8);
  std::set<NodePath> all;
  while (all.size() < 500) all.insert(random_path(rng, 4, 2, 3));
  std::vector<NodePath> pool(all.begin(), all.end());
  std::set<NodePath> flipped;
  while (flipped.size() < 5) {
    NodePath p = pool[rng() % pool.size()];
    if (p.is_propagated()) flipped.insert(p);
  }
  const std::set<NodePath> got = reusable_nodes(flipped, all);
  std::set<NodePath> expected;
  for (const auto& n : all) {
    bool ok = true;
    for (const auto& f : flipped) ok = ok && !related(n, f);
    if (ok) expected.insert(n);
  }
  CHECK(got == expected);
  for (const auto& f : flipped) CHECK_FALSE(got.contains(f));
}

TEST_CASE("topology JSON round trip") {
  const Topology seeded = Topology::seeded(99, 0.25, "initial")
                              .with_overrides({NodePath().propagated(1).child(4).propagated(0)}, "refined");
  const Topology back = Topology::from_json(nlohmann::json::parse(seeded.to_json().dump()));
  CHECK(back.to_json() == seeded.to_json());
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const NodePath p = random_path(rng, 3, 2, 6);
    CHECK(back.beta(p) == seeded.beta(p));
  }
  const Topology ex = Topology::explicit_bits({{NodePath().propagated(0), true}, {NodePath().propagated(1), false}});
  CHECK(Topology::from_json(ex.to_json()).to_json() == ex.to_json());
  CHECK_THROWS_AS(Topology::from_json(nlohmann::json{{"mode", "weird"}}), Error);
}
