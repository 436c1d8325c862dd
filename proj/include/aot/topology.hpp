#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "aot/rng.hpp"

namespace aot {

/// One action layer of a path: the action taken and the branch followed out
/// of the resulting propagated node. `kOpen` marks a propagated node whose
/// observation branch is not chosen yet.
struct Step {
  static constexpr std::int32_t kOpen = -1;

  std::uint32_t action = 0;
  std::int32_t branch = kOpen;

  friend auto operator<=>(const Step&, const Step&) = default;
};

/// Structural key of a belief-tree node.
///
/// A posterior node after d action layers has d closed steps; the propagated
/// node reached by taking action `a` from it has d+1 steps, the last one open.
/// The root posterior node is the empty path.
class NodePath {
 public:
  NodePath() = default;
  explicit NodePath(std::vector<Step> steps) : steps_(std::move(steps)) {}

  std::size_t depth() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }
  bool is_propagated() const { return !steps_.empty() && steps_.back().branch == Step::kOpen; }
  const std::vector<Step>& steps() const { return steps_; }

  /// Propagated node reached from this posterior node by `action`.
  NodePath propagated(std::size_t action) const;
  /// Posterior child of this propagated node along `branch`.
  NodePath child(std::size_t branch) const;
  /// Propagated node this posterior node hangs off.
  NodePath parent_propagated() const;

  /// True when this node is `other` or lies on the root-to-`other` chain.
  bool is_ancestor_or_self_of(const NodePath& other) const;

  std::uint64_t hash() const;
  std::string to_string() const;

  friend auto operator<=>(const NodePath&, const NodePath&) = default;
  friend bool operator==(const NodePath&, const NodePath&) = default;

 private:
  std::vector<Step> steps_;
};

struct NodePathHash {
  std::size_t operator()(const NodePath& p) const { return static_cast<std::size_t>(p.hash()); }
};

/// Assignment of observation regimes to propagated nodes.
///
/// `beta(path)` is true when the node keeps the original observation space.
/// Explicit mode looks bits up in a map (default false); seeded mode draws a
/// bit from a hash of (seed, path) with probability `original_fraction`.
/// Overrides force a bit to true in either mode and are never removed.
///
/// The regime of a node inside the tree is `effective_beta`: a node whose
/// ancestor propagated node is already alternative stays alternative.
class Topology {
 public:
  enum class Mode { Explicit, Seeded };

  static Topology all_original();     // tau_Z
  static Topology all_alternative();  // tau_O
  static Topology seeded(std::uint64_t seed, double original_fraction, std::string label = "seeded");
  static Topology explicit_bits(std::map<NodePath, bool> bits, std::string label = "custom");

  Mode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  double original_fraction() const { return fraction_; }
  const std::set<NodePath>& overrides() const { return overrides_; }
  const std::map<NodePath, bool>& bits() const { return bits_; }
  const std::string& label() const { return label_; }

  bool beta(const NodePath& propagated) const;
  bool effective_beta(const NodePath& propagated) const;

  /// Copy with `paths` forced to the original regime.
  Topology with_overrides(const std::set<NodePath>& paths, std::string label) const;

  nlohmann::json to_json() const;
  static Topology from_json(const nlohmann::json& doc);

 private:
  Mode mode_ = Mode::Seeded;
  std::uint64_t seed_ = 0;
  double fraction_ = 1.0;
  std::map<NodePath, bool> bits_;
  std::set<NodePath> overrides_;
  std::string label_ = "tau_Z";
};

struct RefinementSchedule {
  std::size_t flips_per_iteration = 5;
  double initial_fraction = 0.15;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 100000;
};

Topology initial_topology(double fraction, std::uint64_t seed);

struct Refinement {
  Topology topology;
  std::set<NodePath> flipped;
};

/// Flips min(n, |alternative_nodes|) nodes drawn uniformly from
/// `alternative_nodes` back to the original regime.
Refinement refine(const Topology& topology, const std::set<NodePath>& alternative_nodes, std::size_t n,
                  Rng& rng);

/// Nodes with no ancestor and no descendant in `flipped`.
std::set<NodePath> reusable_nodes(const std::set<NodePath>& flipped, const std::set<NodePath>& all_nodes);

nlohmann::json path_to_json(const NodePath& path);
NodePath path_from_json(const nlohmann::json& doc);

}  // namespace aot
