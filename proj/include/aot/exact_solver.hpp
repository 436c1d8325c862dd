#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "aot/pomdp.hpp"
#include "aot/topology.hpp"

namespace aot {

/// Bracket on the original problem's optimal Q-value for one action.
struct BoundPair {
  double lb = 0.0;
  double ub = 0.0;
};

/// Action chosen at each posterior node (keyed by its path).
using PolicyAssignment = std::map<NodePath, std::size_t>;

inline constexpr std::size_t kDefaultNodeBudget = 20'000'000;
inline constexpr double kRevealedMassFloor = 1e-15;

/// Worst-case node count of the full tree; used for budget checks.
double tree_size_estimate(const TabularPomdp& model);

/// Optimal Q of the original problem by full belief-tree enumeration.
double q_optimal_full(const TabularPomdp& model, const DiscreteBelief& b0, std::size_t a0,
                      std::size_t budget_nodes = kDefaultNodeBudget);

/// Value of a fixed policy on the tree induced by `topology`.
double q_topology(const TabularPomdp& model, const Topology& topology, const PolicyAssignment& policy,
                  const DiscreteBelief& b0, std::size_t a0);

/// max over topology policies of the topology Q-value.
double upper_bound(const TabularPomdp& model, const Topology& topology, const DiscreteBelief& b0,
                   std::size_t a0, std::size_t budget_nodes = kDefaultNodeBudget);

/// Max at children of original-regime nodes, min at children of
/// alternative-regime nodes; terminal layer is the immediate reward.
double lower_bound(const TabularPomdp& model, const Topology& topology, const DiscreteBelief& b0,
                   std::size_t a0, std::size_t budget_nodes = kDefaultNodeBudget);

/// r(b0,a0) + E_{x'~b0 propagated}[V_MDP(x', L-1)] with finite-horizon value iteration.
double qmdp_value(const TabularPomdp& model, const DiscreteBelief& b0, std::size_t a0);

/// Returns the action whose lb exceeds every other ub by more than epsilon.
std::optional<std::size_t> identify_action(std::span<const BoundPair> bounds, double epsilon = 1e-9);

/// Actions not dominated by any other action (lb(a) > ub(a'') + epsilon removes a'').
/// Entries with `active[a] == false` are ignored and never survive.
std::vector<std::size_t> prune_dominated(std::span<const BoundPair> bounds, double epsilon = 1e-9,
                                         std::span<const bool> active = {});

/// Bound evaluation with node memoization that survives topology refinement.
///
/// After `apply_refinement`, cached posterior-node values outside the flipped
/// subtrees are served without recomputation. Evaluating any other topology
/// than the last one (or its refinement) starts from an empty cache.
class ExactAotEvaluator {
 public:
  ExactAotEvaluator(const TabularPomdp& model, DiscreteBelief b0,
                    std::size_t budget_nodes = kDefaultNodeBudget);

  /// Per-action bounds at the root. Actions with `active[a] == false` are
  /// skipped and reported as NaN.
  std::vector<BoundPair> evaluate(const Topology& topology, std::span<const bool> active = {});

  /// Alternative-regime propagated nodes whose ancestors are all original,
  /// restricted to the actions of the last `evaluate` call.
  const std::set<NodePath>& frontier() const { return frontier_; }

  std::set<NodePath> cached_nodes() const;
  void retain(const std::set<NodePath>& reusable);

  /// Keeps the nodes unaffected by `r.flipped` and accepts `r.topology` as
  /// the next topology to evaluate.
  void apply_refinement(const Refinement& r);

  /// Posterior nodes computed (not served from cache) since construction.
  std::size_t nodes_computed() const { return nodes_computed_; }

 private:
  struct NodeBounds {
    std::vector<double> ub;
    std::vector<double> lb;
    std::vector<NodePath> frontier;
  };

  const NodeBounds& node(const NodePath& path, const DiscreteBelief& belief, std::size_t remaining);
  void action_value(const NodePath& path, const DiscreteBelief& belief, std::size_t action,
                    std::size_t remaining, double& ub, double& lb, std::vector<NodePath>& frontier);

  const TabularPomdp& model_;
  DiscreteBelief b0_;
  const Topology* topology_ = nullptr;
  std::optional<nlohmann::json> cache_topology_;
  std::unordered_map<NodePath, NodeBounds, NodePathHash> cache_;
  std::set<NodePath> frontier_;
  std::size_t nodes_computed_ = 0;
};

}  // namespace aot
