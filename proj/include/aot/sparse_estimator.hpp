#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "aot/exact_solver.hpp"
#include "aot/pomdp.hpp"
#include "aot/rng.hpp"
#include "aot/topology.hpp"

namespace aot {

struct SampleParams {
  std::size_t obs_samples = 50;  // C
  std::size_t particles = 50;    // N
  std::size_t depth = 0;         // 0: use the model horizon
  std::uint64_t seed = 0;
};

struct ConcentrationParams {
  std::size_t obs_samples = 1;  // C
  std::size_t horizon = 1;      // L
  std::size_t num_actions = 1;
  double lambda = 0.0;
  double v_max = 1.0;
};

struct ConcentrationBound {
  double error_bound = 0.0;
  double probability = 0.0;
};

/// Error bound (L-d)(L-d-1)/2 * lambda holding with probability at least
/// 1 - 2|A|(|A|C)^(L-d) exp(-C lambda^2 / (2 V_max^2)), clamped to [0, 1].
ConcentrationBound concentration(const ConcentrationParams& params, std::size_t depth = 0);

double v_max_for(const TabularPomdp& model);
/// Generative models carry no reward bound; the value must be configured.
double v_max_for(std::optional<double> configured);

/// Per-action root estimates of the upper and lower bound.
struct SampledBounds {
  std::vector<double> ub;
  std::vector<double> lb;
};

/// Sparse-sampling tree over particle beliefs, shaped by a topology.
///
/// Children of an original-regime propagated node: one set of N propagated
/// particles, then C observations sampled from it, each child being the set
/// reweighted by its observation. Children of an alternative-regime node: a
/// single revealed particle. Every propagated node draws from its own stream
/// seeded by (seed, path), so subtrees with equal regime bits come out equal
/// across topologies and rebuilds.
template <SamplingModel Model>
class SparseTree {
 public:
  using State = typename Model::State;
  using Belief = ParticleBelief<State>;

  struct Node;
  struct Branch {
    bool original = false;
    std::vector<std::unique_ptr<Node>> children;
  };
  struct Node {
    NodePath path;
    Belief belief;  // kept only where children may be (re)built
    std::vector<double> reward;
    std::vector<Branch> branches;  // empty at leaves and for inactive root actions
  };

  SparseTree(const Model& model, Belief root_belief, Topology topology, SampleParams params,
             std::vector<bool> active = {})
      : model_(model), topology_(std::move(topology)), params_(params), active_(std::move(active)) {
    if (params_.obs_samples == 0 || params_.particles == 0) {
      throw Error(ErrorKind::InvalidArgument, "obs_samples and particles must be >= 1");
    }
    require_nondegenerate(root_belief);
    if (params_.depth == 0) params_.depth = model_.horizon();
    if (active_.empty()) active_.assign(model_.num_actions(), true);
    root_ = build_node(NodePath(), std::move(root_belief), params_.depth, true);
  }

  const Node& root() const { return *root_; }
  const Topology& topology() const { return topology_; }
  const SampleParams& params() const { return params_; }
  const std::set<NodePath>& frontier() const { return frontier_; }

  /// Simulator calls (transition samples, likelihoods, rewards) so far.
  std::uint64_t work() const { return work_; }

  SampledBounds evaluate() const {
    SampledBounds out;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.ub.assign(model_.num_actions(), nan);
    out.lb.assign(model_.num_actions(), nan);
    for (std::size_t a = 0; a < model_.num_actions(); ++a) {
      if (!active_[a]) continue;
      const auto [ub, lb] = action_values(*root_, a);
      out.ub[a] = ub;
      out.lb[a] = lb;
    }
    return out;
  }

  /// Stops expanding root actions whose mask entry is false.
  void deactivate(std::span<const bool> active) {
    for (std::size_t a = 0; a < active_.size(); ++a) {
      if (active_[a] && !active[a]) {
        active_[a] = false;
        std::erase_if(frontier_, [&](const NodePath& p) { return p.steps().front().action == a; });
      }
    }
  }

  /// Switches to `next` (which must differ from the current topology only on
  /// `flipped`) and rebuilds the subtrees under the flipped nodes.
  void apply_refinement(Topology next, const std::set<NodePath>& flipped) {
    topology_ = std::move(next);
    for (const NodePath& prop : flipped) {
      frontier_.erase(prop);
      Node* parent = find_parent(prop);
      if (parent == nullptr) continue;
      const std::size_t action = prop.steps().back().action;
      const std::size_t remaining = params_.depth - (prop.depth() - 1);
      build_branch(*parent, action, remaining, true);
    }
  }

 private:
  std::unique_ptr<Node> build_node(NodePath path, Belief belief, std::size_t remaining, bool ancestors_original) {
    auto node = std::make_unique<Node>();
    node->path = std::move(path);
    node->reward.resize(model_.num_actions());
    for (std::size_t a = 0; a < model_.num_actions(); ++a) node->reward[a] = belief_reward(belief, a, model_);
    work_ += belief.size() * model_.num_actions();
    if (remaining == 1) return node;
    node->belief = std::move(belief);
    node->branches.resize(model_.num_actions());
    const bool at_root = node->path.empty();
    for (std::size_t a = 0; a < model_.num_actions(); ++a) {
      if (at_root && !active_[a]) continue;
      build_branch(*node, a, remaining, ancestors_original);
    }
    return node;
  }

  void build_branch(Node& node, std::size_t action, std::size_t remaining, bool ancestors_original) {
    const NodePath prop = node.path.propagated(action);
    Branch& branch = node.branches[action];
    branch.children.clear();
    branch.original = ancestors_original && topology_.beta(prop);
    Rng rng(hash_combine(hash_combine(params_.seed, prop.hash()), hash_tag("propagate")));
    if (branch.original) {
      const Belief predicted = particle_propagate(node.belief, action, model_, params_.particles, rng);
      work_ += params_.particles;
      std::uniform_int_distribution<std::size_t> pick(0, predicted.size() - 1);
      branch.children.reserve(params_.obs_samples);
      for (std::size_t j = 0; j < params_.obs_samples; ++j) {
        const auto z = model_.sample_observation(predicted.particles[pick(rng)], rng);
        Belief posterior = particle_reweight(predicted, z, model_);
        work_ += predicted.size();
        branch.children.push_back(build_node(prop.child(j), std::move(posterior), remaining - 1, true));
      }
    } else {
      if (ancestors_original) frontier_.insert(prop);
      const State& source = node.belief.particles[sample_index(node.belief, rng)];
      State next = model_.sample_transition(source, action, rng);
      work_ += 1;
      branch.children.push_back(build_node(prop.child(0), Belief::single(std::move(next)), remaining - 1, false));
    }
  }

  Node* find_parent(const NodePath& prop) {
    Node* node = root_.get();
    const auto& steps = prop.steps();
    for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
      if (node->branches.size() <= steps[k].action) return nullptr;
      auto& children = node->branches[steps[k].action].children;
      const auto index = static_cast<std::size_t>(steps[k].branch);
      if (index >= children.size()) return nullptr;
      node = children[index].get();
    }
    return node;
  }

  /// (ub, lb) of one action at `node`.
  std::pair<double, double> action_values(const Node& node, std::size_t action) const {
    double ub = node.reward[action];
    double lb = node.reward[action];
    if (node.branches.empty()) return {ub, lb};
    const Branch& branch = node.branches[action];
    if (branch.children.empty()) return {ub, lb};
    double ub_sum = 0.0;
    double lb_sum = 0.0;
    for (const auto& child : branch.children) {
      double child_ub = -std::numeric_limits<double>::infinity();
      double child_lb_max = -std::numeric_limits<double>::infinity();
      double child_lb_min = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < model_.num_actions(); ++a) {
        const auto [u, l] = action_values(*child, a);
        child_ub = std::max(child_ub, u);
        child_lb_max = std::max(child_lb_max, l);
        child_lb_min = std::min(child_lb_min, l);
      }
      ub_sum += child_ub;
      lb_sum += branch.original ? child_lb_max : child_lb_min;
    }
    const double count = static_cast<double>(branch.children.size());
    return {ub + ub_sum / count, lb + lb_sum / count};
  }

  const Model& model_;
  Topology topology_;
  SampleParams params_;
  std::vector<bool> active_;
  std::unique_ptr<Node> root_;
  std::set<NodePath> frontier_;
  std::uint64_t work_ = 0;
};

template <SamplingModel Model>
SparseTree<Model> build_tree(const Model& model, const Topology& topology,
                             ParticleBelief<typename Model::State> b0, const SampleParams& params) {
  return SparseTree<Model>(model, std::move(b0), topology, params);
}

template <SamplingModel Model>
std::vector<double> estimate_ub(const SparseTree<Model>& tree) {
  return tree.evaluate().ub;
}

template <SamplingModel Model>
std::vector<double> estimate_lb(const SparseTree<Model>& tree) {
  return tree.evaluate().lb;
}

}  // namespace aot
