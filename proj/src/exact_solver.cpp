#include "aot/exact_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace aot {

namespace {

void check_action(const TabularPomdp& model, std::size_t a) {
  if (a >= model.num_actions) throw Error(ErrorKind::InvalidArgument, "action out of range");
}

void check_budget(const TabularPomdp& model, std::size_t budget_nodes) {
  const double estimate = tree_size_estimate(model);
  if (estimate > static_cast<double>(budget_nodes)) {
    throw Error(ErrorKind::BudgetExceeded, "tree of ~" + std::to_string(static_cast<long long>(estimate)) +
                                               " nodes exceeds budget of " + std::to_string(budget_nodes));
  }
}

/// Observation probability of every z under a propagated belief.
std::vector<double> observation_marginal(const DiscreteBelief& predicted, const TabularPomdp& model) {
  std::vector<double> eta(model.num_observations, 0.0);
  for (std::size_t x = 0; x < model.num_states; ++x) {
    if (predicted[x] == 0.0) continue;
    const auto row = model.observation_row(x);
    for (std::size_t z = 0; z < model.num_observations; ++z) eta[z] += predicted[x] * row[z];
  }
  return eta;
}

double full_value(const TabularPomdp& model, const DiscreteBelief& b, std::size_t remaining);

double full_q(const TabularPomdp& model, const DiscreteBelief& b, std::size_t a, std::size_t remaining) {
  double q = belief_reward(b, a, model);
  if (remaining == 1) return q;
  const DiscreteBelief predicted = propagate(b, a, model);
  const std::vector<double> eta = observation_marginal(predicted, model);
  for (std::size_t z = 0; z < model.num_observations; ++z) {
    if (eta[z] <= kZeroLikelihood) continue;
    q += eta[z] * full_value(model, bayes_update_original(predicted, z, model), remaining - 1);
  }
  return q;
}

double full_value(const TabularPomdp& model, const DiscreteBelief& b, std::size_t remaining) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < model.num_actions; ++a) best = std::max(best, full_q(model, b, a, remaining));
  return best;
}

double policy_q(const TabularPomdp& model, const Topology& topology, const PolicyAssignment& policy,
                const NodePath& path, const DiscreteBelief& b, std::size_t a, std::size_t remaining) {
  double q = belief_reward(b, a, model);
  if (remaining == 1) return q;
  const NodePath prop = path.propagated(a);
  const DiscreteBelief predicted = propagate(b, a, model);
  auto next = [&](const NodePath& child, const DiscreteBelief& posterior) {
    const auto it = policy.find(child);
    if (it == policy.end()) {
      throw Error(ErrorKind::MissingAssignment, "no action assigned at node " + child.to_string());
    }
    return policy_q(model, topology, policy, child, posterior, it->second, remaining - 1);
  };
  if (topology.effective_beta(prop)) {
    const std::vector<double> eta = observation_marginal(predicted, model);
    for (std::size_t z = 0; z < model.num_observations; ++z) {
      if (eta[z] <= kZeroLikelihood) continue;
      q += eta[z] * next(prop.child(z), bayes_update_original(predicted, z, model));
    }
  } else {
    for (std::size_t x = 0; x < model.num_states; ++x) {
      if (predicted[x] <= kRevealedMassFloor) continue;
      q += predicted[x] * next(prop.child(x), DiscreteBelief::point_mass(model.num_states, x));
    }
  }
  return q;
}

}  // namespace

double tree_size_estimate(const TabularPomdp& model) {
  const double branching = static_cast<double>(std::max(model.num_observations, model.num_states));
  const double actions = static_cast<double>(model.num_actions);
  double layer = 1.0;
  double total = 1.0;
  for (std::size_t d = 1; d < model.horizon; ++d) {
    layer *= actions * branching;
    total += layer;
  }
  return total;
}

double q_optimal_full(const TabularPomdp& model, const DiscreteBelief& b0, std::size_t a0,
                      std::size_t budget_nodes) {
  check_action(model, a0);
  check_budget(model, budget_nodes);
  return full_q(model, b0, a0, model.horizon);
}

double q_topology(const TabularPomdp& model, const Topology& topology, const PolicyAssignment& policy,
                  const DiscreteBelief& b0, std::size_t a0) {
  check_action(model, a0);
  return policy_q(model, topology, policy, NodePath(), b0, a0, model.horizon);
}

namespace {

BoundPair single_action_bounds(const TabularPomdp& model, const Topology& topology, const DiscreteBelief& b0,
                               std::size_t a0, std::size_t budget_nodes) {
  check_action(model, a0);
  ExactAotEvaluator evaluator(model, b0, budget_nodes);
  const std::unique_ptr<bool[]> active(new bool[model.num_actions]);
  for (std::size_t a = 0; a < model.num_actions; ++a) active[a] = a == a0;
  return evaluator.evaluate(topology, {active.get(), model.num_actions})[a0];
}

}  // namespace

double upper_bound(const TabularPomdp& model, const Topology& topology, const DiscreteBelief& b0,
                   std::size_t a0, std::size_t budget_nodes) {
  return single_action_bounds(model, topology, b0, a0, budget_nodes).ub;
}

double lower_bound(const TabularPomdp& model, const Topology& topology, const DiscreteBelief& b0,
                   std::size_t a0, std::size_t budget_nodes) {
  return single_action_bounds(model, topology, b0, a0, budget_nodes).lb;
}

double qmdp_value(const TabularPomdp& model, const DiscreteBelief& b0, std::size_t a0) {
  check_action(model, a0);
  // values[x] = optimal MDP value with `m` action layers left; starts at m = 0.
  std::vector<double> values(model.num_states, 0.0);
  for (std::size_t m = 1; m < model.horizon; ++m) {
    std::vector<double> next(model.num_states, -std::numeric_limits<double>::infinity());
    for (std::size_t x = 0; x < model.num_states; ++x) {
      for (std::size_t a = 0; a < model.num_actions; ++a) {
        double q = model.r(x, a);
        const auto row = model.transition_row(a, x);
        for (std::size_t y = 0; y < model.num_states; ++y) q += row[y] * values[y];
        next[x] = std::max(next[x], q);
      }
    }
    values = std::move(next);
  }
  double q = belief_reward(b0, a0, model);
  if (model.horizon > 1) {
    const DiscreteBelief predicted = propagate(b0, a0, model);
    for (std::size_t x = 0; x < model.num_states; ++x) q += predicted[x] * values[x];
  }
  return q;
}

std::optional<std::size_t> identify_action(std::span<const BoundPair> bounds, double epsilon) {
  if (bounds.empty()) return std::nullopt;
  std::size_t candidate = 0;
  for (std::size_t a = 1; a < bounds.size(); ++a) {
    if (bounds[a].lb > bounds[candidate].lb) candidate = a;
  }
  for (std::size_t a = 0; a < bounds.size(); ++a) {
    if (a == candidate) continue;
    if (!(bounds[candidate].lb > bounds[a].ub + epsilon)) return std::nullopt;
  }
  return candidate;
}

std::vector<std::size_t> prune_dominated(std::span<const BoundPair> bounds, double epsilon,
                                         std::span<const bool> active) {
  auto is_active = [&](std::size_t a) { return active.empty() || active[a]; };
  double best_lb = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < bounds.size(); ++a) {
    if (is_active(a)) best_lb = std::max(best_lb, bounds[a].lb);
  }
  std::vector<std::size_t> survivors;
  for (std::size_t a = 0; a < bounds.size(); ++a) {
    if (is_active(a) && !(best_lb > bounds[a].ub + epsilon)) survivors.push_back(a);
  }
  return survivors;
}

ExactAotEvaluator::ExactAotEvaluator(const TabularPomdp& model, DiscreteBelief b0, std::size_t budget_nodes)
    : model_(model), b0_(std::move(b0)) {
  check_budget(model, budget_nodes);
  if (b0_.size() != model.num_states || !b0_.on_simplex()) {
    throw Error(ErrorKind::InvalidArgument, "initial belief is not a distribution over the model's states");
  }
}

std::vector<BoundPair> ExactAotEvaluator::evaluate(const Topology& topology, std::span<const bool> active) {
  nlohmann::json key = topology.to_json();
  if (!cache_topology_ || *cache_topology_ != key) cache_.clear();
  cache_topology_ = std::move(key);
  topology_ = &topology;
  frontier_.clear();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<BoundPair> out(model_.num_actions, BoundPair{nan, nan});
  for (std::size_t a = 0; a < model_.num_actions; ++a) {
    if (!active.empty() && !active[a]) continue;
    std::vector<NodePath> frontier;
    action_value(NodePath(), b0_, a, model_.horizon, out[a].ub, out[a].lb, frontier);
    frontier_.insert(frontier.begin(), frontier.end());
  }
  topology_ = nullptr;
  return out;
}

void ExactAotEvaluator::action_value(const NodePath& path, const DiscreteBelief& belief, std::size_t action,
                                     std::size_t remaining, double& ub, double& lb,
                                     std::vector<NodePath>& frontier) {
  const double reward = belief_reward(belief, action, model_);
  ub = reward;
  lb = reward;
  if (remaining == 1) return;
  const NodePath prop = path.propagated(action);
  const DiscreteBelief predicted = propagate(belief, action, model_);
  if (topology_->effective_beta(prop)) {
    const std::vector<double> eta = observation_marginal(predicted, model_);
    for (std::size_t z = 0; z < model_.num_observations; ++z) {
      if (eta[z] <= kZeroLikelihood) continue;
      const NodeBounds& child =
          node(prop.child(z), bayes_update_original(predicted, z, model_), remaining - 1);
      ub += eta[z] * *std::max_element(child.ub.begin(), child.ub.end());
      lb += eta[z] * *std::max_element(child.lb.begin(), child.lb.end());
      frontier.insert(frontier.end(), child.frontier.begin(), child.frontier.end());
    }
  } else {
    // Frontier nodes: alternative here, original all the way up.
    if (path.empty() || topology_->effective_beta(path.parent_propagated())) {
      frontier.push_back(prop);
    }
    for (std::size_t x = 0; x < model_.num_states; ++x) {
      if (predicted[x] <= kRevealedMassFloor) continue;
      const NodeBounds& child =
          node(prop.child(x), DiscreteBelief::point_mass(model_.num_states, x), remaining - 1);
      ub += predicted[x] * *std::max_element(child.ub.begin(), child.ub.end());
      lb += predicted[x] * *std::min_element(child.lb.begin(), child.lb.end());
    }
  }
}

const ExactAotEvaluator::NodeBounds& ExactAotEvaluator::node(const NodePath& path, const DiscreteBelief& belief,
                                                              std::size_t remaining) {
  if (const auto it = cache_.find(path); it != cache_.end()) return it->second;
  NodeBounds bounds;
  bounds.ub.resize(model_.num_actions);
  bounds.lb.resize(model_.num_actions);
  for (std::size_t a = 0; a < model_.num_actions; ++a) {
    action_value(path, belief, a, remaining, bounds.ub[a], bounds.lb[a], bounds.frontier);
  }
  ++nodes_computed_;
  return cache_.emplace(path, std::move(bounds)).first->second;
}

std::set<NodePath> ExactAotEvaluator::cached_nodes() const {
  std::set<NodePath> out;
  for (const auto& entry : cache_) out.insert(entry.first);
  return out;
}

void ExactAotEvaluator::retain(const std::set<NodePath>& reusable) {
  std::erase_if(cache_, [&](const auto& entry) { return !reusable.contains(entry.first); });
}

void ExactAotEvaluator::apply_refinement(const Refinement& r) {
  retain(reusable_nodes(r.flipped, cached_nodes()));
  cache_topology_ = r.topology.to_json();
}

}  // namespace aot
