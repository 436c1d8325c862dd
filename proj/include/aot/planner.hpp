#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aot/exact_solver.hpp"
#include "aot/pomdp.hpp"
#include "aot/sparse_estimator.hpp"
#include "aot/topology.hpp"

namespace aot {

enum class PlanMode { Exact, Sampled };

/// Why the refinement loop stopped.
enum class Termination {
  Identified,      // one action's interval is strictly separated from all others
  FullTopology,    // no alternative node left in the reachable tree; argmax ub
  IterationLimit,  // schedule.max_iterations reached; argmax ub
};

std::string_view to_string(Termination t);

struct PlannerOptions {
  /// Separation slack for pruning and identification; unset means 1e-9 in
  /// exact mode and 0 in sampled mode.
  std::optional<double> epsilon;
  std::size_t budget_nodes = kDefaultNodeBudget;
  SampleParams sample;
  /// Starting topology; defaults to the seeded initial topology of the schedule.
  std::optional<Topology> initial;
};

struct IterationRecord {
  std::vector<BoundPair> bounds;  // NaN for actions pruned in an earlier iteration
  std::vector<bool> pruned;       // after this iteration's pruning step
  bool identified = false;
  std::size_t flipped_cum = 0;    // nodes flipped to reach this iteration's topology
  double elapsed_ms = 0.0;        // since the start of plan()
  std::uint64_t work = 0;         // cumulative evaluator work units
};

struct PlanResult {
  std::size_t chosen_action = 0;
  bool identified = false;
  Termination termination = Termination::FullTopology;
  std::size_t iterations = 0;
  std::vector<IterationRecord> trace;
  double total_elapsed_ms = 0.0;
  std::string final_topology_label;
  std::uint64_t work = 0;
};

/// Planner failure carrying the iterations completed before it.
class PlanFailure : public Error {
 public:
  PlanFailure(const Error& cause, PlanResult partial)
      : Error(cause.kind(), cause.what()), partial_(std::move(partial)) {}
  const PlanResult& partial() const { return partial_; }

 private:
  PlanResult partial_;
};

/// Shared iteration bookkeeping: pruning, identification, refinement.
class PlanDriver {
 public:
  PlanDriver(std::size_t num_actions, const RefinementSchedule& schedule, const PlannerOptions& options,
             double default_epsilon);

  const Topology& topology() const { return topology_; }
  std::span<const bool> active() const { return {active_.get(), num_actions_}; }
  std::vector<bool> active_vector() const { return std::vector<bool>(active_.get(), active_.get() + num_actions_); }

  /// Records one iteration. Returns the refinement to apply next, or nothing
  /// once the loop has terminated.
  std::optional<Refinement> advance(const std::vector<BoundPair>& bounds, const std::set<NodePath>& frontier,
                                    std::uint64_t work);

  PlanResult& result() { return result_; }
  PlanResult finish();
  [[noreturn]] void fail(const Error& cause);

 private:
  double elapsed_ms() const;
  std::size_t argmax_ub(const std::vector<BoundPair>& bounds) const;

  std::size_t num_actions_;
  RefinementSchedule schedule_;
  double epsilon_;
  Topology topology_;
  std::unique_ptr<bool[]> active_;
  Rng refine_rng_;
  std::size_t flipped_cum_ = 0;
  std::chrono::steady_clock::time_point start_;
  PlanResult result_;
};

/// Exact mode evaluates bounds on the full tabular tree; sampled mode runs the
/// sparse estimator on the exact root belief.
PlanResult plan(const TabularPomdp& model, const DiscreteBelief& b0, const RefinementSchedule& schedule,
                PlanMode mode, const PlannerOptions& options = {});

/// Sampled-mode planner for any generative model.
template <SamplingModel Model>
PlanResult plan_sampled(const Model& model, const ParticleBelief<typename Model::State>& b0,
                        const RefinementSchedule& schedule, const PlannerOptions& options = {}) {
  PlanDriver driver(model.num_actions(), schedule, options, 0.0);
  try {
    SparseTree<Model> tree(model, b0, driver.topology(), options.sample, driver.active_vector());
    for (;;) {
      const SampledBounds est = tree.evaluate();
      std::vector<BoundPair> bounds(model.num_actions());
      for (std::size_t a = 0; a < bounds.size(); ++a) bounds[a] = BoundPair{est.lb[a], est.ub[a]};
      std::optional<Refinement> next = driver.advance(bounds, tree.frontier(), tree.work());
      if (!next) break;
      tree.deactivate(driver.active());
      tree.apply_refinement(std::move(next->topology), next->flipped);
    }
  } catch (const PlanFailure&) {
    throw;
  } catch (const Error& e) {
    driver.fail(e);
  }
  return driver.finish();
}

/// Single evaluation at the all-original topology.
PlanResult plan_full(const TabularPomdp& model, const DiscreteBelief& b0, PlanMode mode,
                     const PlannerOptions& options = {});

template <SamplingModel Model>
PlanResult plan_sampled_full(const Model& model, const ParticleBelief<typename Model::State>& b0,
                             const PlannerOptions& options = {}) {
  PlannerOptions full = options;
  full.initial = Topology::all_original();
  return plan_sampled(model, b0, RefinementSchedule{}, full);
}

/// CSV with header iteration,action,lb,ub,pruned,identified,flipped_cum,elapsed_ms.
/// Timing columns are written as 0 unless `with_timing`.
std::string trace_csv(const PlanResult& result, bool with_timing);

/// Shortest round-trip decimal form; empty for NaN.
std::string format_number(double v);

// ---------------------------------------------------------------------------
// Closed-loop episodes

template <typename State>
struct EpisodeStep {
  std::size_t action = 0;
  double reward = 0.0;  // r(x_t, a_t) on the true state before the move
  double planning_ms = 0.0;
  State state{};        // true state after the move
  bool identified = false;
  std::size_t iterations = 0;
  std::uint64_t work = 0;
  std::optional<std::size_t> baseline_action;
  double baseline_ms = 0.0;
  std::uint64_t baseline_work = 0;
};

template <typename State>
struct EpisodeRecord {
  State initial_state{};
  std::vector<EpisodeStep<State>> steps;
};

struct EpisodeConfig {
  std::size_t steps = 10;
  std::uint64_t seed = 0;
  std::size_t belief_particles = 200;
  RefinementSchedule schedule;
  PlannerOptions options;
  /// Also plan with the all-original topology from the same belief and seeds.
  bool compare_full = false;
};

/// Plan, act on the true state, observe, filter; repeated `steps` times.
/// `initial_belief` and `initial_state` come from the caller so the belief
/// and the truth can share or not share a source.
template <SamplingModel Model>
EpisodeRecord<typename Model::State> replan_episode(const Model& model, typename Model::State initial_state,
                                                    ParticleBelief<typename Model::State> belief,
                                                    const EpisodeConfig& config) {
  using Clock = std::chrono::steady_clock;
  EpisodeRecord<typename Model::State> record;
  record.initial_state = initial_state;
  Rng world(hash_combine(config.seed, hash_tag("world")));
  typename Model::State truth = std::move(initial_state);
  for (std::size_t t = 0; t < config.steps; ++t) {
    EpisodeStep<typename Model::State> step;
    PlannerOptions options = config.options;
    options.sample.seed = hash_combine(config.seed, hash_combine(hash_tag("plan"), t));
    RefinementSchedule schedule = config.schedule;
    schedule.seed = hash_combine(config.schedule.seed, t);

    const auto t0 = Clock::now();
    const PlanResult result = plan_sampled(model, belief, schedule, options);
    step.planning_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    step.action = result.chosen_action;
    step.identified = result.identified;
    step.iterations = result.iterations;
    step.work = result.work;
    if (config.compare_full) {
      const auto t1 = Clock::now();
      const PlanResult full = plan_sampled_full(model, belief, options);
      step.baseline_ms = std::chrono::duration<double, std::milli>(Clock::now() - t1).count();
      step.baseline_action = full.chosen_action;
      step.baseline_work = full.work;
    }

    step.reward = model.reward(truth, step.action);
    truth = model.sample_transition(truth, step.action, world);
    const auto z = model.sample_observation(truth, world);
    Rng filter(hash_combine(config.seed, hash_combine(hash_tag("filter"), t)));
    belief = particle_reweight(particle_propagate(belief, step.action, model, config.belief_particles, filter), z,
                               model);
    step.state = truth;
    record.steps.push_back(std::move(step));
  }
  return record;
}

}  // namespace aot
