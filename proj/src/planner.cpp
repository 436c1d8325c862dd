#include "aot/planner.hpp"

#include <charconv>
#include <cmath>
#include <limits>

namespace aot {

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Identified: return "identified";
    case Termination::FullTopology: return "full_topology";
    case Termination::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

PlanDriver::PlanDriver(std::size_t num_actions, const RefinementSchedule& schedule, const PlannerOptions& options,
                       double default_epsilon)
    : num_actions_(num_actions),
      schedule_(schedule),
      epsilon_(options.epsilon.value_or(default_epsilon)),
      topology_(options.initial ? *options.initial : initial_topology(schedule.initial_fraction, schedule.seed)),
      active_(new bool[num_actions]),
      refine_rng_(hash_combine(schedule.seed, hash_tag("refine"))),
      start_(std::chrono::steady_clock::now()) {
  if (num_actions == 0) throw Error(ErrorKind::InvalidModel, "num_actions: must be positive");
  if (schedule.flips_per_iteration == 0) throw Error(ErrorKind::InvalidArgument, "refine step must be >= 1");
  if (!(epsilon_ >= 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be >= 0");
  std::fill(active_.get(), active_.get() + num_actions, true);
}

double PlanDriver::elapsed_ms() const {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
}

std::size_t PlanDriver::argmax_ub(const std::vector<BoundPair>& bounds) const {
  std::optional<std::size_t> best;
  for (std::size_t a = 0; a < num_actions_; ++a) {
    if (!active_[a]) continue;
    if (!best || bounds[a].ub > bounds[*best].ub) best = a;
  }
  return best.value_or(0);
}

std::optional<Refinement> PlanDriver::advance(const std::vector<BoundPair>& bounds,
                                              const std::set<NodePath>& frontier, std::uint64_t work) {
  IterationRecord rec;
  rec.bounds = bounds;
  rec.flipped_cum = flipped_cum_;
  rec.work = work;

  const std::vector<std::size_t> survivors = prune_dominated(bounds, epsilon_, active());
  std::fill(active_.get(), active_.get() + num_actions_, false);
  std::vector<BoundPair> remaining;
  for (std::size_t a : survivors) {
    active_[a] = true;
    remaining.push_back(bounds[a]);
  }
  rec.pruned.resize(num_actions_);
  for (std::size_t a = 0; a < num_actions_; ++a) rec.pruned[a] = !active_[a];

  std::optional<Refinement> next;
  if (const auto pick = identify_action(remaining, epsilon_)) {
    rec.identified = true;
    result_.identified = true;
    result_.chosen_action = survivors[*pick];
    result_.termination = Termination::Identified;
  } else {
    std::set<NodePath> open;
    for (const NodePath& p : frontier) {
      if (active_[p.steps().front().action]) open.insert(p);
    }
    if (open.empty()) {
      result_.chosen_action = argmax_ub(bounds);
      result_.termination = Termination::FullTopology;
    } else if (result_.trace.size() + 1 >= schedule_.max_iterations) {
      result_.chosen_action = argmax_ub(bounds);
      result_.termination = Termination::IterationLimit;
    } else {
      next = refine(topology_, open, schedule_.flips_per_iteration, refine_rng_);
      flipped_cum_ += next->flipped.size();
      topology_ = next->topology;
    }
  }
  rec.elapsed_ms = elapsed_ms();
  result_.trace.push_back(std::move(rec));
  result_.iterations = result_.trace.size();
  result_.work = work;
  return next;
}

PlanResult PlanDriver::finish() {
  result_.total_elapsed_ms = elapsed_ms();
  result_.final_topology_label = topology_.label();
  return std::move(result_);
}

void PlanDriver::fail(const Error& cause) { throw PlanFailure(cause, finish()); }

PlanResult plan(const TabularPomdp& model, const DiscreteBelief& b0, const RefinementSchedule& schedule,
                PlanMode mode, const PlannerOptions& options) {
  if (mode == PlanMode::Sampled) {
    const TabularSampler sampler(model);
    return plan_sampled(sampler, exact_particles(b0), schedule, options);
  }
  PlanDriver driver(model.num_actions, schedule, options, 1e-9);
  try {
    ExactAotEvaluator evaluator(model, b0, options.budget_nodes);
    for (;;) {
      const std::vector<BoundPair> bounds = evaluator.evaluate(driver.topology(), driver.active());
      const std::optional<Refinement> next = driver.advance(bounds, evaluator.frontier(), evaluator.nodes_computed());
      if (!next) break;
      evaluator.apply_refinement(*next);
    }
  } catch (const Error& e) {
    driver.fail(e);
  }
  return driver.finish();
}

PlanResult plan_full(const TabularPomdp& model, const DiscreteBelief& b0, PlanMode mode,
                     const PlannerOptions& options) {
  PlannerOptions full = options;
  full.initial = Topology::all_original();
  return plan(model, b0, RefinementSchedule{}, mode, full);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trace_csv(const PlanResult& result, bool with_timing) {
  std::string out = "iteration,action,lb,ub,pruned,identified,flipped_cum,elapsed_ms\n";
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    const IterationRecord& rec = result.trace[i];
    for (std::size_t a = 0; a < rec.bounds.size(); ++a) {
      out += std::to_string(i + 1) + ',' + std::to_string(a) + ',' + format_number(rec.bounds[a].lb) + ',' +
             format_number(rec.bounds[a].ub) + ',' + (rec.pruned[a] ? '1' : '0') + ',' +
             (rec.identified ? '1' : '0') + ',' + std::to_string(rec.flipped_cum) + ',' +
             (with_timing ? format_number(rec.elapsed_ms) : std::string("0")) + '\n';
    }
  }
  return out;
}

}  // namespace aot
