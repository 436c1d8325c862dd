#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "aot/error.hpp"
#include "aot/rng.hpp"

namespace aot {

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kZeroLikelihood = 1e-300;

/// Finite POMDP with dense row-stochastic tensors.
///
/// Layout: transition is [a][x][x'], observation is [x][z], reward is [x][a],
/// all flattened row-major. `horizon` counts action layers.
struct TabularPomdp {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t num_observations = 0;
  std::vector<double> transition;
  std::vector<double> observation;
  std::vector<double> reward;
  double r_max = 0.0;
  std::vector<double> initial_belief;
  std::size_t horizon = 1;

  double T(std::size_t a, std::size_t x, std::size_t next) const {
    return transition[(a * num_states + x) * num_states + next];
  }
  double O(std::size_t x, std::size_t z) const { return observation[x * num_observations + z]; }
  double r(std::size_t x, std::size_t a) const { return reward[x * num_actions + a]; }

  std::span<const double> transition_row(std::size_t a, std::size_t x) const {
    return {transition.data() + (a * num_states + x) * num_states, num_states};
  }
  std::span<const double> observation_row(std::size_t x) const {
    return {observation.data() + x * num_observations, num_observations};
  }

  /// Throws Error{InvalidModel} naming the offending field and row.
  void validate() const;
};

/// Probability vector over the states of a tabular model.
struct DiscreteBelief {
  std::vector<double> probabilities;

  std::size_t size() const { return probabilities.size(); }
  double operator[](std::size_t x) const { return probabilities[x]; }

  static DiscreteBelief point_mass(std::size_t num_states, std::size_t x);
  static DiscreteBelief uniform(std::size_t num_states);

  bool on_simplex(double tol = kSimplexTolerance) const;
};

/// Augmented observation: an original-space observation or a revealed state.
struct OriginalObs {
  std::size_t z;
};
struct RevealedState {
  std::size_t x;
};
using AugObservation = std::variant<OriginalObs, RevealedState>;

DiscreteBelief propagate(const DiscreteBelief& belief, std::size_t action, const TabularPomdp& model);

DiscreteBelief bayes_update_original(const DiscreteBelief& propagated, std::size_t z,
                                     const TabularPomdp& model);

DiscreteBelief bayes_update_alternative(const DiscreteBelief& propagated, std::size_t revealed);

/// `original` is the regime bit of the propagated node (true: original space).
DiscreteBelief augmented_update(const DiscreteBelief& belief, std::size_t action,
                                const AugObservation& obs, bool original,
                                const TabularPomdp& model);

double belief_reward(const DiscreteBelief& belief, std::size_t action, const TabularPomdp& model);

/// Weighted state samples. Weights are unnormalized.
template <typename State>
struct ParticleBelief {
  std::vector<State> particles;
  std::vector<double> weights;

  std::size_t size() const { return particles.size(); }

  static ParticleBelief single(State s) { return ParticleBelief{{std::move(s)}, {1.0}}; }

  double total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }
};

/// Interface consumed by the particle operations and the sparse estimator.
template <typename M>
concept SamplingModel = requires(const M& m, const typename M::State& s,
                                 const typename M::Observation& z, std::size_t a, Rng& rng) {
  typename M::State;
  typename M::Observation;
  { m.num_actions() } -> std::convertible_to<std::size_t>;
  { m.horizon() } -> std::convertible_to<std::size_t>;
  { m.sample_transition(s, a, rng) } -> std::convertible_to<typename M::State>;
  { m.sample_observation(s, rng) } -> std::convertible_to<typename M::Observation>;
  { m.obs_log_likelihood(z, s) } -> std::convertible_to<double>;
  { m.reward(s, a) } -> std::convertible_to<double>;
};

/// Sampler/likelihood model for continuous problems.
template <typename StateT, typename ObservationT>
struct GenerativePomdp {
  using State = StateT;
  using Observation = ObservationT;

  std::size_t action_count = 0;
  std::size_t horizon_length = 1;
  std::function<State(const State&, std::size_t, Rng&)> transition_sampler;
  std::function<double(const Observation&, const State&)> observation_log_likelihood;
  std::function<Observation(const State&, Rng&)> observation_sampler;
  std::function<double(const State&, std::size_t)> reward_fn;
  std::function<State(Rng&)> initial_state_sampler;

  std::size_t num_actions() const { return action_count; }
  std::size_t horizon() const { return horizon_length; }
  State sample_transition(const State& s, std::size_t a, Rng& rng) const {
    return transition_sampler(s, a, rng);
  }
  Observation sample_observation(const State& s, Rng& rng) const {
    return observation_sampler(s, rng);
  }
  double obs_log_likelihood(const Observation& z, const State& s) const {
    return observation_log_likelihood(z, s);
  }
  double reward(const State& s, std::size_t a) const { return reward_fn(s, a); }
};

/// Sampling view over a tabular model. Keeps one sampler per transition and
/// observation row; the model must outlive the sampler.
class TabularSampler {
 public:
  using State = std::size_t;
  using Observation = std::size_t;

  explicit TabularSampler(const TabularPomdp& model);

  const TabularPomdp& model() const { return *model_; }
  std::size_t num_actions() const { return model_->num_actions; }
  std::size_t horizon() const { return model_->horizon; }

  State sample_transition(State x, std::size_t a, Rng& rng) const {
    return transition_rows_[a * model_->num_states + x](rng);
  }
  Observation sample_observation(State x, Rng& rng) const { return observation_rows_[x](rng); }
  double obs_log_likelihood(Observation z, State x) const { return std::log(model_->O(x, z)); }
  double reward(State x, std::size_t a) const { return model_->r(x, a); }

  State sample_initial(Rng& rng) const { return initial_(rng); }

 private:
  const TabularPomdp* model_;
  mutable std::vector<std::discrete_distribution<std::size_t>> transition_rows_;
  mutable std::vector<std::discrete_distribution<std::size_t>> observation_rows_;
  mutable std::discrete_distribution<std::size_t> initial_;
};

// ---------------------------------------------------------------------------
// Particle operations

template <typename State>
void require_nondegenerate(const ParticleBelief<State>& belief) {
  if (belief.particles.size() != belief.weights.size()) {
    throw Error(ErrorKind::InvalidArgument, "particle and weight lists differ in length");
  }
  const bool any_positive =
      std::any_of(belief.weights.begin(), belief.weights.end(), [](double w) { return w > 0.0; });
  if (!any_positive) throw Error(ErrorKind::DegenerateWeights, "all particle weights are zero");
}

template <SamplingModel Model>
double belief_reward(const ParticleBelief<typename Model::State>& belief, std::size_t action,
                     const Model& model) {
  require_nondegenerate(belief);
  double sum = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    if (belief.weights[i] <= 0.0) continue;
    sum += belief.weights[i] * model.reward(belief.particles[i], action);
    total += belief.weights[i];
  }
  return sum / total;
}

/// Index drawn proportionally to the weights.
template <typename State>
std::size_t sample_index(const ParticleBelief<State>& belief, Rng& rng) {
  if (belief.size() == 1) return 0;
  std::discrete_distribution<std::size_t> pick(belief.weights.begin(), belief.weights.end());
  return pick(rng);
}

/// Bootstrap resample by weight, then push every draw through the transition.
template <SamplingModel Model>
ParticleBelief<typename Model::State> particle_propagate(
    const ParticleBelief<typename Model::State>& belief, std::size_t action, const Model& model,
    std::size_t count, Rng& rng) {
  if (count == 0) throw Error(ErrorKind::InvalidArgument, "particle count must be >= 1");
  require_nondegenerate(belief);
  ParticleBelief<typename Model::State> out;
  out.particles.reserve(count);
  out.weights.assign(count, 1.0);
  if (belief.size() == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      out.particles.push_back(model.sample_transition(belief.particles.front(), action, rng));
    }
    return out;
  }
  std::discrete_distribution<std::size_t> pick(belief.weights.begin(), belief.weights.end());
  for (std::size_t i = 0; i < count; ++i) {
    out.particles.push_back(model.sample_transition(belief.particles[pick(rng)], action, rng));
  }
  return out;
}

/// w'_i = w_i * p(z | x_i), computed in log space and rescaled by the largest
/// log-likelihood (weights are unnormalized, so the global scale is free).
template <SamplingModel Model>
ParticleBelief<typename Model::State> particle_reweight(
    const ParticleBelief<typename Model::State>& belief, const typename Model::Observation& z,
    const Model& model) {
  ParticleBelief<typename Model::State> out{belief.particles, {}};
  std::vector<double> loglik(belief.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < belief.size(); ++i) {
    loglik[i] = belief.weights[i] > 0.0 ? std::log(belief.weights[i]) +
                                              model.obs_log_likelihood(z, belief.particles[i])
                                        : -std::numeric_limits<double>::infinity();
    best = std::max(best, loglik[i]);
  }
  if (!std::isfinite(best)) {
    throw Error(ErrorKind::DegenerateWeights, "observation has zero likelihood under every particle");
  }
  out.weights.resize(belief.size());
  for (std::size_t i = 0; i < belief.size(); ++i) out.weights[i] = std::exp(loglik[i] - best);
  return out;
}

/// Draws `count` equally weighted particles from a discrete belief.
ParticleBelief<std::size_t> sample_particles(const DiscreteBelief& belief, std::size_t count,
                                             Rng& rng);

/// One particle per supported state, weighted by its probability.
ParticleBelief<std::size_t> exact_particles(const DiscreteBelief& belief);

}  // namespace aot
