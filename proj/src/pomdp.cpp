#include "aot/pomdp.hpp"

#include <sstream>

namespace aot {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ZeroLikelihood: return "ZeroLikelihood";
    case ErrorKind::DegenerateWeights: return "DegenerateWeights";
    case ErrorKind::TagMismatch: return "TagMismatch";
    case ErrorKind::NothingToFlip: return "NothingToFlip";
    case ErrorKind::MissingAssignment: return "MissingAssignment";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::MissingVmax: return "MissingVmax";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

namespace {

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorKind::InvalidModel, message); }

void check_row(std::span<const double> row, const std::string& where) {
  double sum = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || p < 0.0) invalid(where + ": negative or non-finite entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << where << ": row sums to " << sum << ", expected 1";
    invalid(os.str());
  }
}

}  // namespace

void TabularPomdp::validate() const {
  if (num_states == 0) invalid("num_states: must be positive");
  if (num_actions == 0) invalid("num_actions: must be positive");
  if (num_observations == 0) invalid("num_observations: must be positive");
  if (horizon == 0) invalid("horizon: must be >= 1");
  if (transition.size() != num_actions * num_states * num_states) {
    invalid("transition: expected shape [num_actions][num_states][num_states]");
  }
  if (observation.size() != num_states * num_observations) {
    invalid("observation: expected shape [num_states][num_observations]");
  }
  if (reward.size() != num_states * num_actions) invalid("reward: expected shape [num_states][num_actions]");
  if (initial_belief.size() != num_states) invalid("initial_belief: expected length num_states");
  for (std::size_t a = 0; a < num_actions; ++a) {
    for (std::size_t x = 0; x < num_states; ++x) {
      check_row(transition_row(a, x),
                "transition[" + std::to_string(a) + "][" + std::to_string(x) + "]");
    }
  }
  for (std::size_t x = 0; x < num_states; ++x) {
    check_row(observation_row(x), "observation[" + std::to_string(x) + "]");
  }
  if (!std::isfinite(r_max) || r_max < 0.0) invalid("r_max: must be finite and nonnegative");
  for (std::size_t x = 0; x < num_states; ++x) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      const double v = r(x, a);
      if (!std::isfinite(v) || std::abs(v) > r_max) {
        invalid("reward[" + std::to_string(x) + "]: entry exceeds r_max or is non-finite");
      }
    }
  }
  check_row(initial_belief, "initial_belief");
}

DiscreteBelief DiscreteBelief::point_mass(std::size_t num_states, std::size_t x) {
  DiscreteBelief b{std::vector<double>(num_states, 0.0)};
  b.probabilities.at(x) = 1.0;
  return b;
}

DiscreteBelief DiscreteBelief::uniform(std::size_t num_states) {
  return DiscreteBelief{std::vector<double>(num_states, 1.0 / static_cast<double>(num_states))};
}

bool DiscreteBelief::on_simplex(double tol) const {
  double sum = 0.0;
  for (double p : probabilities) {
    if (p < -tol || !std::isfinite(p)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

DiscreteBelief propagate(const DiscreteBelief& belief, std::size_t action, const TabularPomdp& model) {
  if (action >= model.num_actions) throw Error(ErrorKind::InvalidArgument, "action out of range");
  DiscreteBelief out{std::vector<double>(model.num_states, 0.0)};
  for (std::size_t x = 0; x < model.num_states; ++x) {
    const double bx = belief[x];
    if (bx == 0.0) continue;
    const auto row = model.transition_row(action, x);
    for (std::size_t next = 0; next < model.num_states; ++next) out.probabilities[next] += bx * row[next];
  }
  return out;
}

DiscreteBelief bayes_update_original(const DiscreteBelief& propagated, std::size_t z,
                                     const TabularPomdp& model) {
  if (z >= model.num_observations) throw Error(ErrorKind::InvalidArgument, "observation out of range");
  DiscreteBelief out{std::vector<double>(model.num_states, 0.0)};
  double eta = 0.0;
  for (std::size_t x = 0; x < model.num_states; ++x) {
    out.probabilities[x] = propagated[x] * model.O(x, z);
    eta += out.probabilities[x];
  }
  if (eta <= kZeroLikelihood) {
    throw Error(ErrorKind::ZeroLikelihood, "observation " + std::to_string(z) + " has zero likelihood");
  }
  for (double& p : out.probabilities) p /= eta;
  return out;
}

DiscreteBelief bayes_update_alternative(const DiscreteBelief& propagated, std::size_t revealed) {
  if (revealed >= propagated.size() || propagated[revealed] <= 0.0) {
    throw Error(ErrorKind::ZeroLikelihood,
                "revealed state " + std::to_string(revealed) + " has no propagated mass");
  }
  return DiscreteBelief::point_mass(propagated.size(), revealed);
}

DiscreteBelief augmented_update(const DiscreteBelief& belief, std::size_t action,
                                const AugObservation& obs, bool original,
                                const TabularPomdp& model) {
  if (original != std::holds_alternative<OriginalObs>(obs)) {
    throw Error(ErrorKind::TagMismatch, "observation variant contradicts the regime bit");
  }
  const DiscreteBelief predicted = propagate(belief, action, model);
  if (original) return bayes_update_original(predicted, std::get<OriginalObs>(obs).z, model);
  return bayes_update_alternative(predicted, std::get<RevealedState>(obs).x);
}

double belief_reward(const DiscreteBelief& belief, std::size_t action, const TabularPomdp& model) {
  double sum = 0.0;
  for (std::size_t x = 0; x < model.num_states; ++x) {
    if (belief[x] != 0.0) sum += belief[x] * model.r(x, action);
  }
  return sum;
}

TabularSampler::TabularSampler(const TabularPomdp& model) : model_(&model) {
  transition_rows_.reserve(model.num_actions * model.num_states);
  for (std::size_t a = 0; a < model.num_actions; ++a) {
    for (std::size_t x = 0; x < model.num_states; ++x) {
      const auto row = model.transition_row(a, x);
      transition_rows_.emplace_back(row.begin(), row.end());
    }
  }
  observation_rows_.reserve(model.num_states);
  for (std::size_t x = 0; x < model.num_states; ++x) {
    const auto row = model.observation_row(x);
    observation_rows_.emplace_back(row.begin(), row.end());
  }
  initial_ = std::discrete_distribution<std::size_t>(model.initial_belief.begin(),
                                                     model.initial_belief.end());
}

ParticleBelief<std::size_t> sample_particles(const DiscreteBelief& belief, std::size_t count,
                                             Rng& rng) {
  if (count == 0) throw Error(ErrorKind::InvalidArgument, "particle count must be >= 1");
  std::discrete_distribution<std::size_t> pick(belief.probabilities.begin(),
                                               belief.probabilities.end());
  ParticleBelief<std::size_t> out;
  out.weights.assign(count, 1.0);
  out.particles.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.particles.push_back(pick(rng));
  return out;
}

ParticleBelief<std::size_t> exact_particles(const DiscreteBelief& belief) {
  ParticleBelief<std::size_t> out;
  for (std::size_t x = 0; x < belief.size(); ++x) {
    if (belief[x] > 0.0) {
      out.particles.push_back(x);
      out.weights.push_back(belief[x]);
    }
  }
  require_nondegenerate(out);
  return out;
}

}  // namespace aot
