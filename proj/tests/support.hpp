#pragma once

#include <random>
#include <vector>

#include "aot/pomdp.hpp"
#include "aot/rng.hpp"

namespace testing_support {

/// Random tabular model; roughly `sparsity` of the entries are zeroed (rows
/// keep at least one positive entry) and b0 is random, not uniform.
inline aot::TabularPomdp random_model(std::uint64_t seed, std::size_t states, std::size_t actions,
                                      std::size_t observations, std::size_t horizon, double sparsity = 0.0) {
  aot::Rng rng(aot::mix64(seed) ^ 0x7e57ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto row = [&](std::size_t n) {
    std::vector<double> r(n);
    double s = 0.0;
    for (auto& v : r) {
      v = u(rng) < sparsity ? 0.0 : u(rng) + 1e-3;
      s += v;
    }
    if (s == 0.0) {
      r[rng() % n] = 1.0;
      s = 1.0;
    }
    for (auto& v : r) v /= s;
    return r;
  };
  aot::TabularPomdp m;
  m.num_states = states;
  m.num_actions = actions;
  m.num_observations = observations;
  m.horizon = horizon;
  for (std::size_t i = 0; i < actions * states; ++i) {
    auto r = row(states);
    m.transition.insert(m.transition.end(), r.begin(), r.end());
  }
  for (std::size_t x = 0; x < states; ++x) {
    auto r = row(observations);
    m.observation.insert(m.observation.end(), r.begin(), r.end());
  }
  std::uniform_real_distribution<double> rew(-1.0, 1.0);
  for (std::size_t i = 0; i < states * actions; ++i) m.reward.push_back(rew(rng));
  m.r_max = 1.0;
  m.initial_belief = row(states);
  m.validate();
  return m;
}

/// Every action behaves the same: identical transition rows and rewards.
inline aot::TabularPomdp symmetric_model(std::uint64_t seed, std::size_t states, std::size_t actions,
                                         std::size_t observations, std::size_t horizon) {
  aot::TabularPomdp m = random_model(seed, states, 1, observations, horizon);
  aot::TabularPomdp out = m;
  out.num_actions = actions;
  out.transition.clear();
  out.reward.clear();
  for (std::size_t a = 0; a < actions; ++a) out.transition.insert(out.transition.end(), m.transition.begin(), m.transition.end());
  for (std::size_t x = 0; x < states; ++x)
    for (std::size_t a = 0; a < actions; ++a) out.reward.push_back(m.r(x, 0));
  out.validate();
  return out;
}

}  // namespace testing_support
