#pragma once

// Reference computations used only by the tests. Everything here works on
// unnormalized trajectory weights (no Bayes division), so it shares no code
// path with the library's belief updates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "aot/pomdp.hpp"
#include "aot/topology.hpp"

namespace oracle {

using aot::NodePath;
using aot::TabularPomdp;
using aot::Topology;

inline std::vector<double> push(const TabularPomdp& m, const std::vector<double>& w, std::size_t a) {
  std::vector<double> out(m.num_states, 0.0);
  for (std::size_t x = 0; x < m.num_states; ++x)
    for (std::size_t y = 0; y < m.num_states; ++y) out[y] += w[x] * m.T(a, x, y);
  return out;
}

inline double immediate(const TabularPomdp& m, const std::vector<double>& w, std::size_t a) {
  double s = 0.0;
  for (std::size_t x = 0; x < m.num_states; ++x) s += w[x] * m.r(x, a);
  return s;
}

/// P(history) * Q*(history, a) with `remaining` action layers left.
inline double q_star_weighted(const TabularPomdp& m, const std::vector<double>& w, std::size_t a,
                              std::size_t remaining) {
  double q = immediate(m, w, a);
  if (remaining == 1) return q;
  const std::vector<double> pred = push(m, w, a);
  for (std::size_t z = 0; z < m.num_observations; ++z) {
    std::vector<double> next(m.num_states);
    for (std::size_t y = 0; y < m.num_states; ++y) next[y] = pred[y] * m.O(y, z);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < m.num_actions; ++b) best = std::max(best, q_star_weighted(m, next, b, remaining - 1));
    q += best;
  }
  return q;
}

inline double q_star(const TabularPomdp& m, std::size_t a0) {
  return q_star_weighted(m, m.initial_belief, a0, m.horizon);
}

/// Observation-history policy: key is the sequence of observations so far.
using HistoryPolicy = std::map<std::vector<std::size_t>, std::size_t>;

/// Expected total reward of (a0, policy) by summing over every state and
/// observation trajectory.
inline double evaluate_history_policy(const TabularPomdp& m, std::size_t a0, const HistoryPolicy& policy) {
  double total = 0.0;
  std::function<void(std::size_t, std::size_t, double, std::vector<std::size_t>&, std::size_t)> walk =
      [&](std::size_t x, std::size_t a, double p, std::vector<std::size_t>& hist, std::size_t layer) {
        total += p * m.r(x, a);
        if (layer + 1 == m.horizon) return;
        for (std::size_t y = 0; y < m.num_states; ++y) {
          const double py = p * m.T(a, x, y);
          if (py == 0.0) continue;
          for (std::size_t z = 0; z < m.num_observations; ++z) {
            const double pz = py * m.O(y, z);
            if (pz == 0.0) continue;
            hist.push_back(z);
            walk(y, policy.at(hist), pz, hist, layer + 1);
            hist.pop_back();
          }
        }
      };
  for (std::size_t x = 0; x < m.num_states; ++x) {
    std::vector<std::size_t> hist;
    if (m.initial_belief[x] > 0.0) walk(x, a0, m.initial_belief[x], hist, 0);
  }
  return total;
}

/// Max over every deterministic observation-history policy. Exponential; for
/// tiny models only.
inline double q_star_by_policy_enumeration(const TabularPomdp& m, std::size_t a0) {
  std::vector<std::vector<std::size_t>> keys;
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> gen = [&](std::size_t len) {
    if (len > 0) keys.push_back(cur);
    if (len + 1 == m.horizon) return;
    for (std::size_t z = 0; z < m.num_observations; ++z) {
      cur.push_back(z);
      gen(len + 1);
      cur.pop_back();
    }
  };
  gen(0);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> digits(keys.size(), 0);
  for (;;) {
    HistoryPolicy policy;
    for (std::size_t i = 0; i < keys.size(); ++i) policy[keys[i]] = digits[i];
    best = std::max(best, evaluate_history_policy(m, a0, policy));
    std::size_t i = 0;
    while (i < digits.size() && ++digits[i] == m.num_actions) digits[i++] = 0;
    if (i == digits.size()) break;
  }
  return best;
}

enum class Combine { Upper, Lower };

/// P-weighted bound on the regime tree of `topo`: children of original nodes
/// take max; children of alternative nodes take max (Upper) or min (Lower).
/// Below an alternative node everything stays alternative.
inline double bound_weighted(const TabularPomdp& m, const Topology& topo, const NodePath& path,
                             const std::vector<double>& w, std::size_t a, std::size_t remaining, bool chain_original,
                             Combine mode) {
  double q = immediate(m, w, a);
  if (remaining == 1) return q;
  const NodePath prop = path.propagated(a);
  const bool original = chain_original && topo.beta(prop);
  const std::vector<double> pred = push(m, w, a);
  const std::size_t arity = original ? m.num_observations : m.num_states;
  for (std::size_t k = 0; k < arity; ++k) {
    std::vector<double> next(m.num_states, 0.0);
    if (original) {
      for (std::size_t y = 0; y < m.num_states; ++y) next[y] = pred[y] * m.O(y, k);
    } else {
      next[k] = pred[k];
    }
    double mass = 0.0;
    for (double v : next) mass += v;
    if (mass == 0.0) continue;
    const bool take_min = !original && mode == Combine::Lower;
    double pick = take_min ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < m.num_actions; ++b) {
      const double v = bound_weighted(m, topo, prop.child(k), next, b, remaining - 1, original, mode);
      pick = take_min ? std::min(pick, v) : std::max(pick, v);
    }
    q += pick;
  }
  return q;
}

inline double upper(const TabularPomdp& m, const Topology& topo, std::size_t a0) {
  return bound_weighted(m, topo, NodePath(), m.initial_belief, a0, m.horizon, true, Combine::Upper);
}

inline double lower(const TabularPomdp& m, const Topology& topo, std::size_t a0) {
  return bound_weighted(m, topo, NodePath(), m.initial_belief, a0, m.horizon, true, Combine::Lower);
}

/// Fixed-policy value on the regime tree by trajectory summation. The policy
/// is keyed by posterior node path.
inline double policy_value(const TabularPomdp& m, const Topology& topo, const std::map<NodePath, std::size_t>& policy,
                           std::size_t a0) {
  double total = 0.0;
  std::function<void(std::size_t, const NodePath&, std::size_t, double, std::size_t, bool)> walk =
      [&](std::size_t x, const NodePath& path, std::size_t a, double p, std::size_t layer, bool chain) {
        total += p * m.r(x, a);
        if (layer + 1 == m.horizon) return;
        const NodePath prop = path.propagated(a);
        const bool original = chain && topo.beta(prop);
        for (std::size_t y = 0; y < m.num_states; ++y) {
          const double py = p * m.T(a, x, y);
          if (py == 0.0) continue;
          if (original) {
            for (std::size_t z = 0; z < m.num_observations; ++z) {
              const double pz = py * m.O(y, z);
              if (pz == 0.0) continue;
              const NodePath child = prop.child(z);
              walk(y, child, policy.at(child), pz, layer + 1, true);
            }
          } else {
            const NodePath child = prop.child(y);
            walk(y, child, policy.at(child), py, layer + 1, false);
          }
        }
      };
  for (std::size_t x = 0; x < m.num_states; ++x) {
    if (m.initial_belief[x] > 0.0) walk(x, NodePath(), a0, m.initial_belief[x], 0, true);
  }
  return total;
}

/// Q_MDP by direct recursion over state trajectories (no value table).
inline double mdp_value(const TabularPomdp& m, std::size_t x, std::size_t remaining) {
  if (remaining == 0) return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < m.num_actions; ++a) {
    double q = m.r(x, a);
    for (std::size_t y = 0; y < m.num_states; ++y) {
      if (m.T(a, x, y) > 0.0) q += m.T(a, x, y) * mdp_value(m, y, remaining - 1);
    }
    best = std::max(best, q);
  }
  return best;
}

inline double qmdp(const TabularPomdp& m, std::size_t a0) {
  double q = immediate(m, m.initial_belief, a0);
  const std::vector<double> pred = push(m, m.initial_belief, a0);
  for (std::size_t y = 0; y < m.num_states; ++y) q += pred[y] * mdp_value(m, y, m.horizon - 1);
  return q;
}

/// Lowest-index argmax.
inline std::size_t argmax(const std::vector<double>& v, double tol = 0.0) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best] + tol) best = i;
  return best;
}

}  // namespace oracle
