#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"
#include "aot/pomdp.hpp"

namespace aot {

struct RandomPomdpSpec {
  std::size_t num_states = 3;
  std::size_t num_actions = 2;
  std::size_t num_observations = 20;
  std::size_t horizon = 2;
  std::uint64_t seed = 0;
  double reward_lo = 0.0;
  double reward_hi = 1.0;
};

/// Flat-Dirichlet transition and observation rows, uniform rewards, uniform b0.
TabularPomdp gen_random_pomdp(const RandomPomdpSpec& spec);

using Vec2 = std::array<double, 2>;

inline double norm(const Vec2& v) { return std::hypot(v[0], v[1]); }
inline Vec2 operator-(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a[0] + b[0], a[1] + b[1]}; }

/// 2-D navigation with a single beacon, three penalized obstacle disks and a goal.
struct BeaconWorld {
  Vec2 beacon{0.0, 0.0};
  Vec2 goal{0.0, 0.0};
  std::vector<Vec2> obstacles;
  Vec2 start_mean{0.0, 0.0};
  double start_cov_scale = 0.01;  // isotropic start covariance
  std::optional<double> vmax;

  double motion_variance = 0.01;  // Sigma_T = I/100; 0 gives noiseless motion
  double goal_gain = 50.0;
  double goal_offset = 0.001;
  double obstacle_penalty = -50.0;
  double obstacle_radius = 1.0;
  double near_variance = 0.01;

  static const std::array<Vec2, 4>& actions();

  nlohmann::json to_json() const;
  static BeaconWorld from_json(const nlohmann::json& doc);
  static BeaconWorld load(const std::filesystem::path& path);
  /// Layout shipped in config/beacon_default.json, also compiled in.
  static BeaconWorld default_world();
  /// Random layout: start near the origin, goal 6-8 units away, obstacles
  /// scattered between them.
  static BeaconWorld seeded_layout(std::uint64_t seed);
};

/// Per-axis observation variance at state x.
double beacon_obs_variance(const Vec2& x, const BeaconWorld& world);
double beacon_obs_loglik(const Vec2& z, const Vec2& x, const BeaconWorld& world);
Vec2 beacon_sample_obs(const Vec2& x, Rng& rng, const BeaconWorld& world);
double beacon_reward(const Vec2& x, std::size_t action, const BeaconWorld& world);
Vec2 beacon_step(const Vec2& x, std::size_t action, Rng& rng, const BeaconWorld& world);

using BeaconPomdp = GenerativePomdp<Vec2, Vec2>;

/// The world is captured by value.
BeaconPomdp make_beacon_pomdp(const BeaconWorld& world, std::size_t horizon);

ParticleBelief<Vec2> beacon_start_belief(const BeaconWorld& world, std::size_t count, Rng& rng);

}  // namespace aot
