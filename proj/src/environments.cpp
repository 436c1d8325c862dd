#include "aot/environments.hpp"

#include <numbers>
#include <random>

#include "aot/model_io.hpp"

namespace aot {

using nlohmann::json;

namespace {

void normalized_exponentials(Rng& rng, std::size_t n, std::vector<double>& out) {
  std::exponential_distribution<double> draw(1.0);
  const std::size_t begin = out.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(draw(rng));
    sum += out.back();
  }
  for (std::size_t i = begin; i < out.size(); ++i) out[i] /= sum;
}

}  // namespace

TabularPomdp gen_random_pomdp(const RandomPomdpSpec& spec) {
  if (spec.num_states == 0) throw Error(ErrorKind::InvalidModel, "num_states: must be positive");
  if (spec.num_actions == 0) throw Error(ErrorKind::InvalidModel, "num_actions: must be positive");
  if (spec.num_observations == 0) throw Error(ErrorKind::InvalidModel, "num_observations: must be positive");
  if (spec.horizon == 0) throw Error(ErrorKind::InvalidModel, "horizon: must be >= 1");
  if (!(spec.reward_lo <= spec.reward_hi)) throw Error(ErrorKind::InvalidModel, "reward_range: lo must not exceed hi");

  Rng rng(mix64(spec.seed));
  TabularPomdp m;
  m.num_states = spec.num_states;
  m.num_actions = spec.num_actions;
  m.num_observations = spec.num_observations;
  m.horizon = spec.horizon;
  m.transition.reserve(m.num_actions * m.num_states * m.num_states);
  for (std::size_t row = 0; row < m.num_actions * m.num_states; ++row) {
    normalized_exponentials(rng, m.num_states, m.transition);
  }
  m.observation.reserve(m.num_states * m.num_observations);
  for (std::size_t x = 0; x < m.num_states; ++x) normalized_exponentials(rng, m.num_observations, m.observation);
  std::uniform_real_distribution<double> reward(spec.reward_lo, spec.reward_hi);
  m.reward.reserve(m.num_states * m.num_actions);
  for (std::size_t i = 0; i < m.num_states * m.num_actions; ++i) m.reward.push_back(reward(rng));
  m.r_max = std::max(std::abs(spec.reward_lo), std::abs(spec.reward_hi));
  m.initial_belief = DiscreteBelief::uniform(m.num_states).probabilities;
  m.validate();
  return m;
}

const std::array<Vec2, 4>& BeaconWorld::actions() {
  static const std::array<Vec2, 4> moves{{{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}}};
  return moves;
}

namespace {

Vec2 vec_from_json(const json& v, const char* name) {
  if (!v.is_array() || v.size() != 2) throw Error(ErrorKind::InvalidArgument, std::string(name) + ": expected [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

json BeaconWorld::to_json() const {
  json obs = json::array();
  for (const Vec2& o : obstacles) obs.push_back({o[0], o[1]});
  json doc{{"beacon", {beacon[0], beacon[1]}},
           {"goal", {goal[0], goal[1]}},
           {"obstacles", std::move(obs)},
           {"start_mean", {start_mean[0], start_mean[1]}},
           {"start_cov_scale", start_cov_scale}};
  doc["vmax"] = vmax ? json(*vmax) : json(nullptr);
  doc["version"] = 1;
  return doc;
}

BeaconWorld BeaconWorld::from_json(const json& doc) {
  try {
    BeaconWorld w;
    w.beacon = vec_from_json(doc.at("beacon"), "beacon");
    w.goal = vec_from_json(doc.at("goal"), "goal");
    const json& obs = doc.at("obstacles");
    if (!obs.is_array() || obs.size() != 3) throw Error(ErrorKind::InvalidArgument, "obstacles: expected 3 centers");
    for (const json& o : obs) w.obstacles.push_back(vec_from_json(o, "obstacles"));
    w.start_mean = vec_from_json(doc.at("start_mean"), "start_mean");
    w.start_cov_scale = doc.at("start_cov_scale").get<double>();
    if (!(w.start_cov_scale >= 0.0)) throw Error(ErrorKind::InvalidArgument, "start_cov_scale: must be >= 0");
    if (doc.contains("vmax") && !doc.at("vmax").is_null()) w.vmax = doc.at("vmax").get<double>();
    return w;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("beacon world: ") + e.what());
  }
}

BeaconWorld BeaconWorld::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_text_file(path)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("beacon world: ") + e.what());
  }
}

BeaconWorld BeaconWorld::default_world() {
  BeaconWorld w;
  w.beacon = {2.0, 2.5};
  w.goal = {4.0, 4.0};
  w.obstacles = {{0.5, 2.8}, {3.2, 0.3}, {5.5, 2.5}};
  w.start_mean = {0.0, 0.0};
  w.start_cov_scale = 0.01;
  return w;
}

BeaconWorld BeaconWorld::seeded_layout(std::uint64_t seed) {
  Rng rng(mix64(seed ^ 0xbeac0ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  BeaconWorld w;
  const double angle = (0.15 + 0.2 * unit(rng)) * std::numbers::pi;
  const double dist = 6.0 + 2.0 * unit(rng);
  w.goal = {dist * std::cos(angle), dist * std::sin(angle)};
  w.beacon = {0.5 * w.goal[0] + (unit(rng) - 0.5), 0.5 * w.goal[1] + (unit(rng) - 0.5)};
  for (int i = 0; i < 3; ++i) {
    const double t = 0.25 + 0.5 * unit(rng);
    const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
    const double offset = side * (1.5 + unit(rng));
    w.obstacles.push_back({t * w.goal[0] - offset * std::sin(angle), t * w.goal[1] + offset * std::cos(angle)});
  }
  return w;
}

double beacon_obs_variance(const Vec2& x, const BeaconWorld& world) {
  const double d = norm(x - world.beacon);
  return d > 1.0 ? world.near_variance / d : world.near_variance;
}

double beacon_obs_loglik(const Vec2& z, const Vec2& x, const BeaconWorld& world) {
  const double var = beacon_obs_variance(x, world);
  const Vec2 mean = x - world.beacon;
  const double dx = z[0] - mean[0];
  const double dy = z[1] - mean[1];
  return -std::log(2.0 * std::numbers::pi * var) - (dx * dx + dy * dy) / (2.0 * var);
}

Vec2 beacon_sample_obs(const Vec2& x, Rng& rng, const BeaconWorld& world) {
  std::normal_distribution<double> noise(0.0, std::sqrt(beacon_obs_variance(x, world)));
  const Vec2 mean = x - world.beacon;
  const double nx = noise(rng);
  const double ny = noise(rng);
  return {mean[0] + nx, mean[1] + ny};
}

double beacon_reward(const Vec2& x, std::size_t /*action*/, const BeaconWorld& world) {
  double r = world.goal_gain / (norm(x - world.goal) + world.goal_offset);
  for (const Vec2& o : world.obstacles) {
    if (norm(x - o) <= world.obstacle_radius) {
      r += world.obstacle_penalty;
      break;
    }
  }
  return r;
}

Vec2 beacon_step(const Vec2& x, std::size_t action, Rng& rng, const BeaconWorld& world) {
  if (action >= 4) throw Error(ErrorKind::InvalidArgument, "beacon action out of range");
  const Vec2 mean = x + BeaconWorld::actions()[action];
  if (world.motion_variance <= 0.0) return mean;
  std::normal_distribution<double> noise(0.0, std::sqrt(world.motion_variance));
  const double nx = noise(rng);
  const double ny = noise(rng);
  return {mean[0] + nx, mean[1] + ny};
}

BeaconPomdp make_beacon_pomdp(const BeaconWorld& world, std::size_t horizon) {
  BeaconPomdp m;
  m.action_count = 4;
  m.horizon_length = horizon;
  m.transition_sampler = [world](const Vec2& x, std::size_t a, Rng& rng) { return beacon_step(x, a, rng, world); };
  m.observation_log_likelihood = [world](const Vec2& z, const Vec2& x) { return beacon_obs_loglik(z, x, world); };
  m.observation_sampler = [world](const Vec2& x, Rng& rng) { return beacon_sample_obs(x, rng, world); };
  m.reward_fn = [world](const Vec2& x, std::size_t a) { return beacon_reward(x, a, world); };
  m.initial_state_sampler = [world](Rng& rng) {
    if (world.start_cov_scale <= 0.0) return world.start_mean;
    std::normal_distribution<double> noise(0.0, std::sqrt(world.start_cov_scale));
    const double nx = noise(rng);
    const double ny = noise(rng);
    return Vec2{world.start_mean[0] + nx, world.start_mean[1] + ny};
  };
  return m;
}

ParticleBelief<Vec2> beacon_start_belief(const BeaconWorld& world, std::size_t count, Rng& rng) {
  const BeaconPomdp m = make_beacon_pomdp(world, 1);
  ParticleBelief<Vec2> out;
  out.weights.assign(count, 1.0);
  for (std::size_t i = 0; i < count; ++i) out.particles.push_back(m.initial_state_sampler(rng));
  return out;
}

}  // namespace aot
