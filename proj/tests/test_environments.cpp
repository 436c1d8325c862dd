#include <cmath>
#include <numbers>

#include "doctest.h"
#include "aot/environments.hpp"
#include "aot/model_io.hpp"

using namespace aot;

namespace {

BeaconWorld plain_world() {
  BeaconWorld w;
  w.beacon = {0.0, 0.0};
  w.goal = {0.0, 0.0};
  w.obstacles = {{10.0, 0.0}, {100.0, 100.0}, {-100.0, 100.0}};
  return w;
}

}  // namespace

TEST_CASE("random tabular models have the requested shape") {
  const TabularPomdp small = gen_random_pomdp({.num_states = 3, .num_actions = 2, .num_observations = 20, .seed = 1});
  CHECK(small.num_states == 3);
  CHECK(small.num_actions == 2);
  CHECK(small.num_observations == 20);
  CHECK(small.transition.size() == 2 * 3 * 3);
  CHECK(small.observation.size() == 3 * 20);
  const TabularPomdp big =
      gen_random_pomdp({.num_states = 1000, .num_actions = 2, .num_observations = 2000, .horizon = 3, .seed = 2});
  CHECK(big.transition.size() == 2u * 1000 * 1000);
  CHECK(big.observation.size() == 1000u * 2000);
  CHECK_NOTHROW(big.validate());
}

TEST_CASE("random tabular models are deterministic in the seed and valid") {
  const RandomPomdpSpec spec{.num_states = 4, .num_actions = 3, .num_observations = 5, .horizon = 3, .seed = 77,
                             .reward_lo = -2.0, .reward_hi = 3.0};
  const std::string a = to_json(gen_random_pomdp(spec)).dump();
  const std::string b = to_json(gen_random_pomdp(spec)).dump();
  CHECK(a == b);
  RandomPomdpSpec other = spec;
  other.seed = 78;
  CHECK(to_json(gen_random_pomdp(other)).dump() != a);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    other.seed = seed;
    const TabularPomdp m = gen_random_pomdp(other);
    CHECK_NOTHROW(m.validate());
    for (double r : m.reward) {
      CHECK(r >= -2.0);
      CHECK(r <= 3.0);
    }
    for (double p : m.initial_belief) CHECK(p == doctest::Approx(0.25));
  }
}

TEST_CASE("random tabular generator rejects bad sizes") {
  CHECK_THROWS_WITH_AS(gen_random_pomdp({.num_actions = 0}), doctest::Contains("num_actions"), Error);
  CHECK_THROWS_WITH_AS(gen_random_pomdp({.reward_lo = 1.0, .reward_hi = 0.0}), doctest::Contains("reward_range"),
                       Error);
}

TEST_CASE("beacon observation density") {
  const BeaconWorld w = plain_world();
  const Vec2 at_one{1.0, 0.0};
  CHECK(beacon_obs_variance(at_one, w) == 0.01);
  CHECK(beacon_obs_loglik(at_one - w.beacon, at_one, w) ==
        doctest::Approx(-std::log(2.0 * std::numbers::pi * 0.01)).epsilon(1e-14));
  CHECK(beacon_obs_variance({0.3, 0.4}, w) == 0.01);
  CHECK(beacon_obs_variance({0.0, 4.0}, w) == doctest::Approx(0.5 * beacon_obs_variance({0.0, 2.0}, w)));
  CHECK(beacon_obs_variance({3.0, 0.0}, w) == doctest::Approx(0.01 / 3.0));
  // Off-mode value: 2-D isotropic Gaussian with variance 0.01.
  const Vec2 z{0.05, -0.02};
  const double expected = -std::log(2.0 * std::numbers::pi * 0.01) - (0.05 * 0.05 + 0.02 * 0.02) / 0.02;
  CHECK(beacon_obs_loglik(z, {0.0, 0.0}, w) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("beacon reward") {
  BeaconWorld w = plain_world();
  w.goal = {3.0, 3.0};
  CHECK(beacon_reward({3.0, 3.0}, 0, w) == doctest::Approx(50000.0));
  // Exactly on the first obstacle's rim and 9.999 from the goal.
  w.goal = {0.0, 0.0};
  w.obstacles[0] = {9.999, 1.0};
  CHECK(beacon_reward({9.999, 0.0}, 2, w) == doctest::Approx(-45.0).epsilon(1e-12));
  // Far from everything.
  BeaconWorld far = plain_world();
  CHECK(beacon_reward({0.0, 49.999}, 1, far) == doctest::Approx(1.0).epsilon(1e-12));
  // Inside two disks at once: one penalty.
  BeaconWorld overlap = plain_world();
  overlap.goal = {0.0, 9.999};
  overlap.obstacles = {{0.5, 0.0}, {-0.5, 0.0}, {50.0, 50.0}};
  CHECK(beacon_reward({0.0, 0.0}, 0, overlap) == doctest::Approx(5.0 - 50.0).epsilon(1e-12));
  CHECK(beacon_reward({0.0, 0.0}, 0, overlap) >= -150.0 + 5.0);
  for (std::size_t a = 0; a < 4; ++a) CHECK(beacon_reward({1.0, 2.0}, a, overlap) == beacon_reward({1.0, 2.0}, 0, overlap));
}

TEST_CASE("beacon motion") {
  BeaconWorld w = plain_world();
  Rng rng(5);
  SUBCASE("noiseless variant moves exactly") {
    w.motion_variance = 0.0;
    for (std::size_t a = 0; a < 4; ++a) {
      const Vec2 next = beacon_step({0.5, -1.5}, a, rng, w);
      CHECK(next[0] == 0.5 + BeaconWorld::actions()[a][0]);
      CHECK(next[1] == -1.5 + BeaconWorld::actions()[a][1]);
    }
  }
  SUBCASE("empirical mean and variance") {
    const int n = 100000;
    double sx = 0, sy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
      const Vec2 v = beacon_step({2.0, 3.0}, 0, rng, w);
      sx += v[0];
      sy += v[1];
      sxx += v[0] * v[0];
      syy += v[1] * v[1];
    }
    const double mx = sx / n, my = sy / n;
    CHECK(std::abs(mx - 3.0) <= 0.01);
    CHECK(std::abs(my - 3.0) <= 0.01);
    CHECK(std::abs(sxx / n - mx * mx - 0.01) <= 0.001);
    CHECK(std::abs(syy / n - my * my - 0.01) <= 0.001);
  }
  SUBCASE("reproducible given the stream") {
    Rng a(9), b(9);
    for (int i = 0; i < 10; ++i) {
      CHECK(beacon_step({0, 0}, 1, a, w) == beacon_step({0, 0}, 1, b, w));
      CHECK(beacon_sample_obs({1, 2}, a, w) == beacon_sample_obs({1, 2}, b, w));
    }
  }
  CHECK_THROWS_AS(beacon_step({0, 0}, 4, rng, w), Error);
}

TEST_CASE("beacon world config") {
  const BeaconWorld shipped = BeaconWorld::load(AOT_SOURCE_DIR "/config/beacon_default.json");
  const BeaconWorld builtin = BeaconWorld::default_world();
  CHECK(shipped.to_json() == builtin.to_json());
  CHECK_FALSE(shipped.vmax.has_value());

  BeaconWorld w = builtin;
  w.vmax = 123.0;
  const BeaconWorld back = BeaconWorld::from_json(nlohmann::json::parse(w.to_json().dump()));
  CHECK(back.to_json() == w.to_json());
  CHECK(*back.vmax == 123.0);

  nlohmann::json bad = builtin.to_json();
  bad["obstacles"].erase(0);
  CHECK_THROWS_WITH_AS(BeaconWorld::from_json(bad), doctest::Contains("obstacles"), Error);
  CHECK_THROWS_AS(BeaconWorld::load("/nonexistent/world.json"), Error);
}

TEST_CASE("seeded layouts are reproducible and keep the start clear") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BeaconWorld a = BeaconWorld::seeded_layout(seed);
    CHECK(a.to_json() == BeaconWorld::seeded_layout(seed).to_json());
    CHECK(a.obstacles.size() == 3);
    CHECK(norm(a.goal) >= 6.0);
    for (const Vec2& o : a.obstacles) CHECK(norm(o) > 1.0);
  }
  CHECK(BeaconWorld::seeded_layout(1).to_json() != BeaconWorld::seeded_layout(2).to_json());
}

TEST_CASE("beacon generative model wiring") {
  const BeaconWorld w = BeaconWorld::default_world();
  const BeaconPomdp m = make_beacon_pomdp(w, 3);
  static_assert(SamplingModel<BeaconPomdp>);
  CHECK(m.num_actions() == 4);
  CHECK(m.horizon() == 3);
  CHECK(m.reward({4.0, 4.0}, 0) == beacon_reward({4.0, 4.0}, 0, w));
  Rng rng(1);
  const auto b = beacon_start_belief(w, 500, rng);
  CHECK(b.size() == 500);
  double mx = 0;
  for (const auto& p : b.particles) mx += p[0];
  CHECK(std::abs(mx / 500) < 0.03);
}
