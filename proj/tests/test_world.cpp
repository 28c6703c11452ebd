#include <doctest.h>

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "colony/world.hpp"

using namespace colony;

namespace {

SimState default_world(std::uint64_t seed) { return make_world(WorldConfig{}, default_params(), seed); }

double wrap_angle(double a) { return a < 0.0 ? a + 2.0 * std::numbers::pi : a; }

}  // namespace

TEST_CASE("signal is the normalized colony energy") {
  SimState state = default_world(1);
  state.colony.energy = 50.0;
  CHECK(signal(state).s == doctest::Approx(0.5));
  CHECK(signal(state).theta.value() == doctest::Approx(0.5));
  state.colony.energy = 0.0;
  CHECK(signal(state).theta.value() == 1.0);
}

TEST_CASE("fresh world") {
  const SimState state = default_world(3);
  CHECK(state.robots.size() == 12);
  CHECK(state.sources.size() == 6);
  CHECK(active_count(state) == 12);
  CHECK(forager_count(state) == 0);
  for (const auto& r : state.robots) CHECK(r.position.norm() < state.config.colony_radius);
  for (std::size_t a = 0; a < state.robots.size(); ++a)
    for (std::size_t b = a + 1; b < state.robots.size(); ++b)
      CHECK((state.robots[a].position - state.robots[b].position).norm() >= 0.5);
}

TEST_CASE("world config validation") {
  WorldConfig bad;
  bad.source_r_max = 40.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = WorldConfig{};
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_NOTHROW(WorldConfig{}.validate());
}

TEST_CASE("sources spawn inside their slice and annulus") {
  const WorldConfig config;
  Rng rng(61);
  const double width = 2.0 * std::numbers::pi / config.n_sources;
  for (int slice = 0; slice < config.n_sources; ++slice) {
    constexpr int kSpawns = 10'000;
    constexpr int kBins = 10;
    std::array<int, kBins> histogram{};
    for (int i = 0; i < kSpawns; ++i) {
      const EnergySource s = spawn_source(slice, config, rng, SourceId(i));
      const double r = s.position.norm();
      const double a = wrap_angle(std::atan2(s.position.y(), s.position.x()));
      CHECK(r >= config.source_r_min - 1e-12);
      CHECK(r <= config.source_r_max + 1e-12);
      REQUIRE(a >= slice * width - 1e-9);
      REQUIRE(a <= (slice + 1) * width + 1e-9);
      const int bin = std::clamp(int((a - slice * width) / width * kBins), 0, kBins - 1);
      ++histogram[std::size_t(bin)];
    }
    double chi2 = 0.0;
    const double expected = double(kSpawns) / kBins;
    for (int count : histogram) chi2 += (count - expected) * (count - expected) / expected;
    CHECK(chi2 < 21.666);  // 1% critical value, 9 degrees of freedom
  }
  CHECK_THROWS_AS(spawn_source(config.n_sources, config, rng, 0), std::out_of_range);
}

TEST_CASE("desired velocity by mode") {
  const WorldConfig config;
  const std::vector<EnergySource> sources{{0, Vec2(13.0, 0.0), 0}};

  Robot idle;
  idle.position = Vec2(1.0, 1.0);
  CHECK(desired_velocity(idle, config, sources) == Vec2::Zero());

  Robot carrying;
  carrying.mode = RobotMode::returning(0);
  carrying.position = Vec2(10.0, 0.0);
  CHECK((desired_velocity(carrying, config, sources) - Vec2(-1.0, 0.0)).norm() < 1e-15);

  Robot seeker;
  seeker.mode = RobotMode::searching();
  seeker.position = Vec2(10.0, 0.0);  // source 3 m away, inside the sensing horizon
  CHECK((desired_velocity(seeker, config, sources) - Vec2(1.0, 0.0)).norm() < 1e-15);

  seeker.position = Vec2(12.95, 0.0);  // close enough to land this tick
  CHECK((desired_velocity(seeker, config, sources) - Vec2(0.5, 0.0)).norm() < 1e-12);

  Robot wanderer;
  wanderer.mode = RobotMode::searching();
  wanderer.position = Vec2(-10.0, 0.0);
  wanderer.rng = Rng(7);
  const Vec2 v = desired_velocity(wanderer, config, sources);
  REQUIRE(wanderer.memory.has_value());
  CHECK((*wanderer.memory - wanderer.position).norm() == doctest::Approx(config.sensing_horizon));
  CHECK(v.norm() == doctest::Approx(1.0));
  const Vec2 remembered = *wanderer.memory;
  desired_velocity(wanderer, config, sources);
  CHECK(*wanderer.memory == remembered);  // kept until reached
}

TEST_CASE("no foraging depletes the colony at the trickle rate") {
  WorldConfig config;
  config.foraging_enabled = false;
  SimState state = make_world(config, default_params(), 1);
  while (!state.depleted && state.tick < 6000) step(state);
  REQUIRE(state.depleted);
  const auto it = std::find_if(state.log.begin(), state.log.end(),
                               [](const Event& e) { return e.type == EventType::Depletion; });
  REQUIRE(it != state.log.end());
  CHECK(std::abs(it->t - 500.0) <= config.dt);
  CHECK(forager_count(state) == 0);
}

TEST_CASE("deposit credits source value minus the robot's consumption") {
  WorldConfig config;
  config.move_rate = 0.0;
  config.trickle_rate = 0.0;
  SimState state = make_world(config, default_params(), 1);
  Robot& robot = state.robots[0];
  robot.mode = RobotMode::returning(99);
  robot.position = Vec2(1.0, 0.5);
  robot.consumed = 0.4;
  state.colony.energy = 50.0;
  step(state);
  CHECK(state.colony.energy == doctest::Approx(54.6).epsilon(1e-12));
  CHECK(robot.consumed == 0.0);
  CHECK(robot.mode.kind() != RobotMode::Kind::ForagingReturn);
  const auto deposits = std::count_if(state.log.begin(), state.log.end(),
                                      [](const Event& e) { return e.type == EventType::Deposit; });
  CHECK(deposits == 1);
}

TEST_CASE("memory noise scales with the source range") {
  WorldConfig config;
  Robot robot;
  robot.rng = Rng(67);
  constexpr int kSamples = 10'000;
  double sx = 0, sy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < kSamples; ++i) {
    memory_update(robot, Vec2(20.0, 0.0), true, config);
    REQUIRE(robot.memory.has_value());
    const double dx = robot.memory->x() - 20.0, dy = robot.memory->y();
    sx += dx, sy += dy, sxx += dx * dx, syy += dy * dy;
  }
  const double sigma_x = std::sqrt(sxx / kSamples - (sx / kSamples) * (sx / kSamples));
  const double sigma_y = std::sqrt(syy / kSamples - (sy / kSamples) * (sy / kSamples));
  CHECK(sigma_x >= 0.9);
  CHECK(sigma_x <= 1.1);
  CHECK(sigma_y >= 0.9);
  CHECK(sigma_y <= 1.1);

  memory_update(robot, Vec2(20.0, 0.0), false, config);
  CHECK_FALSE(robot.memory.has_value());

  config.memory_noise_scale = 0.0;
  memory_update(robot, Vec2(20.0, 0.0), true, config);
  CHECK(*robot.memory == Vec2(20.0, 0.0));
}

TEST_CASE("recruit and release") {
  SimState state = default_world(5);
  SUBCASE("recruit half") {
    recruit(state, 6, Selection::Random);
    CHECK(active_count(state) == 6);
    CHECK(state.sources.size() == 6);
  }
  SUBCASE("recruit everyone, then release some") {
    recruit(state, 12, Selection::Random);
    CHECK(active_count(state) == 0);
    release(state, 5);
    CHECK(active_count(state) == 5);
    for (const auto& r : state.robots)
      if (r.active) CHECK(r.mode == RobotMode::idle());
    for (std::size_t a = 0; a < state.robots.size(); ++a)
      for (std::size_t b = a + 1; b < state.robots.size(); ++b)
        if (state.robots[a].active && state.robots[b].active)
          CHECK((state.robots[a].position - state.robots[b].position).norm() >= 0.6 - 1e-9);
  }
  SUBCASE("too many leaves the state unchanged") {
    CHECK_THROWS_AS(recruit(state, 13, Selection::Random), InsufficientRobots);
    CHECK(active_count(state) == 12);
  }
  SUBCASE("release with nobody recruited") {
    CHECK_NOTHROW(release(state, 0));
    CHECK_THROWS_AS(release(state, 1), NoneAvailable);
    recruit(state, 2, Selection::Random);
    CHECK_THROWS_AS(release(state, 3), NoneAvailable);
    CHECK(active_count(state) == 10);
  }
  SUBCASE("selection policies") {
    for (int i : {1, 4, 7}) state.robots[std::size_t(i)].mode = RobotMode::searching();
    recruit(state, 3, Selection::ForagersFirst);
    for (int i : {1, 4, 7}) CHECK_FALSE(state.robots[std::size_t(i)].active);
    recruit(state, 2, Selection::IdleFirst);
    CHECK(active_count(state) == 7);
    CHECK(forager_count(state) == 0);
  }
  CHECK(parse_selection("idle_first") == Selection::IdleFirst);
  CHECK_THROWS_AS(parse_selection("oldest"), std::invalid_argument);
}

TEST_CASE("invariants over seeded runs") {
  constexpr std::int64_t kTicks = 3000;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    SimState state = make_world(WorldConfig{}, default_params(), seed,
                                {{150.0, ScriptedEvent::Kind::Recruit, 4, Selection::Random}});
    const double start = state.colony.energy;
    for (std::int64_t t = 0; t < kTicks; ++t) {
      std::vector<RobotMode> before;
      std::vector<bool> active_before;
      for (const auto& r : state.robots) before.push_back(r.mode), active_before.push_back(r.active);
      const std::size_t log_start = state.log.size();
      step(state);

      REQUIRE(state.sources.size() == 6);
      std::map<int, int> deposits;
      for (std::size_t e = log_start; e < state.log.size(); ++e)
        if (state.log[e].type == EventType::Deposit) ++deposits[state.log[e].robot];
      for (std::size_t i = 0; i < state.robots.size(); ++i) {
        const Robot& r = state.robots[i];
        if (!active_before[i] || !r.active) continue;
        // A forager only leaves its foraging mode through a deposit.
        if (before[i].is_foraging() && r.mode.is_idle()) REQUIRE(deposits.count(r.id) == 1);
        if (before[i].kind() == RobotMode::Kind::ForagingReturn && r.mode.kind() == RobotMode::Kind::ForagingSearch)
          REQUIRE(deposits.count(r.id) == 1);
      }
    }
    CHECK(state.max_radius <= state.config.domain_radius + 1e-6);
    CHECK(state.min_separation >= 2.0 * state.config.collision_radius - 0.05);

    double credited = 0.0;
    for (const auto& e : state.log)
      if (e.type == EventType::Deposit) credited += e.value;
    const double trickle = state.config.trickle_rate * state.config.dt * double(kTicks);
    CHECK(state.colony.energy - start == doctest::Approx(credited - trickle - state.clamp_loss).epsilon(1e-9));
  }
}

TEST_CASE("same seed, same trajectory") {
  SimState a = default_world(9), b = default_world(9), c = default_world(10);
  bool differs = false;
  for (int t = 0; t < 2000; ++t) {
    const TickRecord ra = step(a), rb = step(b), rc = step(c);
    REQUIRE(ra.energy == rb.energy);
    REQUIRE(ra.n_foragers == rb.n_foragers);
    differs |= ra.energy != rc.energy;
  }
  for (std::size_t i = 0; i < a.robots.size(); ++i) CHECK(a.robots[i].position == b.robots[i].position);
  CHECK(differs);
}
