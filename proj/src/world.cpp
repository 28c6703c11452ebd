#include "colony/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace colony {

namespace {

constexpr std::uint64_t kRobotTag = 0x726f626f74ULL;   // "robot"
constexpr std::uint64_t kSourceTag = 0x736f75726365ULL;  // "source"
constexpr std::uint64_t kScriptTag = 0x736372697074ULL;  // "script"
constexpr double kMovingSpeed = 1e-9;

void log_event(SimState& state, EventType type, int robot, const Vec2& position, double value) {
  const Signal sig = signal(state);
  state.log.push_back({state.tick, state.clock(), type, robot, position, sig.theta.value(), forager_count(state), value});
}

void set_energy(SimState& state, double energy) {
  const double clamped = std::clamp(energy, 0.0, state.config.capacity);
  state.clamp_loss += energy - clamped;
  state.colony.energy = clamped;
}

// Point inside the colony at least `clearance` from every active robot, scanning
// rings from the edge inward.
Vec2 free_colony_spot(const SimState& state, double clearance) {
  const auto& cfg = state.config;
  const double outer = cfg.colony_radius - cfg.collision_radius;
  Vec2 fallback = Vec2::Zero();
  for (double r = outer; r > 0.0; r -= cfg.collision_radius) {
    const int slots = std::max(1, int(std::floor(2.0 * std::numbers::pi * r / clearance)));
    for (int k = 0; k < slots; ++k) {
      const double angle = 2.0 * std::numbers::pi * k / slots;
      const Vec2 candidate(r * std::cos(angle), r * std::sin(angle));
      const bool clear = std::none_of(state.robots.begin(), state.robots.end(), [&](const Robot& other) {
        return other.active && (other.position - candidate).norm() < clearance;
      });
      if (clear) return candidate;
    }
  }
  return fallback;
}

Vec2 steer_towards(const Vec2& from, const Vec2& target, const WorldConfig& cfg) {
  const Vec2 offset = target - from;
  const double dist = offset.norm();
  if (dist <= 0.0) return Vec2::Zero();
  // Land on the target instead of overshooting it.
  const double speed = std::min(cfg.v_max, dist / cfg.dt);
  return offset * (speed / dist);
}

// Memory targets are kept clear of the keep-in boundary.
Vec2 confine(const Vec2& point, const WorldConfig& cfg) {
  const double limit = cfg.domain_radius - cfg.sensing_horizon * 0.2;
  const double r = point.norm();
  return r > limit ? Vec2(point * (limit / r)) : point;
}

Vec2 random_walk_point(Robot& robot, const WorldConfig& cfg) {
  std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * std::numbers::pi);
  const double limit = cfg.domain_radius - cfg.sensing_horizon * 0.2;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double a = angle_dist(robot.rng);
    const Vec2 candidate = robot.position + cfg.sensing_horizon * Vec2(std::cos(a), std::sin(a));
    if (candidate.norm() <= limit) return candidate;
  }
  // Near the boundary every sample may land outside; step straight inward.
  const double r = robot.position.norm();
  const Vec2 inward = r > 0.0 ? Vec2(-robot.position / r) : Vec2(1.0, 0.0);
  return robot.position + cfg.sensing_horizon * inward;
}

}  // namespace

void WorldConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("WorldConfig: ") + what);
  };
  require(domain_radius > 0 && colony_radius > 0 && sensing_horizon > 0 && pickup_radius > 0 &&
              collision_radius > 0,
          "all radii must be positive");
  require(colony_radius < source_r_min && source_r_min < source_r_max && source_r_max < domain_radius,
          "require colony_radius < source_r_min < source_r_max < domain_radius");
  require(dt > 0, "dt must be positive");
  require(v_max > 0, "v_max must be positive");
  require(barrier_gain > 0, "barrier_gain must be positive");
  require(n_robots >= 0 && n_sources >= 1, "need a non-negative robot count and at least one source");
  require(capacity > 0 && initial_energy >= 0 && initial_energy <= capacity, "initial energy must lie in [0, capacity]");
  require(trickle_rate >= 0 && move_rate >= 0 && source_value >= 0, "rates must be non-negative");
  require(memory_noise_scale >= 0, "memory_noise_scale must be non-negative");
}

Selection parse_selection(const std::string& name) {
  if (name == "random") return Selection::Random;
  if (name == "idle_first") return Selection::IdleFirst;
  if (name == "foragers_first") return Selection::ForagersFirst;
  throw std::invalid_argument("unknown selection '" + name + "'");
}

const char* to_string(Selection s) {
  switch (s) {
    case Selection::Random: return "random";
    case Selection::IdleFirst: return "idle_first";
    case Selection::ForagersFirst: return "foragers_first";
  }
  return "?";
}

const char* to_string(EventType t) {
  switch (t) {
    case EventType::Decision: return "decision";
    case EventType::Pickup: return "pickup";
    case EventType::Deposit: return "deposit";
    case EventType::Recruit: return "recruit";
    case EventType::Release: return "release";
    case EventType::Depletion: return "depletion";
    case EventType::SafetyFault: return "safety_fault";
  }
  return "?";
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream), std::uint32_t(stream >> 32),
                    std::uint32_t(tag), std::uint32_t(tag >> 32)};
  return Rng(seq);
}

SimState make_world(const WorldConfig& config, const UtilityParams& params, std::uint64_t seed,
                    std::vector<ScriptedEvent> script) {
  config.validate();
  validate(params);
  std::stable_sort(script.begin(), script.end(),
                   [](const ScriptedEvent& a, const ScriptedEvent& b) { return a.time < b.time; });

  SimState state;
  state.config = config;
  state.params = params;
  state.seed = seed;
  state.colony.energy = config.initial_energy;
  state.script = std::move(script);
  state.source_rng = make_stream(seed, 0, kSourceTag);
  state.script_rng = make_stream(seed, 0, kScriptTag);

  // Idle robots start on a ring inside the colony.
  const double ring = config.colony_radius * 2.0 / 3.0;
  for (int i = 0; i < config.n_robots; ++i) {
    Robot robot;
    robot.id = i;
    robot.cost = params.c_a;
    robot.rng = make_stream(seed, std::uint64_t(i), kRobotTag);
    const double angle = 2.0 * std::numbers::pi * i / std::max(1, config.n_robots);
    robot.position = Vec2(ring * std::cos(angle), ring * std::sin(angle));
    state.robots.push_back(std::move(robot));
  }
  for (int slice = 0; slice < config.n_sources; ++slice)
    state.sources.push_back(spawn_source(slice, config, state.source_rng, state.next_source_id++));
  return state;
}

Signal signal(const SimState& state) {
  const double s = std::clamp(state.colony.energy / state.config.capacity, 0.0, 1.0);
  return {s, Theta::from_signal(s)};
}

int active_count(const SimState& state) {
  return int(std::count_if(state.robots.begin(), state.robots.end(), [](const Robot& r) { return r.active; }));
}

int forager_count(const SimState& state) {
  return int(std::count_if(state.robots.begin(), state.robots.end(),
                           [](const Robot& r) { return r.active && r.mode.is_foraging(); }));
}

DecisionContext decision_context(const SimState& state) {
  return DecisionContext(signal(state).theta, forager_count(state), active_count(state));
}

EnergySource spawn_source(int slice, const WorldConfig& config, Rng& rng, SourceId id) {
  if (slice < 0 || slice >= config.n_sources) throw std::out_of_range("spawn_source: slice index out of range");
  const double width = 2.0 * std::numbers::pi / config.n_sources;
  std::uniform_real_distribution<double> angle_dist(slice * width, (slice + 1) * width);
  std::uniform_real_distribution<double> radius_dist(config.source_r_min, config.source_r_max);
  const double angle = angle_dist(rng);
  const double radius = radius_dist(rng);
  return {id, Vec2(radius * std::cos(angle), radius * std::sin(angle)), slice};
}

Vec2 desired_velocity(Robot& robot, const WorldConfig& config, std::span<const EnergySource> sources) {
  switch (robot.mode.kind()) {
    case RobotMode::Kind::Idle:
      return Vec2::Zero();
    case RobotMode::Kind::ForagingReturn:
      return steer_towards(robot.position, Vec2::Zero(), config);
    case RobotMode::Kind::ForagingSearch:
      break;
  }

  const EnergySource* nearest = nullptr;
  double best = config.sensing_horizon;
  for (const auto& source : sources) {
    const double d = (source.position - robot.position).norm();
    if (d <= best) {
      best = d;
      nearest = &source;
    }
  }
  if (nearest) return steer_towards(robot.position, nearest->position, config);

  if (!robot.memory || (*robot.memory - robot.position).norm() <= config.pickup_radius)
    robot.memory = random_walk_point(robot, config);
  return steer_towards(robot.position, *robot.memory, config);
}

void memory_update(Robot& robot, const Vec2& source_position, bool will_continue, const WorldConfig& config) {
  if (!will_continue) {
    robot.memory.reset();
    return;
  }
  const double sigma = config.memory_noise_scale * source_position.norm();
  Vec2 noisy = source_position;
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    noisy.x() += noise(robot.rng);
    noisy.y() += noise(robot.rng);
  }
  robot.memory = confine(noisy, config);
}

TickRecord step(SimState& state) {
  const WorldConfig& cfg = state.config;

  // (1) scripted events due at this tick
  while (state.next_scripted < state.script.size() &&
         state.script[state.next_scripted].time <= state.clock() + 1e-9 * cfg.dt) {
    const ScriptedEvent ev = state.script[state.next_scripted++];
    if (ev.kind == ScriptedEvent::Kind::Recruit)
      recruit(state, std::min(ev.count, active_count(state)), ev.selection);
    else
      release(state, std::min(ev.count, int(state.robots.size()) - active_count(state)));
  }

  // (2) shared tick-start context
  const Signal sig = signal(state);
  const DecisionContext ctx = decision_context(state);

  // (3) idle robots sample against the same context
  if (cfg.foraging_enabled) {
    for (auto& robot : state.robots) {
      if (!robot.active || !robot.mode.is_idle()) continue;
      const double p = decision_probability(ctx, state.params, robot.cost);
      robot.mode = decide_idle(ctx, state.params, robot.cost, robot.rng);
      if (robot.mode.is_foraging()) {
        robot.memory.reset();
        state.log.push_back({state.tick, state.clock(), EventType::Decision, robot.id, robot.position,
                             sig.theta.value(), ctx.n_star, p});
      }
    }
  }

  TickRecord record;
  record.tick = state.tick;
  record.t = state.clock();
  record.s = sig.s;
  record.theta = sig.theta.value();
  record.energy = state.colony.energy;
  record.n_foragers = forager_count(state);
  record.active_n = ctx.n_active;
  record.total_j = state.colony.energy;
  for (const auto& robot : state.robots)
    if (robot.active && robot.mode.is_foraging()) record.total_j += robot.consumed;
  if (ctx.n_active > 0) {
    const double n_active = ctx.n_active;
    if (state.params.feedback == Feedback::Negative) {
      const auto eq = evaluate_equilibrium(sig.theta, double(ctx.n_star), n_active, state.params);
      record.expected_n = std::clamp(eq.expected_n, 0.0, n_active);
      record.p = eq.probability;
    } else {
      record.p = forage_probability(sig.theta, double(ctx.n_star), n_active, state.params);
      record.expected_n = n_active * record.p + ctx.n_star * (1.0 - record.p);
    }
  }

  // (4) desired velocities, (5) safety filter on tick-start positions
  std::vector<std::size_t> active_index;
  std::vector<Vec2> positions;
  for (std::size_t i = 0; i < state.robots.size(); ++i) {
    if (!state.robots[i].active) continue;
    active_index.push_back(i);
    positions.push_back(state.robots[i].position);
  }
  const SafetyConfig safety = cfg.safety();
  std::vector<Vec2> commanded(active_index.size(), Vec2::Zero());
  for (std::size_t k = 0; k < active_index.size(); ++k) {
    Robot& robot = state.robots[active_index[k]];
    const Vec2 desired = desired_velocity(robot, cfg, state.sources);
    const FilterResult filtered = filter_velocity<double>(k, desired, positions, safety);
    commanded[k] = filtered.velocity;
    if (!filtered.feasible) log_event(state, EventType::SafetyFault, robot.id, robot.position, 0.0);
  }

  // (6) Euler step, (7) energy accounting
  for (std::size_t k = 0; k < active_index.size(); ++k) {
    Robot& robot = state.robots[active_index[k]];
    robot.velocity = commanded[k];
    robot.position += cfg.dt * commanded[k];
    const double r = robot.position.norm();
    if (r > cfg.domain_radius) robot.position *= cfg.domain_radius / r;
    if (commanded[k].norm() > kMovingSpeed) robot.consumed += cfg.move_rate * cfg.dt;
  }
  set_energy(state, state.colony.energy - cfg.trickle_rate * cfg.dt);

  // (8) pickups; the slice is refilled immediately
  for (std::size_t k : active_index) {
    Robot& robot = state.robots[k];
    if (robot.mode.kind() != RobotMode::Kind::ForagingSearch) continue;
    auto it = std::min_element(state.sources.begin(), state.sources.end(), [&](const auto& a, const auto& b) {
      return (a.position - robot.position).squaredNorm() < (b.position - robot.position).squaredNorm();
    });
    if (it == state.sources.end() || (it->position - robot.position).norm() > cfg.pickup_radius) continue;
    robot.mode = on_pickup(robot.mode, it->id);
    robot.carried_from = it->position;
    log_event(state, EventType::Pickup, robot.id, robot.position, double(it->id));
    *it = spawn_source(it->slice, cfg, state.source_rng, state.next_source_id++);
  }

  // (9) deposits; the robot passes through idle and re-decides at once
  for (std::size_t k : active_index) {
    Robot& robot = state.robots[k];
    if (robot.mode.kind() != RobotMode::Kind::ForagingReturn) continue;
    if (robot.position.norm() > cfg.colony_radius) continue;
    const double credit = cfg.source_value - robot.consumed;
    set_energy(state, state.colony.energy + credit);
    robot.consumed = 0.0;
    robot.mode = on_deposit(robot.mode);
    log_event(state, EventType::Deposit, robot.id, robot.position, credit);

    bool continues = false;
    if (cfg.foraging_enabled) {
      const DecisionContext now = decision_context(state);
      const double p = decision_probability(now, state.params, robot.cost);
      robot.mode = decide_idle(now, state.params, robot.cost, robot.rng);
      continues = robot.mode.is_foraging();
      if (continues)
        state.log.push_back({state.tick, state.clock(), EventType::Decision, robot.id, robot.position,
                             now.theta.value(), now.n_star, p});
    }
    memory_update(robot, robot.carried_from, continues, cfg);
  }

  // (10) depletion and safety diagnostics
  if (state.colony.energy <= 0.0) {
    if (!state.depleted) log_event(state, EventType::Depletion, -1, Vec2::Zero(), 0.0);
    state.depleted = true;
  } else {
    state.depleted = false;
  }
  for (std::size_t a = 0; a < active_index.size(); ++a) {
    const Vec2& pa = state.robots[active_index[a]].position;
    state.max_radius = std::max(state.max_radius, pa.norm());
    for (std::size_t b = a + 1; b < active_index.size(); ++b)
      state.min_separation = std::min(state.min_separation, (pa - state.robots[active_index[b]].position).norm());
  }

  ++state.tick;
  return record;
}

void recruit(SimState& state, int k, Selection selection) {
  const int available = active_count(state);
  if (k < 0) throw std::invalid_argument("recruit: k must be non-negative");
  if (k > available)
    throw InsufficientRobots("recruit: requested " + std::to_string(k) + " robots but only " +
                             std::to_string(available) + " are active");
  if (k == 0) return;

  std::vector<int> order;
  for (const auto& robot : state.robots)
    if (robot.active) order.push_back(robot.id);
  switch (selection) {
    case Selection::Random:
      std::shuffle(order.begin(), order.end(), state.script_rng);
      break;
    case Selection::IdleFirst:
    case Selection::ForagersFirst: {
      const bool idle_first = selection == Selection::IdleFirst;
      std::stable_partition(order.begin(), order.end(),
                            [&](int id) { return state.robots[std::size_t(id)].mode.is_idle() == idle_first; });
      break;
    }
  }
  order.resize(std::size_t(k));
  std::sort(order.begin(), order.end());
  for (int id : order) {
    Robot& robot = state.robots[std::size_t(id)];
    log_event(state, EventType::Recruit, robot.id, robot.position, robot.mode.is_foraging() ? 1.0 : 0.0);
    // A carried source leaves with the robot; its slice was refilled at pickup.
    robot.active = false;
    robot.velocity = Vec2::Zero();
  }
}

void release(SimState& state, int k) {
  if (k < 0) throw std::invalid_argument("release: k must be non-negative");
  if (k == 0) return;
  const int inactive = int(state.robots.size()) - active_count(state);
  if (inactive == 0) throw NoneAvailable("release: no recruited robots are available");
  if (k > inactive)
    throw NoneAvailable("release: requested " + std::to_string(k) + " robots but only " + std::to_string(inactive) +
                        " are recruited");
  const double clearance = 2.0 * state.config.collision_radius + 0.1;
  int released = 0;
  for (auto& robot : state.robots) {
    if (released == k) break;
    if (robot.active) continue;
    robot.position = free_colony_spot(state, clearance);
    robot.velocity = Vec2::Zero();
    robot.mode = RobotMode::idle();
    robot.memory.reset();
    robot.consumed = 0.0;
    robot.active = true;
    log_event(state, EventType::Release, robot.id, robot.position, 0.0);
    ++released;
  }
}

}  // namespace colony
