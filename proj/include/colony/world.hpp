// Colony foraging world: state, kinematics, sensing, energy and recruitment.
#ifndef COLONY_WORLD_HPP
#define COLONY_WORLD_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "colony/mechanism.hpp"
#include "colony/policy.hpp"
#include "colony/safety.hpp"

namespace colony {

struct WorldConfig {
  double domain_radius = 30.0;
  double colony_radius = 3.0;
  int n_robots = 12;
  int n_sources = 6;
  double sensing_horizon = 5.0;
  double trickle_rate = 0.1;  // units/s lost by the colony
  double move_rate = 0.01;    // units/s consumed by a moving robot
  double source_value = 5.0;
  double capacity = 100.0;
  double initial_energy = 50.0;
  double v_max = 1.0;
  double dt = 0.1;
  double memory_noise_scale = 0.05;
  double pickup_radius = 0.5;
  double source_r_min = 6.0;
  double source_r_max = 27.0;
  double collision_radius = 0.25;
  double barrier_gain = 1.0;
  // When false idle robots never start foraging.
  bool foraging_enabled = true;

  /// Throws std::invalid_argument on inconsistent geometry or rates.
  void validate() const;
  SafetyConfig safety() const { return {collision_radius, domain_radius, barrier_gain, v_max}; }
};

struct Robot {
  int id = 0;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();  // last commanded (filtered) velocity
  RobotMode mode = RobotMode::idle();
  std::optional<Vec2> memory;
  Vec2 carried_from = Vec2::Zero();  // pickup location of the carried source
  double consumed = 0.0;
  double cost = 1.0;
  bool active = true;
  Rng rng;
};

struct Colony {
  double energy = 0.0;
};

struct EnergySource {
  SourceId id = 0;
  Vec2 position = Vec2::Zero();
  int slice = 0;
};

enum class Selection { Random, IdleFirst, ForagersFirst };
Selection parse_selection(const std::string& name);
const char* to_string(Selection s);

struct ScriptedEvent {
  enum class Kind { Recruit, Release };
  double time = 0.0;
  Kind kind = Kind::Recruit;
  int count = 0;
  Selection selection = Selection::Random;
};

enum class EventType { Decision, Pickup, Deposit, Recruit, Release, Depletion, SafetyFault };
const char* to_string(EventType t);

struct Event {
  std::int64_t tick = 0;
  double t = 0.0;
  EventType type = EventType::Decision;
  int robot = -1;
  Vec2 position = Vec2::Zero();
  double theta = 0.0;
  int n_star = 0;
  // Decision: forage probability. Deposit: net energy credited to the colony.
  double value = 0.0;
};

/// Per-tick diagnostics, captured after the idle robots have decided.
struct TickRecord {
  std::int64_t tick = 0;
  double t = 0.0;
  double s = 0.0;
  double theta = 0.0;
  double energy = 0.0;
  double total_j = 0.0;  // colony energy plus energy consumed by active foragers
  int n_foragers = 0;
  double expected_n = 0.0;  // clamped to [0, active_n]
  double p = 0.0;
  int active_n = 0;
};

class InsufficientRobots : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoneAvailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimState {
  WorldConfig config;
  UtilityParams params;
  std::uint64_t seed = 0;
  std::int64_t tick = 0;
  Colony colony;
  std::vector<Robot> robots;
  std::vector<EnergySource> sources;
  std::vector<ScriptedEvent> script;
  std::size_t next_scripted = 0;
  Rng source_rng;
  Rng script_rng;
  SourceId next_source_id = 0;
  std::vector<Event> log;
  bool depleted = false;
  // Energy discarded (positive) or created (negative) by clamping to [0, capacity].
  double clamp_loss = 0.0;
  double min_separation = std::numeric_limits<double>::infinity();
  double max_radius = 0.0;

  double clock() const { return double(tick) * config.dt; }
};

/// Deterministic stream for (seed, stream id, purpose tag).
Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag);

/// Fresh world: robots idle on a ring inside the colony, one source per slice.
SimState make_world(const WorldConfig& config, const UtilityParams& params, std::uint64_t seed,
                    std::vector<ScriptedEvent> script = {});

struct Signal {
  double s;
  Theta theta;
};
Signal signal(const SimState& state);

int active_count(const SimState& state);
int forager_count(const SimState& state);
DecisionContext decision_context(const SimState& state);

EnergySource spawn_source(int slice, const WorldConfig& config, Rng& rng, SourceId id);

/// Velocity the robot's behavior asks for. Searching robots may refresh their
/// random-walk memory point, so the robot is updated in place.
Vec2 desired_velocity(Robot& robot, const WorldConfig& config, std::span<const EnergySource> sources);

/// Memory handling at deposit: cleared when the robot goes idle, otherwise the
/// source position perturbed by Gaussian noise proportional to its range.
void memory_update(Robot& robot, const Vec2& source_position, bool will_continue, const WorldConfig& config);

/// Advances the world by one tick and returns its diagnostics.
TickRecord step(SimState& state);

/// Removes `k` active robots. Throws InsufficientRobots when k exceeds the active count.
void recruit(SimState& state, int k, Selection selection);

/// Returns `k` inactive robots to the colony edge, idle. Throws NoneAvailable.
void release(SimState& state, int k);

}  // namespace colony

#endif  // COLONY_WORLD_HPP
