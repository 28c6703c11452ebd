// Per-robot switching between idle and foraging with action hysteresis.
#ifndef COLONY_POLICY_HPP
#define COLONY_POLICY_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

#include "colony/mechanism.hpp"

namespace colony {

using SourceId = std::uint64_t;

class InvalidTransition : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class RobotMode {
 public:
  enum class Kind { Idle, ForagingSearch, ForagingReturn };

  static RobotMode idle() { return RobotMode(Kind::Idle, std::nullopt); }
  static RobotMode searching() { return RobotMode(Kind::ForagingSearch, std::nullopt); }
  static RobotMode returning(SourceId source) { return RobotMode(Kind::ForagingReturn, source); }

  Kind kind() const { return kind_; }
  std::optional<SourceId> carried_source() const { return carried_; }
  bool is_idle() const { return kind_ == Kind::Idle; }
  bool is_foraging() const { return kind_ != Kind::Idle; }

  friend bool operator==(const RobotMode&, const RobotMode&) = default;

 private:
  RobotMode(Kind kind, std::optional<SourceId> carried) : kind_(kind), carried_(carried) {}

  Kind kind_;
  std::optional<SourceId> carried_;
};

const char* to_string(RobotMode::Kind kind);

/// Shared tick-start information every idle robot decides against.
struct DecisionContext {
  Theta theta;
  int n_star = 0;    // robots currently foraging
  int n_active = 0;  // active population N

  DecisionContext() = default;
  DecisionContext(Theta theta, int n_star, int n_active);
};

using Rng = std::mt19937_64;

/// Samples the mixed strategy once. Returns ForagingSearch on success, Idle
/// otherwise. `cost` overrides params.c_a for heterogeneous robots.
RobotMode decide_idle(const DecisionContext& ctx, const UtilityParams& params, double cost, Rng& rng);
RobotMode decide_idle(const DecisionContext& ctx, const UtilityParams& params, Rng& rng);

/// Probability used by decide_idle for this context.
double decision_probability(const DecisionContext& ctx, const UtilityParams& params, double cost);

RobotMode on_pickup(const RobotMode& mode, SourceId source);

/// The only way out of a foraging mode.
RobotMode on_deposit(const RobotMode& mode);

}  // namespace colony

#endif  // COLONY_POLICY_HPP
