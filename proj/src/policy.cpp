#include "colony/policy.hpp"

#include <string>

namespace colony {

const char* to_string(RobotMode::Kind kind) {
  switch (kind) {
    case RobotMode::Kind::Idle: return "idle";
    case RobotMode::Kind::ForagingSearch: return "searching";
    case RobotMode::Kind::ForagingReturn: return "returning";
  }
  return "?";
}

DecisionContext::DecisionContext(Theta theta_, int n_star_, int n_active_)
    : theta(theta_), n_star(n_star_), n_active(n_active_) {
  if (n_star < 0 || n_star > n_active) throw std::invalid_argument("DecisionContext: require 0 <= n_star <= n_active");
}

double decision_probability(const DecisionContext& ctx, const UtilityParams& params, double cost) {
  if (ctx.n_active < 1) return 0.0;
  return forage_probability(ctx.theta, double(ctx.n_star), double(ctx.n_active), params, cost);
}

RobotMode decide_idle(const DecisionContext& ctx, const UtilityParams& params, double cost, Rng& rng) {
  const double p = decision_probability(ctx, params, cost);
  // Always consume exactly one draw so streams stay aligned across contexts.
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return u < p ? RobotMode::searching() : RobotMode::idle();
}

RobotMode decide_idle(const DecisionContext& ctx, const UtilityParams& params, Rng& rng) {
  return decide_idle(ctx, params, params.c_a, rng);
}

RobotMode on_pickup(const RobotMode& mode, SourceId source) {
  if (mode.kind() != RobotMode::Kind::ForagingSearch)
    throw InvalidTransition(std::string("pickup requires a searching robot, mode is ") + to_string(mode.kind()));
  return RobotMode::returning(source);
}

RobotMode on_deposit(const RobotMode& mode) {
  if (mode.kind() != RobotMode::Kind::ForagingReturn)
    throw InvalidTransition(std::string("deposit requires a returning robot, mode is ") + to_string(mode.kind()));
  return RobotMode::idle();
}

}  // namespace colony
