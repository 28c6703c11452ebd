#include <algorithm>
#include <cmath>

#include "colony/live.hpp"

namespace colony {

using nlohmann::json;

const char* to_string(Command::Kind kind) {
  switch (kind) {
    case Command::Kind::Recruit: return "recruit";
    case Command::Kind::Release: return "release";
    case Command::Kind::Pause: return "pause";
    case Command::Kind::Resume: return "resume";
    case Command::Kind::SetSpeed: return "set_speed";
    case Command::Kind::Reset: return "reset";
  }
  return "?";
}

namespace {

int read_count(const json& doc) {
  if (!doc.contains("k") || !doc.at("k").is_number_integer()) throw CommandError("malformed", "field 'k' must be an integer");
  const auto k = doc.at("k").get<std::int64_t>();
  if (k < 0) throw CommandError("invalid_argument", "field 'k' must be non-negative");
  if (k > 1'000'000) throw CommandError("invalid_argument", "field 'k' is too large");
  return int(k);
}

}  // namespace

Command parse_command(std::string_view text) {
  json doc = json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) throw CommandError("malformed", "frame is not a JSON object");

  Command cmd;
  if (doc.contains("id")) cmd.id = doc.at("id");
  if (!doc.contains("v") || !doc.at("v").is_number_integer())
    throw CommandError("malformed", "missing integer protocol version 'v'");
  if (doc.at("v").get<std::int64_t>() != kProtocolVersion)
    throw CommandError("unsupported_version", "protocol version " + doc.at("v").dump() + " is not supported");
  if (!doc.contains("type") || !doc.at("type").is_string()) throw CommandError("malformed", "missing string field 'type'");

  const std::string type = doc.at("type").get<std::string>();
  if (type == "recruit") {
    cmd.kind = Command::Kind::Recruit;
    cmd.k = read_count(doc);
    if (doc.contains("selection")) {
      if (!doc.at("selection").is_string()) throw CommandError("malformed", "field 'selection' must be a string");
      try {
        cmd.selection = parse_selection(doc.at("selection").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw CommandError("invalid_argument", e.what());
      }
    }
  } else if (type == "release") {
    cmd.kind = Command::Kind::Release;
    cmd.k = read_count(doc);
  } else if (type == "pause") {
    cmd.kind = Command::Kind::Pause;
  } else if (type == "resume") {
    cmd.kind = Command::Kind::Resume;
  } else if (type == "set_speed") {
    cmd.kind = Command::Kind::SetSpeed;
    if (!doc.contains("multiplier") || !doc.at("multiplier").is_number())
      throw CommandError("malformed", "field 'multiplier' must be a number");
    cmd.multiplier = doc.at("multiplier").get<double>();
    if (!(cmd.multiplier > 0.0) || !std::isfinite(cmd.multiplier))
      throw CommandError("invalid_argument", "field 'multiplier' must be positive");
  } else if (type == "reset") {
    cmd.kind = Command::Kind::Reset;
    if (!doc.contains("seed") || !doc.at("seed").is_number_unsigned())
      throw CommandError("malformed", "field 'seed' must be a non-negative integer");
    cmd.seed = doc.at("seed").get<std::uint64_t>();
  } else {
    throw CommandError("unknown_command", "unknown command type '" + type + "'");
  }
  return cmd;
}

Snapshot capture(const SimState& state, std::uint64_t run) {
  Snapshot snap;
  snap.run = run;
  snap.tick = state.tick;
  snap.t = state.clock();
  const Signal sig = signal(state);
  snap.s = sig.s;
  snap.theta = sig.theta.value();
  snap.energy = state.colony.energy;
  snap.active_n = active_count(state);
  snap.n_foragers = forager_count(state);
  if (snap.active_n > 0) {
    const double n_active = snap.active_n;
    if (state.params.feedback == Feedback::Negative) {
      const auto eq = evaluate_equilibrium(sig.theta, double(snap.n_foragers), n_active, state.params);
      snap.expected_n = std::clamp(eq.expected_n, 0.0, n_active);
      snap.p = eq.probability;
    } else {
      snap.p = forage_probability(sig.theta, double(snap.n_foragers), n_active, state.params);
      snap.expected_n = n_active * snap.p + snap.n_foragers * (1.0 - snap.p);
    }
  }
  for (const auto& r : state.robots) {
    if (!r.active) continue;
    snap.robots.push_back({r.id, r.position.x(), r.position.y(), r.mode.kind(),
                           r.mode.kind() == RobotMode::Kind::ForagingReturn, r.memory});
  }
  for (const auto& s : state.sources) snap.sources.push_back({s.id, s.position.x(), s.position.y()});
  return snap;
}

json to_json(const Snapshot& snap) {
  json robots = json::array();
  for (const auto& r : snap.robots) {
    robots.push_back({{"id", r.id},
                      {"x", r.x},
                      {"y", r.y},
                      {"mode", to_string(r.mode)},
                      {"carrying", r.carrying},
                      {"memory", r.memory ? json::array({r.memory->x(), r.memory->y()}) : json(nullptr)}});
  }
  json sources = json::array();
  for (const auto& s : snap.sources) sources.push_back({{"id", s.id}, {"x", s.x}, {"y", s.y}});
  return {{"v", kProtocolVersion},
          {"type", "snapshot"},
          {"run", snap.run},
          {"tick", snap.tick},
          {"t", snap.t},
          {"s", snap.s},
          {"theta", snap.theta},
          {"energy", snap.energy},
          {"active_n", snap.active_n},
          {"n_foragers", snap.n_foragers},
          {"expected_n", snap.expected_n},
          {"p", snap.p},
          {"paused", snap.paused},
          {"speed", snap.speed},
          {"robots", robots},
          {"sources", sources}};
}

std::string ack_message(const Command& command, std::int64_t applied_at_tick) {
  json msg = {{"v", kProtocolVersion},
              {"type", "ack"},
              {"command", to_string(command.kind)},
              {"applied_at_tick", applied_at_tick}};
  if (!command.id.is_null()) msg["id"] = command.id;
  return msg.dump();
}

std::string error_message(const std::string& code, const std::string& message, const json& id) {
  json msg = {{"v", kProtocolVersion}, {"type", "error"}, {"code", code}, {"message", message}};
  if (!id.is_null()) msg["id"] = id;
  return msg.dump();
}

LiveSession::LiveSession(ScenarioConfig config, double speed)
    : config_(std::move(config)),
      state_(make_world(config_.world, config_.params, config_.seed, config_.events)),
      speed_(speed) {
  if (!(speed_ > 0.0)) throw std::invalid_argument("LiveSession: speed must be positive");
  for (std::size_t i = 0; i < config_.costs.size(); ++i) state_.robots[i].cost = config_.costs[i];
}

std::int64_t LiveSession::apply(const Command& command) {
  const std::int64_t at = state_.tick;
  switch (command.kind) {
    case Command::Kind::Recruit:
      try {
        recruit(state_, command.k, command.selection);
      } catch (const InsufficientRobots& e) {
        throw CommandError("insufficient_robots", e.what());
      }
      break;
    case Command::Kind::Release:
      try {
        release(state_, command.k);
      } catch (const NoneAvailable& e) {
        throw CommandError("none_available", e.what());
      }
      break;
    case Command::Kind::Pause: paused_ = true; break;
    case Command::Kind::Resume: paused_ = false; break;
    case Command::Kind::SetSpeed:
      if (!(command.multiplier > 0.0)) throw CommandError("invalid_argument", "multiplier must be positive");
      speed_ = command.multiplier;
      break;
    case Command::Kind::Reset:
      config_.seed = command.seed;
      state_ = make_world(config_.world, config_.params, config_.seed, config_.events);
      for (std::size_t i = 0; i < config_.costs.size(); ++i) state_.robots[i].cost = config_.costs[i];
      paused_ = false;
      ++run_;
      return 0;
  }
  return at;
}

bool LiveSession::advance() {
  if (paused_) return false;
  step(state_);
  // The service runs indefinitely; keep the in-memory log bounded.
  if (state_.log.size() > 100'000) state_.log.erase(state_.log.begin(), state_.log.begin() + 50'000);
  return true;
}

Snapshot LiveSession::snapshot() const {
  Snapshot snap = capture(state_, run_);
  snap.paused = paused_;
  snap.speed = speed_;
  return snap;
}

}  // namespace colony
