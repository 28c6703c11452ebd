// Live steering service: one simulation advanced in scaled real time, driven
// by JSON commands and observed through JSON snapshots over a WebSocket.
// Message shapes are documented in docs/protocol.md.
#ifndef COLONY_LIVE_HPP
#define COLONY_LIVE_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "colony/experiment.hpp"

namespace colony {

inline constexpr int kProtocolVersion = 1;

struct Command {
  enum class Kind { Recruit, Release, Pause, Resume, SetSpeed, Reset };
  Kind kind = Kind::Pause;
  int k = 0;
  Selection selection = Selection::Random;
  double multiplier = 1.0;
  std::uint64_t seed = 0;
  nlohmann::json id;  // echoed back in the reply when present
};

const char* to_string(Command::Kind kind);

/// Structured failure reported to the client; `code` is machine-readable.
class CommandError : public std::runtime_error {
 public:
  CommandError(std::string code, const std::string& message) : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// Parses one command frame. Throws CommandError (malformed, unsupported_version,
/// unknown_command, invalid_argument).
Command parse_command(std::string_view text);

struct RobotView {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  RobotMode::Kind mode = RobotMode::Kind::Idle;
  bool carrying = false;
  std::optional<Vec2> memory;
};

struct SourceView {
  SourceId id = 0;
  double x = 0.0;
  double y = 0.0;
};

struct Snapshot {
  std::uint64_t run = 0;  // incremented by every Reset
  std::int64_t tick = 0;
  double t = 0.0;
  double s = 0.0;
  double theta = 0.0;
  double energy = 0.0;
  int active_n = 0;
  int n_foragers = 0;
  double expected_n = 0.0;
  double p = 0.0;
  bool paused = false;
  double speed = 1.0;
  std::vector<RobotView> robots;  // active robots only
  std::vector<SourceView> sources;
};

Snapshot capture(const SimState& state, std::uint64_t run);
nlohmann::json to_json(const Snapshot& snapshot);
std::string ack_message(const Command& command, std::int64_t applied_at_tick);
std::string error_message(const std::string& code, const std::string& message, const nlohmann::json& id = nullptr);

/// The simulation owned by the service. Not thread-safe: the server's
/// simulation thread is its only caller.
class LiveSession {
 public:
  LiveSession(ScenarioConfig config, double speed);

  /// Applies a command at the current tick boundary and returns that tick.
  /// State is unchanged when CommandError is thrown.
  std::int64_t apply(const Command& command);

  /// Advances one tick unless paused. Returns whether a tick ran.
  bool advance();

  Snapshot snapshot() const;
  const SimState& state() const { return state_; }
  bool paused() const { return paused_; }
  double speed() const { return speed_; }
  std::uint64_t run() const { return run_; }

 private:
  ScenarioConfig config_;
  SimState state_;
  bool paused_ = false;
  double speed_ = 1.0;
  std::uint64_t run_ = 0;
};

struct ServeOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;
  double speed = 1.0;
  std::uint64_t seed = 1;
  double snapshot_hz = 10.0;
};

/// WebSocket front end. start() binds and spawns the network and simulation
/// threads; port() then reports the bound port (useful with port 0).
class LiveServer {
 public:
  LiveServer(ScenarioConfig config, ServeOptions options);
  ~LiveServer();
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  /// Throws std::runtime_error when the address cannot be bound.
  void start();
  void stop();
  unsigned short port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs until SIGINT/SIGTERM. Returns a process exit code.
int serve_forever(const ScenarioConfig& config, const ServeOptions& options);

}  // namespace colony

#endif  // COLONY_LIVE_HPP
