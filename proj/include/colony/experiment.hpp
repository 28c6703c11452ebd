// Scenario configuration, seeded runs, analysis sweeps and demos.
#ifndef COLONY_EXPERIMENT_HPP
#define COLONY_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "colony/world.hpp"

namespace colony {

struct ScenarioConfig {
  WorldConfig world;
  UtilityParams params = default_params();
  std::vector<double> costs;  // per-robot c_a overrides, by robot id
  std::uint64_t seed = 1;
  double horizon = 1800.0;
  std::vector<ScriptedEvent> events{{900.0, ScriptedEvent::Kind::Recruit, 6, Selection::Random}};
  std::string output_dir = "out";
  int replicates = 1;

  void validate() const;
  std::int64_t ticks() const;
};

/// The colony experiment: 12 robots, 1800 s, half recruited at t = 900 s.
ScenarioConfig default_scenario();

/// Parses a JSON document; missing keys keep their default_scenario() defaults.
ScenarioConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ScenarioConfig& config);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Raised for unreadable or unwritable files, with the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunSummary {
  std::uint64_t seed = 0;
  std::int64_t ticks = 0;
  double min_energy = 0.0;
  double final_energy = 0.0;
  bool survived = true;  // colony energy stayed above zero
  std::optional<double> depletion_time;
  int deposits = 0;
  int safety_faults = 0;
  double mean_foragers = 0.0;
  double mean_expected_n = 0.0;
  double min_separation = std::numeric_limits<double>::infinity();
  double max_radius = 0.0;
  // Ledger terms over the run: energy_end - energy_start = deposit_credit - trickle - clamp_loss.
  double energy_start = 0.0;
  double deposit_credit = 0.0;
  double trickle = 0.0;
  double clamp_loss = 0.0;
};

struct RunResult {
  std::vector<TickRecord> series;
  std::vector<Event> events;
  RunSummary summary;
};

/// Runs one replicate in memory.
RunResult simulate(const ScenarioConfig& config);

std::string timeseries_csv(const std::vector<TickRecord>& series);
std::string events_csv(const std::vector<Event>& events);
nlohmann::json summary_json(const RunSummary& summary);

/// Runs one replicate and writes timeseries.csv, events.csv and summary.json
/// into `dir`.
RunResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& dir);

struct SweepRow {
  double theta = 0.0;
  Regime regime = Regime::DominantIdle;
  double expected_n = 0.0;      // infinite when foraging dominates
  double finite_threshold = 0.0;  // forage-dominance threshold for the given population
  double pi_empty = 0.0;        // marginal utility with no other foragers
  double pi_saturated = 0.0;    // limit with unboundedly many foragers
};

struct Sweep {
  double band_low = 0.0;
  double band_high = 0.0;
  std::vector<SweepRow> rows;
};

/// Tabulates the equilibrium over an evenly spaced urgency grid.
Sweep sweep_equilibrium(const UtilityParams& params, double theta_min, double theta_max, int steps, int population);
std::string sweep_csv(const Sweep& sweep);

struct RemovalScriptConfig {
  WorldConfig world;
  UtilityParams params;
  std::uint64_t seed = 7;
  double search_horizon = 1500.0;  // seconds to wait for a mixed idle/forager colony
  double observe = 300.0;          // seconds observed after the removal
};

struct CollapseReport {
  Feedback feedback = Feedback::Positive;
  bool triggered = false;
  double removal_time = 0.0;
  double theta_at_removal = 0.0;
  double pi_empty_at_removal = 0.0;
  double dominance_threshold = 0.0;  // urgency at which foraging dominates an empty colony
  int removed = 0;
  int remaining = 0;
  double observed_until = 0.0;
  int foragers_at_end = 0;
  bool new_foragers = false;
  bool energy_monotone = false;
  std::optional<std::int64_t> ticks_to_reforage;
  bool verdict = false;
  double min_separation = std::numeric_limits<double>::infinity();
  double max_radius = 0.0;
  std::vector<TickRecord> series;
};

/// Defaults for the collapse demo: a positive-feedback mechanism whose empty
/// colony only forages once theta exceeds about 0.87.
RemovalScriptConfig collapse_demo_config();

/// Establishes foragers, removes every forager as soon as some robots are
/// idle, then watches whether the idle robots take over. Works for either
/// feedback sign; the verdict differs.
CollapseReport run_removal_script(const RemovalScriptConfig& config);

/// Positive-feedback removal script. Rejects other feedback modes.
CollapseReport run_collapse_demo(const RemovalScriptConfig& config);

struct HeteroConfig {
  std::vector<double> costs{0.9, 1.0, 1.1};
  double kappa = 0.25;
  double lambda = 0.05;
  double theta_rate = 0.001;  // urgency increase per second (trickle / capacity)
  double dt = 0.1;
  std::uint64_t seed = 11;
};

struct HeteroRobot {
  int id = 0;
  double cost = 0.0;
  double crossing_theta = 0.0;  // zero of the marginal utility with no other foragers
  double first_forage_time = std::numeric_limits<double>::infinity();
  double first_forage_theta = std::numeric_limits<double>::infinity();
};

struct HeteroReport {
  std::vector<HeteroRobot> robots;
  bool ordered = false;  // first-forage times non-decreasing in cost
};

/// Ramps the urgency from 0 to 1 and records when each robot first forages.
HeteroReport run_heterogeneity_demo(const HeteroConfig& config);

void write_text(const std::filesystem::path& path, const std::string& contents);

}  // namespace colony

#endif  // COLONY_EXPERIMENT_HPP
