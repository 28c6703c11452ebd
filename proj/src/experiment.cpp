#include "colony/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace colony {

namespace {

using nlohmann::json;

// Shortest round-trip representation, independent of locale.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + ": expected an object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw std::invalid_argument(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::string event_kind_name(ScriptedEvent::Kind k) { return k == ScriptedEvent::Kind::Recruit ? "recruit" : "release"; }

}  // namespace

void ScenarioConfig::validate() const {
  world.validate();
  colony::validate(params);
  if (!(horizon > 0)) throw std::invalid_argument("ScenarioConfig: horizon must be positive");
  if (replicates < 1) throw std::invalid_argument("ScenarioConfig: replicates must be at least 1");
  if (!costs.empty() && int(costs.size()) != world.n_robots)
    throw std::invalid_argument("ScenarioConfig: costs must list one value per robot");
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].time < events[i - 1].time) throw std::invalid_argument("ScenarioConfig: events must be time-ordered");
  for (const auto& e : events)
    if (e.count < 0) throw std::invalid_argument("ScenarioConfig: event counts must be non-negative");
}

std::int64_t ScenarioConfig::ticks() const { return std::llround(horizon / world.dt); }

ScenarioConfig default_scenario() { return ScenarioConfig{}; }

namespace {

ScenarioConfig parse_config(const json& doc) {
  ScenarioConfig cfg = default_scenario();
  reject_unknown(doc, {"seed", "horizon", "replicates", "output_dir", "world", "utility", "events"}, "config");
  read(doc, "seed", cfg.seed);
  read(doc, "horizon", cfg.horizon);
  read(doc, "replicates", cfg.replicates);
  read(doc, "output_dir", cfg.output_dir);

  if (doc.contains("world")) {
    const json& w = doc.at("world");
    reject_unknown(w,
                   {"domain_radius", "colony_radius", "n_robots", "n_sources", "sensing_horizon", "trickle_rate",
                    "move_rate", "source_value", "capacity", "initial_energy", "v_max", "dt", "memory_noise_scale",
                    "pickup_radius", "source_r_min", "source_r_max", "collision_radius", "barrier_gain",
                    "foraging_enabled"},
                   "config.world");
    WorldConfig& c = cfg.world;
    read(w, "domain_radius", c.domain_radius);
    read(w, "colony_radius", c.colony_radius);
    read(w, "n_robots", c.n_robots);
    read(w, "n_sources", c.n_sources);
    read(w, "sensing_horizon", c.sensing_horizon);
    read(w, "trickle_rate", c.trickle_rate);
    read(w, "move_rate", c.move_rate);
    read(w, "source_value", c.source_value);
    read(w, "capacity", c.capacity);
    read(w, "initial_energy", c.initial_energy);
    read(w, "v_max", c.v_max);
    read(w, "dt", c.dt);
    read(w, "memory_noise_scale", c.memory_noise_scale);
    read(w, "pickup_radius", c.pickup_radius);
    read(w, "source_r_min", c.source_r_min);
    read(w, "source_r_max", c.source_r_max);
    read(w, "collision_radius", c.collision_radius);
    read(w, "barrier_gain", c.barrier_gain);
    read(w, "foraging_enabled", c.foraging_enabled);
  }
  if (doc.contains("utility")) {
    const json& u = doc.at("utility");
    reject_unknown(u, {"c_a", "kappa", "lambda", "feedback", "costs"}, "config.utility");
    read(u, "c_a", cfg.params.c_a);
    read(u, "kappa", cfg.params.kappa);
    read(u, "lambda", cfg.params.lambda);
    if (u.contains("feedback")) cfg.params.feedback = parse_feedback(u.at("feedback").get<std::string>());
    read(u, "costs", cfg.costs);
  }
  if (doc.contains("events")) {
    cfg.events.clear();
    for (const json& e : doc.at("events")) {
      reject_unknown(e, {"time", "kind", "count", "selection"}, "config.events[]");
      ScriptedEvent ev;
      ev.time = e.at("time").get<double>();
      const std::string kind = e.value("kind", "recruit");
      if (kind == "recruit")
        ev.kind = ScriptedEvent::Kind::Recruit;
      else if (kind == "release")
        ev.kind = ScriptedEvent::Kind::Release;
      else
        throw std::invalid_argument("config.events[]: unknown kind '" + kind + "'");
      ev.count = e.at("count").get<int>();
      ev.selection = parse_selection(e.value("selection", "random"));
      cfg.events.push_back(ev);
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace

ScenarioConfig config_from_json(const json& doc) {
  try {
    return parse_config(doc);
  } catch (const json::exception& e) {
    // Wrong value types surface as configuration errors, like unknown keys.
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

json config_to_json(const ScenarioConfig& cfg) {
  const WorldConfig& c = cfg.world;
  json events = json::array();
  for (const auto& e : cfg.events)
    events.push_back(
        {{"time", e.time}, {"kind", event_kind_name(e.kind)}, {"count", e.count}, {"selection", to_string(e.selection)}});
  return {
      {"seed", cfg.seed},
      {"horizon", cfg.horizon},
      {"replicates", cfg.replicates},
      {"output_dir", cfg.output_dir},
      {"world",
       {{"domain_radius", c.domain_radius},
        {"colony_radius", c.colony_radius},
        {"n_robots", c.n_robots},
        {"n_sources", c.n_sources},
        {"sensing_horizon", c.sensing_horizon},
        {"trickle_rate", c.trickle_rate},
        {"move_rate", c.move_rate},
        {"source_value", c.source_value},
        {"capacity", c.capacity},
        {"initial_energy", c.initial_energy},
        {"v_max", c.v_max},
        {"dt", c.dt},
        {"memory_noise_scale", c.memory_noise_scale},
        {"pickup_radius", c.pickup_radius},
        {"source_r_min", c.source_r_min},
        {"source_r_max", c.source_r_max},
        {"collision_radius", c.collision_radius},
        {"barrier_gain", c.barrier_gain},
        {"foraging_enabled", c.foraging_enabled}}},
      {"utility",
       {{"c_a", cfg.params.c_a},
        {"kappa", cfg.params.kappa},
        {"lambda", cfg.params.lambda},
        {"feedback", to_string(cfg.params.feedback)},
        {"costs", cfg.costs}}},
      {"events", events},
  };
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config file '" + path.string() + "': " + e.what());
  }
  return config_from_json(doc);
}

RunResult simulate(const ScenarioConfig& config) {
  config.validate();
  SimState state = make_world(config.world, config.params, config.seed, config.events);
  for (std::size_t i = 0; i < config.costs.size(); ++i) state.robots[i].cost = config.costs[i];

  RunResult result;
  RunSummary& sum = result.summary;
  sum.seed = config.seed;
  sum.energy_start = state.colony.energy;
  sum.min_energy = state.colony.energy;

  const std::int64_t ticks = config.ticks();
  result.series.reserve(std::size_t(ticks));
  double forager_total = 0.0;
  double expected_total = 0.0;
  for (std::int64_t k = 0; k < ticks; ++k) {
    const TickRecord rec = step(state);
    forager_total += rec.n_foragers;
    expected_total += rec.expected_n;
    sum.min_energy = std::min(sum.min_energy, state.colony.energy);
    result.series.push_back(rec);
  }

  sum.ticks = ticks;
  sum.final_energy = state.colony.energy;
  sum.mean_foragers = ticks > 0 ? forager_total / double(ticks) : 0.0;
  sum.mean_expected_n = ticks > 0 ? expected_total / double(ticks) : 0.0;
  sum.min_separation = state.min_separation;
  sum.max_radius = state.max_radius;
  sum.trickle = double(ticks) * config.world.trickle_rate * config.world.dt;
  sum.clamp_loss = state.clamp_loss;
  for (const auto& e : state.log) {
    if (e.type == EventType::Deposit) {
      ++sum.deposits;
      sum.deposit_credit += e.value;
    } else if (e.type == EventType::Depletion) {
      sum.survived = false;
      if (!sum.depletion_time) sum.depletion_time = e.t;
    } else if (e.type == EventType::SafetyFault) {
      ++sum.safety_faults;
    }
  }
  result.events = std::move(state.log);
  return result;
}

std::string timeseries_csv(const std::vector<TickRecord>& series) {
  std::string out = "tick,t,s,theta,energy,total_j,n_foragers,expected_n,p,active_n\n";
  out.reserve(series.size() * 96);
  for (const auto& r : series) {
    out += std::to_string(r.tick) + ',' + num(r.t) + ',' + num(r.s) + ',' + num(r.theta) + ',' + num(r.energy) + ',' +
           num(r.total_j) + ',' + std::to_string(r.n_foragers) + ',' + num(r.expected_n) + ',' + num(r.p) + ',' +
           std::to_string(r.active_n) + '\n';
  }
  return out;
}

std::string events_csv(const std::vector<Event>& events) {
  std::string out = "tick,t,type,robot,x,y,theta,n_star,value\n";
  for (const auto& e : events) {
    out += std::to_string(e.tick) + ',' + num(e.t) + ',' + to_string(e.type) + ',' + std::to_string(e.robot) + ',' +
           num(e.position.x()) + ',' + num(e.position.y()) + ',' + num(e.theta) + ',' + std::to_string(e.n_star) +
           ',' + num(e.value) + '\n';
  }
  return out;
}

json summary_json(const RunSummary& s) {
  return {
      {"seed", s.seed},
      {"ticks", s.ticks},
      {"min_energy", s.min_energy},
      {"final_energy", s.final_energy},
      {"survived", s.survived},
      {"depletion_time", s.depletion_time ? json(*s.depletion_time) : json(nullptr)},
      {"deposits", s.deposits},
      {"safety_faults", s.safety_faults},
      {"mean_foragers", s.mean_foragers},
      {"mean_expected_n", s.mean_expected_n},
      {"min_separation", std::isfinite(s.min_separation) ? json(s.min_separation) : json(nullptr)},
      {"max_radius", s.max_radius},
      {"energy_start", s.energy_start},
      {"deposit_credit", s.deposit_credit},
      {"trickle", s.trickle},
      {"clamp_loss", s.clamp_loss},
  };
}

void write_text(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << contents;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

RunResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& dir) {
  RunResult result = simulate(config);
  write_text(dir / "timeseries.csv", timeseries_csv(result.series));
  write_text(dir / "events.csv", events_csv(result.events));
  write_text(dir / "summary.json", summary_json(result.summary).dump(2) + "\n");
  return result;
}

Sweep sweep_equilibrium(const UtilityParams& params, double theta_min, double theta_max, int steps, int population) {
  if (params.feedback == Feedback::Positive) throw InvalidParameter("sweep_equilibrium: positive feedback has no band");
  if (!(theta_min >= 0.0 && theta_max <= 1.0 && theta_min <= theta_max))
    throw std::invalid_argument("sweep_equilibrium: grid must lie within [0, 1]");
  if (steps < 1) throw std::invalid_argument("sweep_equilibrium: need at least one step");
  if (population < 1) throw std::invalid_argument("sweep_equilibrium: population must be at least 1");

  Sweep sweep;
  std::tie(sweep.band_low, sweep.band_high) = dominance_bounds(params);
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const double value = steps == 0 ? theta_min : theta_min + (theta_max - theta_min) * double(i) / double(steps);
    const Theta theta(value);
    SweepRow row;
    row.theta = theta.value();
    row.pi_empty = marginal_utility(0.0, theta, params);
    row.pi_saturated = marginal_utility(inf, theta, params);
    if (params.feedback == Feedback::Negative) {
      const auto eq = equilibrium_foragers(theta, params);
      row.regime = eq.regime;
      row.expected_n = eq.expected_n;
      row.finite_threshold = finite_threshold(double(population), params);
    } else {
      // No feedback: the band collapses and the strategy switches at c_a - kappa.
      row.regime = theta.value() >= sweep.band_high ? Regime::DominantForage : Regime::DominantIdle;
      row.expected_n = row.regime == Regime::DominantForage ? inf : 0.0;
      row.finite_threshold = sweep.band_high;
    }
    sweep.rows.push_back(row);
  }
  return sweep;
}

std::string sweep_csv(const Sweep& sweep) {
  std::string out = "theta,regime,expected_n,finite_threshold,pi_empty,pi_saturated,band_low,band_high\n";
  for (const auto& r : sweep.rows)
    out += num(r.theta) + ',' + to_string(r.regime) + ',' + num(r.expected_n) + ',' + num(r.finite_threshold) + ',' +
           num(r.pi_empty) + ',' + num(r.pi_saturated) + ',' + num(sweep.band_low) + ',' + num(sweep.band_high) + '\n';
  return out;
}

RemovalScriptConfig collapse_demo_config() {
  RemovalScriptConfig cfg;
  cfg.params = {1.5, 0.0, 1.0, Feedback::Positive};
  cfg.world.initial_energy = 10.0;
  return cfg;
}

CollapseReport run_removal_script(const RemovalScriptConfig& config) {
  SimState state = make_world(config.world, config.params, config.seed);
  CollapseReport report;
  report.feedback = config.params.feedback;
  // Urgency at which a lone robot's marginal utility turns positive.
  report.dominance_threshold = -marginal_utility_raw(0.0, 0.0, config.params);

  const std::int64_t search_ticks = std::llround(config.search_horizon / config.world.dt);
  while (state.tick < search_ticks) {
    report.series.push_back(step(state));
    const int foragers = forager_count(state);
    if (foragers >= 1 && active_count(state) - foragers >= 1) {
      report.triggered = true;
      break;
    }
  }
  if (!report.triggered) return report;

  report.removal_time = state.clock();
  const Signal sig = signal(state);
  report.theta_at_removal = sig.theta.value();
  report.pi_empty_at_removal = marginal_utility(0.0, sig.theta, config.params);
  report.removed = forager_count(state);
  recruit(state, report.removed, Selection::ForagersFirst);
  report.remaining = active_count(state);

  const std::int64_t removal_tick = state.tick;
  const std::int64_t observe_ticks = std::llround(config.observe / config.world.dt);
  double previous_energy = state.colony.energy;
  report.energy_monotone = true;
  while (state.tick < removal_tick + observe_ticks) {
    if (config.params.feedback == Feedback::Positive && signal(state).theta.value() >= report.dominance_threshold)
      break;
    const TickRecord rec = step(state);
    report.series.push_back(rec);
    if (rec.n_foragers > 0) {
      report.new_foragers = true;
      if (!report.ticks_to_reforage) report.ticks_to_reforage = state.tick - removal_tick;
    }
    if (state.colony.energy > previous_energy || (previous_energy > 0.0 && state.colony.energy >= previous_energy))
      report.energy_monotone = false;
    previous_energy = state.colony.energy;
  }
  report.observed_until = state.clock();
  report.foragers_at_end = forager_count(state);
  report.min_separation = state.min_separation;
  report.max_radius = state.max_radius;

  if (config.params.feedback == Feedback::Positive)
    report.verdict = report.pi_empty_at_removal < 0.0 && !report.new_foragers && report.foragers_at_end == 0 &&
                     report.energy_monotone && report.remaining > 0;
  else
    report.verdict = report.ticks_to_reforage.has_value() && *report.ticks_to_reforage <= 200;
  return report;
}

CollapseReport run_collapse_demo(const RemovalScriptConfig& config) {
  if (config.params.feedback != Feedback::Positive)
    throw InvalidParameter("run_collapse_demo: requires positive-feedback parameters");
  return run_removal_script(config);
}

HeteroReport run_heterogeneity_demo(const HeteroConfig& config) {
  if (config.costs.empty()) throw std::invalid_argument("run_heterogeneity_demo: need at least one robot cost");
  if (!(config.theta_rate > 0 && config.dt > 0)) throw std::invalid_argument("run_heterogeneity_demo: bad ramp");
  const UtilityParams params{1.0, config.kappa, config.lambda, Feedback::Negative};
  validate(params);

  HeteroReport report;
  std::vector<Rng> streams;
  std::vector<RobotMode> modes;
  for (std::size_t i = 0; i < config.costs.size(); ++i) {
    HeteroRobot robot;
    robot.id = int(i);
    robot.cost = config.costs[i];
    robot.crossing_theta = config.costs[i] - config.kappa - config.lambda * std::exp(-1.0);
    report.robots.push_back(robot);
    streams.push_back(make_stream(config.seed, i, 0x68657465ULL));
    modes.push_back(RobotMode::idle());
  }

  const int population = int(config.costs.size());
  const std::int64_t ticks = std::llround(1.0 / (config.theta_rate * config.dt));
  for (std::int64_t k = 0; k <= ticks; ++k) {
    const double t = double(k) * config.dt;
    const Theta theta(std::min(1.0, t * config.theta_rate));
    const int n_star = int(std::count_if(modes.begin(), modes.end(), [](const RobotMode& m) { return m.is_foraging(); }));
    if (n_star == population) break;
    const DecisionContext ctx(theta, n_star, population);
    for (std::size_t i = 0; i < modes.size(); ++i) {
      if (!modes[i].is_idle()) continue;
      // Foragers never return here, so the first switch is the only one.
      modes[i] = decide_idle(ctx, params, config.costs[i], streams[i]);
      if (modes[i].is_foraging()) {
        report.robots[i].first_forage_time = t;
        report.robots[i].first_forage_theta = theta.value();
      }
    }
  }

  report.ordered = true;
  for (const auto& a : report.robots)
    for (const auto& b : report.robots)
      if (a.cost < b.cost && a.first_forage_time > b.first_forage_time) report.ordered = false;
  return report;
}

}  // namespace colony
