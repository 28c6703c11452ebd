// colony: command-line front end for the foraging simulator.
#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "colony/experiment.hpp"
#include "colony/live.hpp"

namespace fs = std::filesystem;
using namespace colony;

namespace {

void print_assumptions(const UtilityParams& params) {
  for (const auto& w : check_assumptions(params).warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_run(const std::string& config_path, bool builtin, std::optional<std::uint64_t> seed, std::optional<std::string> out,
            std::optional<int> replicates) {
  ScenarioConfig cfg = (builtin || config_path.empty()) ? default_scenario() : load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (out) cfg.output_dir = *out;
  if (replicates) cfg.replicates = *replicates;
  cfg.validate();
  print_assumptions(cfg.params);

  const fs::path root(cfg.output_dir);
  write_text(root / "config.json", config_to_json(cfg).dump(2) + "\n");
  int survived = 0;
  for (int r = 0; r < cfg.replicates; ++r) {
    ScenarioConfig rep = cfg;
    rep.seed = cfg.seed + std::uint64_t(r);
    const fs::path dir = cfg.replicates == 1 ? root : root / ("seed_" + std::to_string(rep.seed));
    const RunResult result = run_scenario(rep, dir);
    const RunSummary& s = result.summary;
    survived += s.survived ? 1 : 0;
    std::cout << "seed " << s.seed << ": " << (s.survived ? "survived" : "depleted") << ", min energy " << s.min_energy
              << ", deposits " << s.deposits << ", mean foragers " << s.mean_foragers << " (expected "
              << s.mean_expected_n << ") -> " << dir.string() << "\n";
  }
  if (cfg.replicates > 1) std::cout << survived << "/" << cfg.replicates << " replicates survived\n";
  return 0;
}

int cmd_sweep(double theta_min, double theta_max, int steps, int population, const UtilityParams& params,
              const std::string& out) {
  print_assumptions(params);
  const Sweep sweep = sweep_equilibrium(params, theta_min, theta_max, steps, population);
  const std::string csv = sweep_csv(sweep);
  if (out.empty() || out == "-")
    std::cout << csv;
  else
    write_text(out, csv);
  std::cerr << "mixed band: (" << sweep.band_low << ", " << sweep.band_high << ")\n";
  return 0;
}

void print_collapse(const CollapseReport& r, std::ostream& os) {
  os << "feedback " << to_string(r.feedback) << ": ";
  if (!r.triggered) {
    os << "no mixed idle/forager colony formed; removal never triggered\n";
    return;
  }
  os << "removed " << r.removed << " foragers at t=" << r.removal_time << " (theta " << r.theta_at_removal
     << ", empty-colony marginal utility " << r.pi_empty_at_removal << "), " << r.remaining
     << " idle robots remain; observed until t=" << r.observed_until << "; ";
  if (r.ticks_to_reforage)
    os << "foraging resumed after " << *r.ticks_to_reforage << " ticks";
  else
    os << "no robot resumed foraging";
  os << "; energy " << (r.energy_monotone ? "decayed monotonically" : "recovered") << "\n";
}

int cmd_collapse(const std::string& out, std::uint64_t seed) {
  RemovalScriptConfig positive = collapse_demo_config();
  positive.seed = seed;
  print_assumptions(positive.params);
  const CollapseReport pos = run_collapse_demo(positive);

  RemovalScriptConfig negative = positive;
  negative.params = default_params();
  const CollapseReport neg = run_removal_script(negative);

  print_collapse(pos, std::cout);
  print_collapse(neg, std::cout);
  if (!out.empty()) {
    write_text(fs::path(out) / "collapse_positive.csv", timeseries_csv(pos.series));
    write_text(fs::path(out) / "collapse_negative.csv", timeseries_csv(neg.series));
  }
  const bool ok = pos.verdict && neg.verdict;
  std::cout << "verdict: " << (ok ? "cascading failure under positive feedback, recovery under negative feedback"
                                  : "demo did not reproduce the expected contrast")
            << "\n";
  return ok ? 0 : 2;
}

int cmd_hetero(const std::vector<double>& costs, double kappa, double lambda, std::uint64_t seed) {
  HeteroConfig cfg;
  cfg.costs = costs;
  cfg.kappa = kappa;
  cfg.lambda = lambda;
  cfg.seed = seed;
  const HeteroReport report = run_heterogeneity_demo(cfg);
  std::cout << "robot,cost,crossing_theta,first_forage_time,first_forage_theta\n";
  for (const auto& r : report.robots)
    std::cout << r.id << "," << r.cost << "," << r.crossing_theta << "," << r.first_forage_time << ","
              << r.first_forage_theta << "\n";
  std::cout << "order " << (report.ordered ? "follows cost" : "VIOLATES cost order") << "\n";
  return report.ordered ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Colony foraging simulator with global-game task allocation"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run seeded scenarios and write CSV artifacts");
  std::string config_path;
  bool builtin = false;
  std::uint64_t seed = 1;
  std::string out_dir;
  int replicates = 1;
  run->add_option("--config", config_path, "JSON scenario file");
  run->add_flag("--paper-scenario", builtin, "Use the built-in 12-robot removal scenario");
  auto* seed_opt = run->add_option("--seed", seed, "Global seed");
  auto* out_opt = run->add_option("--out", out_dir, "Output directory");
  auto* rep_opt = run->add_option("--replicates", replicates, "Number of seeds (seed, seed+1, ...)")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Tabulate the equilibrium over theta");
  double theta_min = 0.0, theta_max = 1.0;
  int steps = 100, population = 12;
  UtilityParams sweep_params = default_params();
  std::string feedback = "negative";
  std::string sweep_out;
  sweep->add_option("--theta-min", theta_min)->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--theta-max", theta_max)->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--steps", steps)->check(CLI::PositiveNumber);
  sweep->add_option("--population", population, "Population N for the finite threshold")->check(CLI::PositiveNumber);
  sweep->add_option("--c-a", sweep_params.c_a);
  sweep->add_option("--kappa", sweep_params.kappa);
  sweep->add_option("--lambda", sweep_params.lambda);
  sweep->add_option("--feedback", feedback)->check(CLI::IsMember({"negative", "none"}));
  sweep->add_option("--out", sweep_out, "CSV path (default stdout)");

  auto* collapse = app.add_subcommand("collapse-demo", "Remove all foragers under positive and negative feedback");
  std::string collapse_out;
  std::uint64_t collapse_seed = 7;
  collapse->add_option("--out", collapse_out, "Directory for the two time-series CSVs");
  collapse->add_option("--seed", collapse_seed);

  auto* hetero = app.add_subcommand("hetero-demo", "First-forage order of robots with different costs");
  std::vector<double> costs{0.9, 1.0, 1.1};
  double h_kappa = 0.25, h_lambda = 0.05;
  std::uint64_t h_seed = 11;
  hetero->add_option("--costs", costs, "Per-robot foraging costs")->delimiter(',');
  hetero->add_option("--kappa", h_kappa);
  hetero->add_option("--lambda", h_lambda);
  hetero->add_option("--seed", h_seed);

  auto* serve = app.add_subcommand("serve", "Run a live simulation behind a WebSocket endpoint");
  ServeOptions serve_opts;
  std::string serve_config;
  serve->add_option("--port", serve_opts.port)->check(CLI::Range(0, 65535));
  serve->add_option("--bind", serve_opts.address);
  serve->add_option("--speed", serve_opts.speed, "Simulated seconds per wall-clock second")->check(CLI::PositiveNumber);
  serve->add_option("--seed", serve_opts.seed);
  serve->add_option("--config", serve_config, "JSON scenario file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run)
      return cmd_run(config_path, builtin, seed_opt->count() ? std::optional(seed) : std::nullopt,
                     out_opt->count() ? std::optional(out_dir) : std::nullopt,
                     rep_opt->count() ? std::optional(replicates) : std::nullopt);
    if (*sweep) {
      sweep_params.feedback = parse_feedback(feedback);
      validate(sweep_params);
      return cmd_sweep(theta_min, theta_max, steps, population, sweep_params, sweep_out);
    }
    if (*collapse) return cmd_collapse(collapse_out, collapse_seed);
    if (*hetero) return cmd_hetero(costs, h_kappa, h_lambda, h_seed);
    if (*serve) {
      ScenarioConfig cfg = serve_config.empty() ? default_scenario() : load_config(serve_config);
      cfg.events.clear();  // the operator drives recruitment
      return serve_forever(cfg, serve_opts);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
