#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "colony/experiment.hpp"

using namespace colony;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("colony_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int count_lines(const std::string& text) { return int(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("reference scenario run") {
  const ScenarioConfig config = default_scenario();
  const RunResult result = simulate(config);
  REQUIRE(result.series.size() == 18000);
  CHECK(result.series.front().active_n == 12);
  CHECK(result.series[8999].active_n == 12);
  CHECK(result.series[9000].active_n == 6);
  CHECK(result.series.back().active_n == 6);
  for (const auto& row : result.series) {
    REQUIRE(row.expected_n >= 0.0);
    REQUIRE(row.expected_n <= row.active_n);
    REQUIRE(row.p >= 0.0);
    REQUIRE(row.p <= 1.0);
  }
  const RunSummary& s = result.summary;
  CHECK(s.final_energy - s.energy_start ==
        doctest::Approx(s.deposit_credit - s.trickle - s.clamp_loss).epsilon(1e-9));
  CHECK(s.safety_faults == 0);
  CHECK(s.deposits > 0);
}

TEST_CASE("output files are byte-identical for equal seeds") {
  ScenarioConfig config = default_scenario();
  config.seed = 4;
  const fs::path a = scratch_dir("a"), b = scratch_dir("b");
  run_scenario(config, a);
  run_scenario(config, b);
  for (const char* name : {"timeseries.csv", "events.csv", "summary.json"}) {
    CAPTURE(name);
    const std::string left = slurp(a / name);
    CHECK_FALSE(left.empty());
    CHECK(left == slurp(b / name));
  }
  const std::string series = slurp(a / "timeseries.csv");
  CHECK(series.rfind("tick,t,s,theta,energy,total_j,n_foragers,expected_n,p,active_n\n", 0) == 0);
  CHECK(count_lines(series) == 18001);
  CHECK(slurp(a / "events.csv").rfind("tick,t,type,robot,x,y,theta,n_star,value\n", 0) == 0);
  const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
  CHECK(summary.at("seed") == 4);
  CHECK(summary.contains("survived"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("no-foraging scenario depletes at 500 s") {
  ScenarioConfig config = default_scenario();
  config.world.foraging_enabled = false;
  config.events.clear();
  config.horizon = 600.0;
  const RunResult result = simulate(config);
  REQUIRE(result.summary.depletion_time.has_value());
  CHECK(std::abs(*result.summary.depletion_time - 500.0) <= config.world.dt);
  CHECK_FALSE(result.summary.survived);
}

TEST_CASE("CSV numbers use the shortest round-trip form") {
  TickRecord r;
  r.t = 0.1;
  r.theta = 1.0 / 3.0;
  const std::string csv = timeseries_csv({r});
  CHECK(csv.find(",0.1,") != std::string::npos);
  CHECK(csv.find("0.3333333333333333") != std::string::npos);
}

TEST_CASE("equilibrium sweep") {
  SUBCASE("experiment parameters") {
    const Sweep sweep = sweep_equilibrium(default_params(), 0.0, 1.0, 100, 12);
    CHECK(std::abs(sweep.band_low - (-1.27334)) < 1e-5);
    CHECK(sweep.band_high == doctest::Approx(0.75));
    REQUIRE(sweep.rows.size() == 101);
    const SweepRow& half = sweep.rows[50];
    CHECK(half.theta == doctest::Approx(0.5));
    CHECK(half.regime == Regime::Mixed);
    CHECK(half.expected_n == doctest::Approx(2.0910424533583160).epsilon(1e-12));
    CHECK(half.finite_threshold == doctest::Approx(0.7499662068320567).epsilon(1e-12));
    CHECK(sweep.rows.back().regime == Regime::DominantForage);
    const std::string csv = sweep_csv(sweep);
    CHECK(count_lines(csv) == 102);
  }
  SUBCASE("boundary parameters span the signal range") {
    const Sweep sweep = sweep_equilibrium(UtilityParams{1.0, 0.0, std::numbers::e, Feedback::Negative}, 0, 1, 10, 12);
    CHECK(std::abs(sweep.band_low) <= 1e-12);
    CHECK(sweep.band_high == 1.0);
  }
  SUBCASE("no feedback has an empty band") {
    const Sweep sweep = sweep_equilibrium(UtilityParams{1.0, 0.25, 0.0, Feedback::None}, 0, 1, 4, 12);
    CHECK(sweep.band_low == sweep.band_high);
    CHECK(sweep.rows.front().regime == Regime::DominantIdle);
    CHECK(sweep.rows.back().regime == Regime::DominantForage);
  }
  SUBCASE("invalid requests") {
    CHECK_THROWS_AS(sweep_equilibrium(default_params(), -0.1, 1.0, 10, 12), std::invalid_argument);
    CHECK_THROWS_AS(sweep_equilibrium(default_params(), 0.0, 1.1, 10, 12), std::invalid_argument);
    UtilityParams positive = default_params();
    positive.feedback = Feedback::Positive;
    CHECK_THROWS_AS(sweep_equilibrium(positive, 0.0, 1.0, 10, 12), InvalidParameter);
  }
}

TEST_CASE("collapse under positive feedback, recovery under negative") {
  const RemovalScriptConfig config = collapse_demo_config();
  const CollapseReport positive = run_collapse_demo(config);
  REQUIRE(positive.triggered);
  CHECK(positive.verdict);
  CHECK(positive.removed > 0);
  CHECK(positive.remaining > 0);
  CHECK(positive.pi_empty_at_removal < 0.0);
  CHECK(positive.foragers_at_end == 0);
  CHECK_FALSE(positive.new_foragers);
  CHECK(positive.energy_monotone);

  RemovalScriptConfig negative = config;
  negative.params = default_params();
  const CollapseReport recovered = run_removal_script(negative);
  REQUIRE(recovered.triggered);
  REQUIRE(recovered.ticks_to_reforage.has_value());
  CHECK(*recovered.ticks_to_reforage <= 200);
  CHECK(recovered.verdict);

  CHECK_THROWS_AS(run_collapse_demo(negative), InvalidParameter);
}

TEST_CASE("heterogeneous costs forage in order of cost") {
  const HeteroReport report = run_heterogeneity_demo(HeteroConfig{});
  REQUIRE(report.robots.size() == 3);
  CHECK(report.ordered);
  for (std::size_t i = 0; i + 1 < report.robots.size(); ++i)
    CHECK(report.robots[i].first_forage_time < report.robots[i + 1].first_forage_time);
  for (const auto& r : report.robots) {
    CHECK(r.crossing_theta == doctest::Approx(r.cost - 0.25 - 0.05 / std::numbers::e).epsilon(1e-12));
    CHECK(r.first_forage_theta >= r.crossing_theta - 1e-9);
  }
  CHECK(report.robots[2].crossing_theta - report.robots[0].crossing_theta == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(run_heterogeneity_demo(HeteroConfig{{}, 0.25, 0.05, 0.001, 0.1, 1}), std::invalid_argument);
}

TEST_CASE("config JSON") {
  SUBCASE("empty document gives the experiment defaults") {
    const ScenarioConfig cfg = config_from_json(nlohmann::json::object());
    CHECK(cfg.seed == 1);
    CHECK(cfg.horizon == 1800.0);
    CHECK(cfg.ticks() == 18000);
    CHECK(cfg.world.n_robots == 12);
    CHECK(cfg.params.lambda == 5.5);
    REQUIRE(cfg.events.size() == 1);
    CHECK(cfg.events[0].time == 900.0);
    CHECK(cfg.events[0].count == 6);
  }
  SUBCASE("round trip") {
    ScenarioConfig cfg = default_scenario();
    cfg.seed = 77;
    cfg.world.n_robots = 3;
    cfg.costs = {0.9, 1.0, 1.1};
    cfg.params.feedback = Feedback::None;
    cfg.params.lambda = 0.0;
    cfg.events = {{10.0, ScriptedEvent::Kind::Recruit, 1, Selection::IdleFirst},
                  {20.0, ScriptedEvent::Kind::Release, 1, Selection::Random}};
    const ScenarioConfig back = config_from_json(config_to_json(cfg));
    CHECK(config_to_json(back) == config_to_json(cfg));
    CHECK(back.costs == cfg.costs);
    CHECK(back.events[1].kind == ScriptedEvent::Kind::Release);
  }
  SUBCASE("errors") {
    using nlohmann::json;
    CHECK_THROWS_AS(config_from_json(json{{"sede", 1}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(json{{"world", {{"radius", 3}}}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(json{{"utility", {{"feedback", "up"}}}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"events":[{"time":1,"kind":"clone","count":1}]})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(json{{"utility", {{"costs", {1.0, 2.0}}}}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(json{{"horizon", -5}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(json{{"seed", "seven"}}), std::invalid_argument);
  }
}

TEST_CASE("file errors are reported as IoError") {
  CHECK_THROWS_AS(load_config("/nonexistent/colony/config.json"), IoError);
  const fs::path dir = scratch_dir("io");
  write_text(dir / "plain", "x");
  CHECK_THROWS_AS(write_text(dir / "plain" / "below.csv", "y"), IoError);
  write_text(dir / "bad.json", "{not json");
  CHECK_THROWS_AS(load_config(dir / "bad.json"), std::invalid_argument);
  write_text(dir / "ok.json", R"({"seed": 3, "horizon": 10})");
  const ScenarioConfig cfg = load_config(dir / "ok.json");
  CHECK(cfg.seed == 3);
  CHECK(cfg.ticks() == 100);
  fs::remove_all(dir);
}
