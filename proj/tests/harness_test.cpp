#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "ppc/harness/config.hpp"
#include "ppc/harness/csv.hpp"
#include "ppc/harness/scenarios.hpp"

namespace ppc::harness {
namespace {

namespace fs = std::filesystem;

bool has_error(const ValidationResult& r, const std::string& prefix) {
  for (const auto& e : r.errors)
    if (e.rfind(prefix, 0) == 0) return true;
  return false;
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + 1))
    ++n;
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig quick(Scenario s) {
  auto r = validate_config("");
  auto c = *r.config;
  c.scenario = s;
  c.task.episode_duration = 4.0;
  c.kalman.duration = 3.0;
  c.encode.trials = 200;
  c.transform.trials = 100;
  return c;
}

TEST(ValidateConfig, EmptyConfigGivesFullDefaults) {
  for (const char* text : {"", "  \n", "{}"}) {
    const auto r = validate_config(text);
    ASSERT_TRUE(r.ok()) << text;
    const auto& c = *r.config;
    EXPECT_EQ(c.scenario, Scenario::kEyeControl);
    EXPECT_EQ(c.seed, 1u);
    EXPECT_DOUBLE_EQ(c.dt, 1e-3);
    EXPECT_EQ(c.grid.count, 50u);
    EXPECT_DOUBLE_EQ(c.task.target_interval, 0.3);
    EXPECT_DOUBLE_EQ(c.task.proprio_delay, 0.1);
    EXPECT_DOUBLE_EQ(c.task.gate_window, 0.1);
    EXPECT_DOUBLE_EQ(c.task.deadzone, 0.1);
    EXPECT_DOUBLE_EQ(c.task.max_speed, 20.0);
    EXPECT_DOUBLE_EQ(c.kalman.q, 0.05);
  }
}

TEST(ValidateConfig, ZeroTargetIntervalNamesTheField) {
  const auto r = validate_config(R"({"task": {"target_interval": 0}})");
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_error(r, "task.target_interval:"));
}

TEST(ValidateConfig, ShortestPaperDelayIsValid) {
  const auto r = validate_config(R"({"task": {"proprio_delay": 0.06}})");
  ASSERT_TRUE(r.ok());
  EXPECT_DOUBLE_EQ(r.config->task.proprio_delay, 0.06);
}

TEST(ValidateConfig, ReportsEveryProblemWithItsPath) {
  const auto r = validate_config(
      R"({"dt": "fast", "grid": {"count": -3, "colour": 1}, "task": {"deadzone": true},
          "scenario": "nope", "extra": 0, "encode": {"gains": [1, "x"]}})");
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_error(r, "dt: expected a number"));
  EXPECT_TRUE(has_error(r, "grid.count:"));
  EXPECT_TRUE(has_error(r, "grid.colour: unknown field"));
  EXPECT_TRUE(has_error(r, "task.deadzone: expected a number"));
  EXPECT_TRUE(has_error(r, "scenario: unknown scenario"));
  EXPECT_TRUE(has_error(r, "extra: unknown field"));
  EXPECT_TRUE(has_error(r, "encode.gains[1]:"));
}

TEST(ValidateConfig, RangeViolations) {
  EXPECT_TRUE(has_error(validate_config(R"({"dt": 0})"), "dt:"));
  EXPECT_TRUE(has_error(validate_config(R"({"grid": {"tuning_width": 0.01}})"),
                        "grid.tuning_width:"));
  EXPECT_TRUE(has_error(validate_config(R"({"task": {"gate_window": 0.05}})"), "task.gate_window:"));
  EXPECT_TRUE(has_error(validate_config(R"({"task": {"target_levels": [0, 9]}})"),
                        "task.target_levels[1]:"));
  EXPECT_TRUE(has_error(validate_config(R"({"kalman": {"gain_floor": 0}})"), "kalman.gain_floor:"));
  EXPECT_TRUE(has_error(validate_config(R"({"encode": {"gains": [5, 0]}})"), "encode.gains[1]:"));
  EXPECT_TRUE(has_error(validate_config(R"({"network": {"mode": "bursting"}})"), "network.mode:"));
  EXPECT_TRUE(has_error(validate_config(R"({"seed": -1})"), "seed:"));
  EXPECT_TRUE(has_error(validate_config(R"({"grid": 3})"), "grid: expected an object"));
}

TEST(ValidateConfig, ParseFailureIsReported) {
  const auto r = validate_config("{\"dt\": ");
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_error(r, "$: parse error"));
  EXPECT_TRUE(has_error(validate_config("[1, 2]"), "$: expected an object"));
}

TEST(ValidateConfig, ResolvedConfigRoundTrips) {
  const auto r = validate_config(
      R"({"scenario": "kalman-demo", "seed": 18446744073709551615, "network": {"mode": "spiking"},
          "task": {"target_levels": [-1, 1], "proprio_delay": 0.08, "gate_window": 0.08}})");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.config->seed, 18446744073709551615ULL);
  const auto j = to_json(*r.config);
  const auto again = validate_config(j.dump());
  ASSERT_TRUE(again.ok());
  EXPECT_EQ(to_json(*again.config), j);
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(1e-300), "1e-300");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(format_fixed(2.50), "2.5");
  EXPECT_EQ(format_fixed(-0.001), "0");
  std::ostringstream out;
  CsvWriter w(out);
  w.row({"a", 1, 2.5, true});
  EXPECT_EQ(out.str(), "a,1,2.5,1\n");
}

TEST(Scenarios, EyeControlTraceHasTheDocumentedColumns) {
  const auto a = simulate(quick(Scenario::kEyeControl));
  EXPECT_EQ(a.csv.substr(0, a.csv.find('\n')),
            "t,target,eye,u,gate_gain,proprio_mean,proprio_var,proprio_degenerate,kalman_mean,"
            "kalman_var");
  EXPECT_EQ(count(a.csv, "\n"), 4001u);
  EXPECT_NE(a.csv.find(",nan,nan,1,"), std::string::npos);
  EXPECT_EQ(count(a.svg, "<clipPath"), 4u);
  EXPECT_TRUE(a.sidecar["summary"].contains("withheld_proprioception"));
}

TEST(Scenarios, KalmanDemoDrawsFourPanels) {
  const auto a = simulate(quick(Scenario::kKalmanDemo));
  EXPECT_EQ(count(a.svg, "<clipPath"), 4u);
  EXPECT_NE(a.svg.find("Input population gain"), std::string::npos);
  EXPECT_NE(a.svg.find("Kalman population decode"), std::string::npos);
}

TEST(Scenarios, EveryScenarioIsByteReproducible) {
  for (auto s : {Scenario::kEncodeDemo, Scenario::kTransformDemo, Scenario::kKalmanDemo,
                 Scenario::kEyeControl, Scenario::kAblation}) {
    const auto a = simulate(quick(s));
    const auto b = simulate(quick(s));
    EXPECT_EQ(a.csv, b.csv) << to_string(s);
    EXPECT_EQ(a.svg, b.svg) << to_string(s);
    EXPECT_EQ(a.sidecar.dump(), b.sidecar.dump()) << to_string(s);
  }
  auto other = quick(Scenario::kEyeControl);
  other.seed = 2;
  EXPECT_NE(simulate(other).csv, simulate(quick(Scenario::kEyeControl)).csv);
}

TEST(Scenarios, SidecarReproducesTheTrace) {
  const auto dir = fs::temp_directory_path() / "ppc_sidecar_test";
  fs::remove_all(dir);
  auto c = quick(Scenario::kAblation);
  c.seed = 77;
  run_scenario(c, dir);
  const auto sidecar = json::parse(slurp(dir / "ablation.json"));
  EXPECT_EQ(sidecar["seed"], 77u);
  EXPECT_EQ(sidecar["config"]["seed"], 77u);
  const auto again = validate_config(sidecar["config"].dump());
  ASSERT_TRUE(again.ok());
  EXPECT_EQ(simulate(*again.config).csv, slurp(dir / "ablation.csv"));
  fs::remove_all(dir);
}

TEST(Scenarios, SeedOneEyeControlGoldenSummary) {
  const auto a = simulate(*validate_config("").config);
  const auto& run = a.sidecar["summary"]["run"];
  const auto& withheld = a.sidecar["summary"]["withheld_proprioception"];
  EXPECT_NEAR(run["fraction_within_tolerance"].get<double>(), 0.9775438596491228, 1e-12);
  EXPECT_NEAR(run["final_mean_abs_error"].get<double>(), 0.333184, 1e-9);
  EXPECT_NEAR(run["variance_at_init_end"].get<double>(), 0.007678218368770656, 1e-12);
  EXPECT_NEAR(withheld["fraction_within_tolerance"].get<double>(), 0.8546198830409357, 1e-12);
  EXPECT_NEAR(withheld["final_mean_abs_error"].get<double>(), 0.477432, 1e-9);
  EXPECT_NEAR(withheld["variance_at_end"].get<double>(), 0.6162527260421798, 1e-12);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ppc_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int ppc(const std::string& args) {
    const std::string cmd = std::string(PPC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  void write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
  }

  fs::path dir_;
};

TEST_F(Cli, RunsAScenarioAndWritesTraceSidecarAndPlot) {
  write("cfg.json", R"({"task": {"episode_duration": 3.0}})");
  const auto out = dir_ / "out";
  EXPECT_EQ(ppc("run --scenario eye-control --config " + (dir_ / "cfg.json").string() +
                " --seed 5 --out " + out.string()),
            0);
  EXPECT_TRUE(fs::exists(out / "eye-control.csv"));
  EXPECT_TRUE(fs::exists(out / "eye-control.svg"));
  const auto sidecar = json::parse(slurp(out / "eye-control.json"));
  EXPECT_EQ(sidecar["seed"], 5u);

  const auto replay = dir_ / "replay";
  EXPECT_EQ(ppc("replay --sidecar " + (out / "eye-control.json").string() + " --out " +
                replay.string()),
            0);
  EXPECT_EQ(slurp(replay / "eye-control.csv"), slurp(out / "eye-control.csv"));
}

TEST_F(Cli, AblationFlag) {
  write("cfg.json", R"({"task": {"episode_duration": 3.0}})");
  const auto cfg = (dir_ / "cfg.json").string();
  EXPECT_EQ(ppc("run --scenario eye-control --ablation --config " + cfg + " --out " +
                (dir_ / "a").string()),
            0);
  EXPECT_EQ(json::parse(slurp(dir_ / "a" / "eye-control.json"))["config"]["ablation"], true);
  EXPECT_EQ(ppc("run --scenario encode-demo --ablation --config " + cfg + " --out " +
                (dir_ / "b").string()),
            1);
}

TEST_F(Cli, ConfigErrorsExitWithOne) {
  write("bad.json", R"({"task": {"target_interval": 0}})");
  write("broken.json", "{");
  const auto out = (dir_ / "out").string();
  EXPECT_EQ(ppc("run --scenario eye-control --config " + (dir_ / "bad.json").string() +
                " --out " + out),
            1);
  EXPECT_EQ(ppc("run --scenario eye-control --config " + (dir_ / "broken.json").string() +
                " --out " + out),
            1);
  EXPECT_EQ(ppc("run --scenario no-such --out " + out), 1);
  EXPECT_EQ(ppc("run --scenario eye-control --config " + (dir_ / "missing.json").string() +
                " --out " + out),
            1);
  EXPECT_EQ(ppc("run --scenario eye-control --seed notanumber --out " + out), 1);
  EXPECT_EQ(ppc("validate --config " + (dir_ / "bad.json").string()), 1);
}

TEST_F(Cli, RuntimeErrorsExitWithTwo) {
  write("cfg.json", R"({"task": {"episode_duration": 1.0}})");
  write("blocker", "not a directory");
  EXPECT_EQ(ppc("run --scenario eye-control --config " + (dir_ / "cfg.json").string() +
                " --out " + (dir_ / "blocker" / "out").string()),
            2);
}

}  // namespace
}  // namespace ppc::harness
