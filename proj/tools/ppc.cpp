// Command-line front end for the population-code simulations.
//
//   ppc run --scenario eye-control --config cfg.json --seed 7 --out runs/
//   ppc replay --sidecar runs/eye-control.json --out rerun/
//   ppc validate --config cfg.json
//
// Exit status: 0 success, 1 configuration error, 2 runtime error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ppc/error.hpp"
#include "ppc/harness/config.hpp"
#include "ppc/harness/scenarios.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct ConfigFailure {
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigFailure{"cannot read config file '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ppc::harness::ScenarioConfig load(const std::string& text, const std::string& origin) {
  auto result = ppc::harness::validate_config(text);
  if (!result.ok()) {
    std::string msg = "invalid config (" + origin + "):";
    for (const auto& e : result.errors) msg += "\n  " + e;
    throw ConfigFailure{msg};
  }
  return *result.config;
}

int execute(const ppc::harness::ScenarioConfig& config, const std::string& out) {
  const auto paths = ppc::harness::run_scenario(config, out);
  for (const auto& p : paths) std::cout << p.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic population code simulations"};
  app.require_subcommand(1);

  std::string scenario;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool ablation = false;
  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("--scenario", scenario,
                  "encode-demo | transform-demo | kalman-demo | eye-control | ablation");
  run->add_option("--config", config_path, "JSON config file (defaults when omitted)");
  run->add_option("--seed", seed, "64-bit seed (overrides the config)");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_flag("--ablation", ablation, "Withhold proprioception after initialization");

  std::string sidecar_path;
  std::string replay_out = ".";
  auto* replay = app.add_subcommand("replay", "Re-run from a trace sidecar");
  replay->add_option("--sidecar", sidecar_path, "Sidecar JSON written by run")->required();
  replay->add_option("--out", replay_out, "Output directory")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Print the resolved config or its errors");
  validate->add_option("--config", validate_path, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      auto config = load(config_path.empty() ? "" : read_file(config_path),
                         config_path.empty() ? "defaults" : config_path);
      if (!scenario.empty()) {
        const auto parsed = ppc::harness::parse_scenario(scenario);
        if (!parsed) throw ConfigFailure{"unknown scenario '" + scenario + "'"};
        config.scenario = *parsed;
      }
      if (seed) config.seed = *seed;
      if (ablation) {
        if (config.scenario != ppc::harness::Scenario::kEyeControl &&
            config.scenario != ppc::harness::Scenario::kAblation)
          throw ConfigFailure{"--ablation applies only to eye-control"};
        config.ablation = true;
      }
      return execute(config, out_dir);
    }
    if (*replay) {
      const auto doc = ppc::harness::json::parse(read_file(sidecar_path), nullptr, false);
      if (doc.is_discarded() || !doc.is_object() || !doc.contains("config"))
        throw ConfigFailure{"'" + sidecar_path + "' is not a trace sidecar"};
      return execute(load(doc["config"].dump(), sidecar_path), replay_out);
    }
    if (*validate) {
      const auto config = load(validate_path.empty() ? "" : read_file(validate_path),
                               validate_path.empty() ? "defaults" : validate_path);
      std::cout << ppc::harness::to_json(config).dump(2) << '\n';
      return kOk;
    }
  } catch (const ConfigFailure& e) {
    std::cerr << "error: " << e.message << '\n';
    return kConfigError;
  } catch (const ppc::InvalidParameter& e) {
    std::cerr << "error: invalid parameter: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kRuntimeError;
}
