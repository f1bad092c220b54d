#pragma once

// Scenario configuration: one JSON document, every field optional.
// validate_config fills defaults and reports each problem as
// "<path>: <message>", e.g. "task.target_interval: must be > 0".

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ppc/diffusion.hpp"
#include "ppc/kalman_ppc.hpp"
#include "ppc/oculomotor.hpp"
#include "ppc/popcode.hpp"

namespace ppc::harness {

using json = nlohmann::ordered_json;

enum class Scenario { kEncodeDemo, kTransformDemo, kKalmanDemo, kEyeControl, kAblation };

inline const std::vector<std::pair<Scenario, std::string>>& scenario_names() {
  static const std::vector<std::pair<Scenario, std::string>> names{
      {Scenario::kEncodeDemo, "encode-demo"},
      {Scenario::kTransformDemo, "transform-demo"},
      {Scenario::kKalmanDemo, "kalman-demo"},
      {Scenario::kEyeControl, "eye-control"},
      {Scenario::kAblation, "ablation"},
  };
  return names;
}

inline std::string to_string(Scenario s) {
  for (const auto& [value, name] : scenario_names())
    if (value == s) return name;
  return "unknown";
}

inline std::optional<Scenario> parse_scenario(std::string_view name) {
  for (const auto& [value, n] : scenario_names())
    if (n == name) return value;
  return std::nullopt;
}

struct GridConfig {
  double lo = -4.0;
  double hi = 4.0;
  std::size_t count = 50;
  double tuning_width = 0.5;
  double rate_scale = 50.0;

  TuningGrid build() const { return TuningGrid::uniform(lo, hi, count, tuning_width, rate_scale); }
};

/// Static encoding demo. Gains are expected total spike counts.
struct EncodeConfig {
  double stimulus = 0.0;
  std::vector<double> gains{5.0, 20.0, 80.0};
  double window = 1.0;
  std::size_t trials = 2000;
};

/// Coordinate-transform demo; gains are expected total spike counts.
struct TransformConfig {
  double stimulus_a = 1.0;
  double stimulus_b = -0.5;
  double gain_a = 40.0;
  double gain_b = 60.0;
  double window = 1.0;
  std::size_t trials = 1000;
  bool stochastic = true;
};

struct ScenarioConfig {
  Scenario scenario = Scenario::kEyeControl;
  std::uint64_t seed = 1;
  bool ablation = false;
  double dt = 1e-3;
  oculomotor::Estimator estimator = oculomotor::Estimator::kNetwork;
  GridConfig grid;
  NetworkOptions network;
  EncodeConfig encode;
  TransformConfig transform;
  diffusion::DiffusionConfig kalman;
  double kalman_snapshot_interval = 0.02;  // s between stored activity snapshots
  oculomotor::TaskConfig task;

  /// Diffusion settings with the network mode applied.
  diffusion::DiffusionConfig resolved_kalman() const {
    auto k = kalman;
    k.spiking = network.mode == NetworkMode::kSpiking;
    k.spike_scale = network.spike_scale;
    return k;
  }
  bool ablated() const { return ablation || scenario == Scenario::kAblation; }
};

struct ValidationResult {
  std::optional<ScenarioConfig> config;
  std::vector<std::string> errors;

  bool ok() const { return config.has_value(); }
};

namespace detail {

// Reads the fields of one JSON object, recording type errors and unknown keys.
class Section {
 public:
  Section(const json* node, std::string path, std::vector<std::string>& errors)
      : node_(node), path_(std::move(path)), errors_(errors) {
    if (node_ && !node_->is_object()) {
      fail("", "expected an object");
      node_ = nullptr;
    }
  }

  Section child(const std::string& key) {
    seen_.push_back(key);
    const json* sub = nullptr;
    if (node_) {
      auto it = node_->find(key);
      if (it != node_->end()) sub = &*it;
    }
    return Section(sub, join(key), errors_);
  }

  void number(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (v->is_number()) out = v->get<double>();
      else fail(key, "expected a number");
    }
  }

  void count(const std::string& key, std::size_t& out) {
    if (const json* v = take(key)) {
      if (v->is_number_unsigned()) out = v->get<std::size_t>();
      else fail(key, "expected a nonnegative integer");
    }
  }

  void seed(const std::string& key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (v->is_number_unsigned()) out = v->get<std::uint64_t>();
      else fail(key, "expected an unsigned 64-bit integer");
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = take(key)) {
      if (v->is_boolean()) out = v->get<bool>();
      else fail(key, "expected true or false");
    }
  }

  std::optional<std::string> string(const std::string& key) {
    if (const json* v = take(key)) {
      if (v->is_string()) return v->get<std::string>();
      fail(key, "expected a string");
    }
    return std::nullopt;
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_array()) {
      fail(key, "expected an array of numbers");
      return;
    }
    std::vector<double> values;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& e = (*v)[i];
      if (!e.is_number()) {
        fail(key + "[" + std::to_string(i) + "]", "expected a number");
        return;
      }
      values.push_back(e.get<double>());
    }
    out = std::move(values);
  }

  /// Reports keys that no accessor asked for.
  void finish() {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      bool known = false;
      for (const auto& s : seen_) known = known || s == key;
      if (!known) fail(key, "unknown field");
    }
  }

  void fail(const std::string& key, const std::string& msg) {
    errors_.push_back(join(key) + ": " + msg);
  }
  std::string join(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "$" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json* take(const std::string& key) {
    seen_.push_back(key);
    if (!node_) return nullptr;
    auto it = node_->find(key);
    if (it == node_->end() || it->is_null()) return nullptr;
    return &*it;
  }

  const json* node_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::vector<std::string> seen_;
};

inline void prefixed(std::vector<std::string>& errors, const std::string& section,
                     const std::vector<std::string>& violations) {
  for (const auto& v : violations) errors.push_back(section + "." + v);
}

}  // namespace detail

inline ValidationResult validate_document(const json& root) {
  ValidationResult result;
  auto& errors = result.errors;
  ScenarioConfig c;
  detail::Section top(&root, "", errors);

  if (auto s = top.string("scenario")) {
    if (auto parsed = parse_scenario(*s)) c.scenario = *parsed;
    else top.fail("scenario", "unknown scenario '" + *s + "'");
  }
  top.seed("seed", c.seed);
  top.boolean("ablation", c.ablation);
  top.number("dt", c.dt);
  if (auto e = top.string("estimator")) {
    if (*e == "network") c.estimator = oculomotor::Estimator::kNetwork;
    else if (*e == "exact-kalman") c.estimator = oculomotor::Estimator::kExactKalman;
    else top.fail("estimator", "expected 'network' or 'exact-kalman'");
  }

  auto grid = top.child("grid");
  grid.number("lo", c.grid.lo);
  grid.number("hi", c.grid.hi);
  grid.count("count", c.grid.count);
  grid.number("tuning_width", c.grid.tuning_width);
  grid.number("rate_scale", c.grid.rate_scale);
  grid.finish();

  auto net = top.child("network");
  if (auto m = net.string("mode")) {
    if (*m == "rate") c.network.mode = NetworkMode::kRate;
    else if (*m == "spiking") c.network.mode = NetworkMode::kSpiking;
    else net.fail("mode", "expected 'rate' or 'spiking'");
  }
  net.number("spike_scale", c.network.spike_scale);
  net.finish();

  auto enc = top.child("encode");
  enc.number("stimulus", c.encode.stimulus);
  enc.numbers("gains", c.encode.gains);
  enc.number("window", c.encode.window);
  enc.count("trials", c.encode.trials);
  enc.finish();

  auto tr = top.child("transform");
  tr.number("stimulus_a", c.transform.stimulus_a);
  tr.number("stimulus_b", c.transform.stimulus_b);
  tr.number("gain_a", c.transform.gain_a);
  tr.number("gain_b", c.transform.gain_b);
  tr.number("window", c.transform.window);
  tr.count("trials", c.transform.trials);
  tr.boolean("stochastic", c.transform.stochastic);
  tr.finish();

  auto kal = top.child("kalman");
  kal.number("a", c.kalman.a);
  kal.number("q", c.kalman.q);
  kal.number("duration", c.kalman.duration);
  kal.number("gain_max", c.kalman.gain_max);
  kal.number("gain_floor", c.kalman.gain_floor);
  kal.number("gain_period", c.kalman.gain_period);
  kal.number("initial_mean", c.kalman.initial_mean);
  kal.number("initial_variance", c.kalman.initial_variance);
  kal.number("snapshot_interval", c.kalman_snapshot_interval);
  kal.finish();

  auto task = top.child("task");
  task.numbers("target_levels", c.task.target_levels);
  task.number("target_interval", c.task.target_interval);
  task.number("init_duration", c.task.init_duration);
  task.number("episode_duration", c.task.episode_duration);
  task.number("proprio_delay", c.task.proprio_delay);
  task.number("gate_window", c.task.gate_window);
  task.number("deadzone", c.task.deadzone);
  task.number("max_speed", c.task.max_speed);
  task.number("gate_floor", c.task.gate_floor);
  task.number("gate_ceiling", c.task.gate_ceiling);
  task.number("plant_gain", c.task.plant_gain);
  task.number("efference_noise", c.task.efference_noise);
  task.number("efference_motor_noise", c.task.efference_motor_noise);
  task.number("model_noise", c.task.model_noise);
  task.number("initial_variance", c.task.initial_variance);
  task.finish();
  top.finish();

  // Range checks run only on well-typed input.
  if (!errors.empty()) return result;

  if (!(std::isfinite(c.dt) && c.dt > 0.0)) errors.push_back("dt: must be > 0");
  if (!(c.network.spike_scale > 0.0)) errors.push_back("network.spike_scale: must be > 0");

  const auto& g = c.grid;
  bool grid_ok = true;
  auto grid_error = [&](const std::string& e) {
    errors.push_back("grid." + e);
    grid_ok = false;
  };
  if (g.count < 2) grid_error("count: must be >= 2");
  if (!(std::isfinite(g.lo) && std::isfinite(g.hi) && g.hi > g.lo)) grid_error("hi: must be > lo");
  if (!(g.tuning_width > 0.0)) grid_error("tuning_width: must be > 0");
  if (!(g.rate_scale >= 0.0)) grid_error("rate_scale: must be >= 0");
  if (grid_ok && g.tuning_width < (g.hi - g.lo) / static_cast<double>(g.count - 1) * (1.0 - 1e-12))
    grid_error("tuning_width: must be at least the grid spacing");
  auto inside = [&](double v) { return !grid_ok || (v >= g.lo && v <= g.hi); };

  if (!inside(c.encode.stimulus)) errors.push_back("encode.stimulus: must lie within the grid");
  if (c.encode.gains.empty()) errors.push_back("encode.gains: must not be empty");
  for (std::size_t i = 0; i < c.encode.gains.size(); ++i)
    if (!(c.encode.gains[i] > 0.0))
      errors.push_back("encode.gains[" + std::to_string(i) + "]: must be > 0");
  if (!(c.encode.window > 0.0)) errors.push_back("encode.window: must be > 0");
  if (c.encode.trials < 1) errors.push_back("encode.trials: must be >= 1");

  if (!inside(c.transform.stimulus_a)) errors.push_back("transform.stimulus_a: must lie within the grid");
  if (!inside(c.transform.stimulus_b)) errors.push_back("transform.stimulus_b: must lie within the grid");
  if (!(c.transform.gain_a > 0.0)) errors.push_back("transform.gain_a: must be > 0");
  if (!(c.transform.gain_b > 0.0)) errors.push_back("transform.gain_b: must be > 0");
  if (!(c.transform.window > 0.0)) errors.push_back("transform.window: must be > 0");
  if (c.transform.trials < 1) errors.push_back("transform.trials: must be >= 1");

  detail::prefixed(errors, "kalman", c.kalman.violations());
  if (!inside(c.kalman.initial_mean)) errors.push_back("kalman.initial_mean: must lie within the grid");
  if (!(c.kalman_snapshot_interval > 0.0))
    errors.push_back("kalman.snapshot_interval: must be > 0");

  detail::prefixed(errors, "task", c.task.violations());
  for (std::size_t i = 0; i < c.task.target_levels.size(); ++i)
    if (!inside(c.task.target_levels[i]))
      errors.push_back("task.target_levels[" + std::to_string(i) + "]: must lie within the grid");

  if (errors.empty()) result.config = c;
  return result;
}

inline ValidationResult validate_config(std::string_view text) {
  bool blank = true;
  for (char ch : text) blank = blank && (ch == ' ' || ch == '\n' || ch == '\r' || ch == '\t');
  if (blank) return validate_document(json::object());
  try {
    return validate_document(json::parse(text.begin(), text.end()));
  } catch (const json::parse_error& e) {
    return {std::nullopt, {std::string("$: parse error: ") + e.what()}};
  }
}

inline json to_json(const ScenarioConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  j["seed"] = c.seed;
  j["ablation"] = c.ablation;
  j["dt"] = c.dt;
  j["estimator"] = c.estimator == oculomotor::Estimator::kNetwork ? "network" : "exact-kalman";
  j["grid"] = {{"lo", c.grid.lo},
               {"hi", c.grid.hi},
               {"count", c.grid.count},
               {"tuning_width", c.grid.tuning_width},
               {"rate_scale", c.grid.rate_scale}};
  j["network"] = {{"mode", c.network.mode == NetworkMode::kRate ? "rate" : "spiking"},
                  {"spike_scale", c.network.spike_scale}};
  j["encode"] = {{"stimulus", c.encode.stimulus},
                 {"gains", c.encode.gains},
                 {"window", c.encode.window},
                 {"trials", c.encode.trials}};
  j["transform"] = {{"stimulus_a", c.transform.stimulus_a},
                    {"stimulus_b", c.transform.stimulus_b},
                    {"gain_a", c.transform.gain_a},
                    {"gain_b", c.transform.gain_b},
                    {"window", c.transform.window},
                    {"trials", c.transform.trials},
                    {"stochastic", c.transform.stochastic}};
  j["kalman"] = {{"a", c.kalman.a},
                 {"q", c.kalman.q},
                 {"duration", c.kalman.duration},
                 {"gain_max", c.kalman.gain_max},
                 {"gain_floor", c.kalman.gain_floor},
                 {"gain_period", c.kalman.gain_period},
                 {"initial_mean", c.kalman.initial_mean},
                 {"initial_variance", c.kalman.initial_variance},
                 {"snapshot_interval", c.kalman_snapshot_interval}};
  const auto& t = c.task;
  j["task"] = {{"target_levels", t.target_levels},
               {"target_interval", t.target_interval},
               {"init_duration", t.init_duration},
               {"episode_duration", t.episode_duration},
               {"proprio_delay", t.proprio_delay},
               {"gate_window", t.gate_window},
               {"deadzone", t.deadzone},
               {"max_speed", t.max_speed},
               {"gate_floor", t.gate_floor},
               {"gate_ceiling", t.gate_ceiling},
               {"plant_gain", t.plant_gain},
               {"efference_noise", t.efference_noise},
               {"efference_motor_noise", t.efference_motor_noise},
               {"model_noise", t.model_noise},
               {"initial_variance", t.initial_variance}};
  return j;
}

}  // namespace ppc::harness
