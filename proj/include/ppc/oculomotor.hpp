#pragma once

// Closed-loop saccadic eye control.
//
// Each step: the target process yields x_H, the motor processor compares it
// with the MAP eye estimate and issues a bang-bang command u, the eye plant
// integrates u, and a proprioceptive population reports the eye position
// from `proprio_delay` seconds ago. Any nonzero command gates that
// population's gain down to the floor for `gate_window` seconds, so the
// stale reading reaches the estimator only once the eye has been still for
// longer than the delay. The estimator (a Kalman population, or the exact
// filter for calibration) fuses the gated reading with a forward model
// driven by a noisy efference copy of u.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ppc/error.hpp"
#include "ppc/kalman_ppc.hpp"
#include "ppc/oracles.hpp"
#include "ppc/popcode.hpp"
#include "ppc/random.hpp"

namespace ppc::oculomotor {

struct TaskConfig {
  std::vector<double> target_levels{-2.0, -1.0, 0.0, 1.0, 2.0};
  double target_interval = 0.3;   // s
  double init_duration = 2.0;     // s
  double episode_duration = 30.0; // s
  double proprio_delay = 0.1;     // s
  double gate_window = 0.1;       // s
  double deadzone = 0.1;          // stimulus units
  double max_speed = 20.0;        // stimulus units / s
  double gate_floor = 5e-4;       // proprioceptive gain while gated (1e-3 of the ceiling)
  double gate_ceiling = 0.5;      // proprioceptive gain otherwise
  double plant_gain = 1.0;        // b: eye velocity per unit command
  /// Efference-copy noise as a spectral density (units^2 / s): a constant
  /// floor plus a motor term scaling with (u / max_speed)^2.
  double efference_noise = 0.02;
  double efference_motor_noise = 0.3;
  double model_noise = 0.05;      // q assumed by the estimator
  double initial_variance = 1.0;  // estimator prior at t = 0

  /// Human-readable violations, each prefixed with the offending field.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    auto check = [&](bool ok, const char* field, const char* msg) {
      if (!ok) out.push_back(std::string(field) + ": " + msg);
    };
    check(!target_levels.empty(), "target_levels", "must not be empty");
    for (double v : target_levels) check(std::isfinite(v), "target_levels", "must be finite");
    check(target_interval > 0.0, "target_interval", "must be > 0");
    check(init_duration >= 0.0, "init_duration", "must be >= 0");
    check(episode_duration > 0.0, "episode_duration", "must be > 0");
    check(proprio_delay >= 0.0, "proprio_delay", "must be >= 0");
    check(gate_window >= proprio_delay, "gate_window", "must be >= proprio_delay");
    check(deadzone > 0.0, "deadzone", "must be > 0");
    check(max_speed > 0.0, "max_speed", "must be > 0");
    check(gate_floor > 0.0, "gate_floor", "must be > 0 (Poisson rates must be nonzero)");
    check(gate_ceiling >= gate_floor, "gate_ceiling", "must be >= gate_floor");
    check(plant_gain != 0.0 && std::isfinite(plant_gain), "plant_gain", "must be finite and nonzero");
    check(efference_noise >= 0.0, "efference_noise", "must be >= 0");
    check(efference_motor_noise >= 0.0, "efference_motor_noise", "must be >= 0");
    check(model_noise >= 0.0, "model_noise", "must be >= 0");
    check(initial_variance > 0.0, "initial_variance", "must be > 0");
    return out;
  }

  void validate() const {
    const auto v = violations();
    if (!v.empty()) throw InvalidParameter("TaskConfig: " + v.front());
  }
};

/// Piecewise-constant target: 0 during initialization, then a fresh uniform
/// draw from target_levels at every interval boundary. Queries must be made
/// at nondecreasing times.
class TargetProcess {
 public:
  explicit TargetProcess(const TaskConfig& config) : config_(config) {}

  double at(double t, Rng& rng) {
    detail::require(t >= 0.0, "TargetProcess: t must be >= 0");
    if (t < config_.init_duration) return 0.0;
    const auto interval = static_cast<long long>(
        std::floor((t - config_.init_duration) / config_.target_interval + 1e-9));
    while (drawn_ <= interval) {
      std::uniform_int_distribution<std::size_t> pick(0, config_.target_levels.size() - 1);
      value_ = config_.target_levels[pick(rng)];
      ++drawn_;
    }
    return value_;
  }

 private:
  TaskConfig config_;
  long long drawn_ = 0;
  double value_ = 0.0;
};

inline double target_step(const TaskConfig& config, double t, Rng& rng) {
  TargetProcess process(config);
  return process.at(t, rng);
}

inline double motor_command(double target, double eye_estimate, const TaskConfig& config) {
  detail::require(std::isfinite(target) && std::isfinite(eye_estimate),
                  "motor_command: inputs must be finite");
  const double diff = target - eye_estimate;
  if (std::abs(diff) < config.deadzone) return 0.0;
  return diff > 0.0 ? config.max_speed : -config.max_speed;
}

/// Floor gain if a nonzero command was issued in (t - gate_window, t].
inline double gate_gain(std::optional<double> last_nonzero_command, double t,
                        const TaskConfig& config) {
  detail::require(t >= 0.0, "gate_gain: t must be >= 0");
  if (!last_nonzero_command) return config.gate_ceiling;
  const double since = t - *last_nonzero_command;
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  if (since >= -tol && since < config.gate_window - tol) return config.gate_floor;
  return config.gate_ceiling;
}

/// Eye positions indexed by step; reads before the first step return the
/// initial position.
class DelayLine {
 public:
  void push(double value) { history_.push_back(value); }
  double at(long long step) const {
    detail::require(!history_.empty(), "DelayLine: empty history");
    if (step < 0) return history_.front();
    detail::require(static_cast<std::size_t>(step) < history_.size(), "DelayLine: future read");
    return history_[static_cast<std::size_t>(step)];
  }
  std::size_t size() const { return history_.size(); }

 private:
  std::vector<double> history_;
};

/// Proprioceptive response at step `k`: the eye position `delay_steps`
/// back, Poisson-encoded at the gated gain over one step.
inline PopulationActivity proprio_encode(const DelayLine& history, long long k,
                                         long long delay_steps, double gain,
                                         const TuningGrid& grid, double dt, Rng& rng) {
  const double stale = history.at(k - delay_steps);
  return encode(grid, stale, gain, dt, rng, static_cast<double>(k) * dt);
}

struct PlantState {
  double eye = 0.0;
  double target = 0.0;
  double time = 0.0;
};

struct EpisodeStep {
  double t = 0.0;
  double target = 0.0;
  double eye = 0.0;
  double u = 0.0;
  double gate_gain = 0.0;
  double proprio_source = 0.0;  // delayed eye position the proprioceptors saw
  std::optional<GaussianPosterior> proprio;  // empty when the response was silent
  double kalman_mean = 0.0;
  double kalman_var = 0.0;
};

enum class Estimator { kNetwork, kExactKalman };

struct EpisodeOptions {
  bool ablation = false;
  Estimator estimator = Estimator::kNetwork;
  NetworkOptions network{};
};

struct EpisodeTrace {
  TaskConfig config;
  double dt = 0.0;
  std::uint64_t seed = 0;
  bool ablation = false;
  std::vector<EpisodeStep> steps;
  std::size_t clamped = 0;
  std::size_t init_steps = 0;
  std::size_t delay_steps = 0;
  std::size_t gate_steps = 0;
};

inline std::size_t to_steps(double seconds, double dt) {
  return static_cast<std::size_t>(std::llround(seconds / dt));
}

/// RMS efference copy during a full-speed command, per-step noise included.
inline double efference_bound(const TaskConfig& config, double dt) {
  const double b = std::abs(config.plant_gain);
  const double density = config.efference_noise + config.efference_motor_noise;
  return std::sqrt(config.max_speed * config.max_speed + density / (dt * b * b));
}

inline EpisodeTrace run_episode(const TaskConfig& config, const TuningGrid& grid, double dt,
                                std::uint64_t seed, const EpisodeOptions& options = {}) {
  config.validate();
  detail::require(std::isfinite(dt) && dt > 0.0, "run_episode: dt must be > 0");

  EpisodeTrace trace;
  trace.config = config;
  trace.dt = dt;
  trace.seed = seed;
  trace.ablation = options.ablation;
  trace.init_steps = to_steps(config.init_duration, dt);
  trace.delay_steps = to_steps(config.proprio_delay, dt);
  trace.gate_steps = to_steps(config.gate_window, dt);
  const std::size_t total = to_steps(config.episode_duration, dt);
  trace.steps.reserve(total);

  Rng target_rng = make_rng(seed, Stream::kTarget);
  Rng proprio_rng = make_rng(seed, Stream::kProprio);
  Rng efference_rng = make_rng(seed, Stream::kEfference);
  Rng network_rng = make_rng(seed, Stream::kNetwork);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto efference_sd = [&](double u) {
    const double r = u / config.max_speed;
    const double density = config.efference_noise + config.efference_motor_noise * r * r;
    return std::sqrt(density / dt) / std::abs(config.plant_gain);
  };

  KalmanModel model{0.0, config.plant_gain, config.model_noise, grid, efference_bound(config, dt),
                    grid.tuning_width()};
  std::optional<KalmanNetwork> network;
  oracles::KalmanBelief exact{0.0, config.initial_variance};
  if (options.estimator == Estimator::kNetwork) {
    network.emplace(model, grid, dt, options.network);
    network->reset(0.0, config.initial_variance);
    const auto p = network->posterior();
    exact = {p.mean, p.variance};
  }

  TargetProcess targets(config);
  DelayLine eye_history;
  PlantState plant;
  std::optional<long long> last_command;
  const double lo = grid.lo();
  const double hi = grid.hi();

  for (std::size_t k = 0; k < total; ++k) {
    const double t = static_cast<double>(k) * dt;
    const bool initializing = k < trace.init_steps;
    plant.time = t;
    plant.target = targets.at(t, target_rng);
    eye_history.push(plant.eye);

    const double estimate =
        network ? map_estimate(network->posterior()) : exact.mean;
    const double u = initializing ? 0.0 : motor_command(plant.target, estimate, config);
    if (u != 0.0) last_command = static_cast<long long>(k);

    double gain = config.gate_ceiling;
    if (!initializing) {
      if (options.ablation) {
        gain = config.gate_floor;
      } else if (last_command &&
                 *last_command > static_cast<long long>(k) -
                                     static_cast<long long>(trace.gate_steps)) {
        gain = config.gate_floor;
      }
    }

    const auto k_signed = static_cast<long long>(k);
    const auto delay = static_cast<long long>(trace.delay_steps);
    const auto obs = proprio_encode(eye_history, k_signed, delay, gain, grid, dt, proprio_rng);
    std::optional<GaussianPosterior> proprio;
    if (obs.total() > 0.0) proprio = decode(grid, obs);

    const double u_copy = u + efference_sd(u) * unit(efference_rng);
    double mean = 0.0;
    double var = 0.0;
    if (network) {
      network->advance(obs, u_copy, network_rng);
      const auto post = network->posterior();
      mean = post.mean;
      var = post.variance;
    } else {
      exact = oracles::kalman_predict(exact, model.dynamics(), u_copy, dt);
      if (proprio) exact = oracles::kalman_update(exact, proprio->mean, proprio->variance);
      mean = exact.mean;
      var = exact.variance;
    }

    trace.steps.push_back(
        {t, plant.target, plant.eye, u, gain, eye_history.at(k_signed - delay), proprio, mean, var});

    plant.eye = std::clamp(plant.eye + config.plant_gain * u * dt, lo, hi);
  }
  if (network) trace.clamped = network->state().clamped;
  return trace;
}

struct TrackingSummary {
  double fraction_within = 0.0;  // post-init, outside post-jump transients
  double final_error = 0.0;      // mean |eye - target| over the final window
  double variance_at_init_end = 0.0;
  double variance_at_end = 0.0;
  std::size_t counted_steps = 0;
};

inline TrackingSummary summarize(const EpisodeTrace& trace, double tolerance = 0.5,
                                 double transient = 0.15, double final_window = 5.0) {
  TrackingSummary s;
  if (trace.steps.empty()) return s;
  const std::size_t transient_steps = to_steps(transient, trace.dt);
  const std::size_t final_steps = std::min(to_steps(final_window, trace.dt), trace.steps.size());
  std::size_t since_jump = transient_steps;
  std::size_t within = 0;
  for (std::size_t k = trace.init_steps; k < trace.steps.size(); ++k) {
    const auto& st = trace.steps[k];
    if (k > 0 && st.target != trace.steps[k - 1].target) since_jump = 0;
    const bool excluded = since_jump < transient_steps;
    ++since_jump;
    if (excluded) continue;
    ++s.counted_steps;
    if (std::abs(st.eye - st.target) <= tolerance) ++within;
  }
  s.fraction_within =
      s.counted_steps ? static_cast<double>(within) / static_cast<double>(s.counted_steps) : 0.0;
  double err = 0.0;
  for (std::size_t k = trace.steps.size() - final_steps; k < trace.steps.size(); ++k)
    err += std::abs(trace.steps[k].eye - trace.steps[k].target);
  s.final_error = final_steps ? err / static_cast<double>(final_steps) : 0.0;
  const std::size_t init_idx = trace.init_steps > 0 ? trace.init_steps - 1 : 0;
  s.variance_at_init_end = trace.steps[std::min(init_idx, trace.steps.size() - 1)].kalman_var;
  s.variance_at_end = trace.steps.back().kalman_var;
  return s;
}

}  // namespace ppc::oculomotor
