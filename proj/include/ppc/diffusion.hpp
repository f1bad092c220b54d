#pragma once

// Kalman population tracking a diffusing stimulus through an observation
// population whose gain follows a rectified sinusoid. The exact scalar
// Kalman filter sees the same observation spikes (through their decodes)
// and serves as the reference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ppc/error.hpp"
#include "ppc/kalman_ppc.hpp"
#include "ppc/oracles.hpp"
#include "ppc/popcode.hpp"
#include "ppc/random.hpp"

namespace ppc::diffusion {

struct DiffusionConfig {
  double a = 0.0;
  double q = 0.05;              // process noise of the stimulus and the model
  double duration = 10.0;       // s
  double gain_max = 1.0;        // observation gain at the sinusoid peak
  double gain_floor = 1e-3;     // fraction of gain_max during the off half-cycle
  double gain_period = 2.5;     // s
  double initial_mean = 0.0;
  double initial_variance = 1.0;
  bool spiking = false;
  double spike_scale = 1000.0;

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    auto check = [&](bool ok, const char* field, const char* msg) {
      if (!ok) out.push_back(std::string(field) + ": " + msg);
    };
    check(std::isfinite(a), "a", "must be finite");
    check(q >= 0.0, "q", "must be >= 0");
    check(duration > 0.0, "duration", "must be > 0");
    check(gain_max > 0.0, "gain_max", "must be > 0");
    check(gain_floor > 0.0 && gain_floor <= 1.0, "gain_floor", "must be in (0, 1]");
    check(gain_period > 0.0, "gain_period", "must be > 0");
    check(std::isfinite(initial_mean), "initial_mean", "must be finite");
    check(initial_variance > 0.0, "initial_variance", "must be > 0");
    check(spike_scale > 0.0, "spike_scale", "must be > 0");
    return out;
  }
};

/// g(t) = gain_max * max(cos(2 pi t / T), gain_floor): full gain at t = 0,
/// floor for the middle half of every period.
inline double observation_gain(const DiffusionConfig& config, double t) {
  const double s = std::cos(2.0 * std::numbers::pi * t / config.gain_period);
  return config.gain_max * std::max(s, config.gain_floor);
}

struct DiffusionStep {
  double t = 0.0;
  double truth = 0.0;
  double gain = 0.0;
  std::optional<GaussianPosterior> observation;
  double network_mean = 0.0;
  double network_var = 0.0;
  double oracle_mean = 0.0;
  double oracle_var = 0.0;
  double rate_min = 0.0;
  double rate_max = 0.0;
  double rate_total = 0.0;
};

struct DiffusionTrace {
  DiffusionConfig config;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<DiffusionStep> steps;
  std::vector<Eigen::VectorXd> snapshots;  // network activity every `snapshot_every` steps
  std::size_t snapshot_every = 0;
  std::size_t clamped = 0;

  bool low_gain(std::size_t k) const {
    return steps[k].gain <= config.gain_max * config.gain_floor * (1.0 + 1e-12);
  }
};

inline DiffusionTrace run(const DiffusionConfig& config, const TuningGrid& grid, double dt,
                          std::uint64_t seed, std::size_t snapshot_every = 0) {
  {
    const auto v = config.violations();
    if (!v.empty()) throw InvalidParameter("DiffusionConfig: " + v.front());
  }
  detail::require(std::isfinite(dt) && dt > 0.0, "diffusion::run: dt must be > 0");

  DiffusionTrace trace;
  trace.config = config;
  trace.dt = dt;
  trace.seed = seed;
  trace.snapshot_every = snapshot_every;

  Rng process_rng = make_rng(seed, Stream::kProcess);
  Rng obs_rng = make_rng(seed, Stream::kObservation);
  Rng net_rng = make_rng(seed, Stream::kNetwork);
  std::normal_distribution<double> unit(0.0, 1.0);

  const KalmanModel model{config.a, 0.0, config.q, grid, 0.0, 0.0};
  const NetworkWeights weights = build_weights(model, grid, dt);
  NetworkOptions options;
  options.mode = config.spiking ? NetworkMode::kSpiking : NetworkMode::kRate;
  options.spike_scale = config.spike_scale;

  NetworkState state = initial_state(grid, config.initial_mean, config.initial_variance);
  const auto start = decode(grid, state.rates);
  oracles::KalmanBelief oracle{start.mean, start.variance};
  double truth = config.initial_mean;
  const double lo = grid.lo();
  const double hi = grid.hi();

  const auto steps = static_cast<std::size_t>(std::llround(config.duration / dt));
  trace.steps.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double gain = observation_gain(config, t);
    const auto obs = encode(grid, truth, gain, dt, obs_rng, t);
    std::optional<GaussianPosterior> decoded;
    if (obs.total() > 0.0) decoded = decode(grid, obs);

    state = step(state, weights, obs, 0.0, dt, net_rng, options);
    const auto post = decode(grid, state.rates);

    oracle = oracles::kalman_predict(oracle, model.dynamics(), 0.0, dt);
    if (decoded) oracle = oracles::kalman_update(oracle, decoded->mean, decoded->variance);

    const auto& x = state.rates.counts;
    trace.steps.push_back({t, truth, gain, decoded, post.mean, post.variance, oracle.mean,
                           oracle.variance, x.minCoeff(), x.maxCoeff(), x.sum()});
    if (snapshot_every && k % snapshot_every == 0) trace.snapshots.push_back(x);

    truth += dt * config.a * truth + std::sqrt(config.q * dt) * unit(process_rng);
    // Reflect at the grid edges so the stimulus stays encodable.
    if (truth > hi) truth = 2.0 * hi - truth;
    if (truth < lo) truth = 2.0 * lo - truth;
  }
  trace.clamped = state.clamped;
  return trace;
}

/// Maximal runs [begin, end) of steps where the observation gain sits at
/// its floor.
inline std::vector<std::pair<std::size_t, std::size_t>> low_gain_windows(
    const DiffusionTrace& trace) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t k = 0;
  while (k < trace.steps.size()) {
    if (!trace.low_gain(k)) {
      ++k;
      continue;
    }
    const std::size_t begin = k;
    while (k < trace.steps.size() && trace.low_gain(k)) ++k;
    out.emplace_back(begin, k);
  }
  return out;
}

}  // namespace ppc::diffusion
