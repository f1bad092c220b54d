#pragma once

// Recurrent population implementing a scalar Kalman filter:
//
//   dx/dt = W x + u U x + M z - x .* (Q x)
//
// x is the state population's activity, z the observation population's
// rate. Decoding x with the flat-prior Gaussian decoder gives
// mean = sum(x p) / sum(x) and variance = sigma^2 / sum(x), so the network
// only has to move two moments of x:
//
//   * total activity G = sum(x) is the posterior precision (times sigma^2).
//     Prediction needs dG/dt = -2 a G - q G^2 / sigma^2; the first term is
//     a diagonal of W, the second is Q = (q / sigma^2) 1 1^T.
//   * the first moment must drift at a * mean + b * u. Both drifts are
//     advection along the preferred-stimulus axis, discretized with
//     central differences (mass and first moment preserved in the interior).
//   * observation spikes are added directly (M maps the observation grid
//     onto the state grid), which adds their precision exactly.
//
// A mass- and moment-neutral Laplacian in W damps the odd-even modes that
// forward-Euler central advection would otherwise amplify.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppc/error.hpp"
#include "ppc/oracles.hpp"
#include "ppc/popcode.hpp"
#include "ppc/random.hpp"

namespace ppc {

struct KalmanModel {
  double a = 0.0;
  double b = 0.0;
  double q = 0.0;
  TuningGrid obs_grid = TuningGrid::standard();
  /// Root-mean-square |u| the network will be driven with; sets the
  /// numerical smoothing needed for stable advection.
  double control_bound = 0.0;
  /// Width of the blur applied to observation input (stimulus units).
  double input_blur = 0.0;

  oracles::LinearModel dynamics() const { return {a, b, q}; }
};

struct NetworkWeights {
  Eigen::MatrixXd W;
  Eigen::MatrixXd U;
  Eigen::MatrixXd M;
  Eigen::MatrixXd Q;
  double smoothing = 0.0;  // Laplacian coefficient folded into W (units^2 / s)
};

enum class NetworkMode { kRate, kSpiking };

struct NetworkOptions {
  NetworkMode mode = NetworkMode::kRate;
  /// Spiking mode: spikes per second emitted per unit of state activity.
  double spike_scale = 1000.0;
};

struct NetworkState {
  PopulationActivity rates;
  double time = 0.0;
  std::size_t clamped = 0;  // cumulative count of entries clamped to zero
};

namespace detail {

inline void validate_model(const KalmanModel& model) {
  require(std::isfinite(model.a) && std::isfinite(model.b), "KalmanModel: a and b must be finite");
  require(std::isfinite(model.q) && model.q >= 0.0, "KalmanModel: q must be >= 0");
  require(std::isfinite(model.control_bound) && model.control_bound >= 0.0,
          "KalmanModel: control_bound must be >= 0");
  require(std::isfinite(model.input_blur) && model.input_blur >= 0.0,
          "KalmanModel: input_blur must be >= 0");
}

// Central first derivative along the preferred-stimulus axis, zero activity
// beyond the grid ends.
inline Eigen::MatrixXd central_difference(std::size_t n, double h) {
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (i + 1 < m) d(i, i + 1) = 1.0 / (2.0 * h);
    if (i > 0) d(i, i - 1) = -1.0 / (2.0 * h);
  }
  return d;
}

// Reflecting (zero-flux) second difference; columns sum to zero.
inline Eigen::MatrixXd neumann_laplacian(std::size_t n, double h) {
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
  const double c = 1.0 / (h * h);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (i > 0) {
      l(i, i - 1) += c;
      l(i, i) -= c;
    }
    if (i + 1 < m) {
      l(i, i + 1) += c;
      l(i, i) -= c;
    }
  }
  return l;
}

// Sends each observation neuron's activity to the two nearest state neurons
// by linear interpolation, so total and first moment carry over exactly.
// The result is then blurred by a symmetric, column-normalized Gaussian of
// width `blur` (zero disables), which leaves both moments unchanged away
// from the grid edges but keeps single spikes from exciting grid-scale modes.
inline Eigen::MatrixXd interpolation_map(const TuningGrid& from, const TuningGrid& to,
                                         double blur = 0.0) {
  const auto rows = static_cast<Eigen::Index>(to.size());
  const auto cols = static_cast<Eigen::Index>(from.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double p = from.preferred(static_cast<std::size_t>(j));
    const double x = std::clamp((p - to.lo()) / to.spacing(), 0.0, static_cast<double>(rows - 1));
    auto i = static_cast<Eigen::Index>(std::floor(x));
    if (i >= rows - 1) i = rows - 2;
    const double f = x - static_cast<double>(i);
    m(i, j) += 1.0 - f;
    m(i + 1, j) += f;
  }
  if (blur <= 0.0) return m;
  Eigen::MatrixXd k(rows, rows);
  for (Eigen::Index c = 0; c < rows; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double z = static_cast<double>(r - c) * to.spacing() / blur;
      k(r, c) = std::exp(-0.5 * z * z);
    }
    k.col(c) /= k.col(c).sum();
  }
  return k * m;
}

}  // namespace detail

inline NetworkWeights build_weights(const KalmanModel& model, const TuningGrid& state_grid,
                                    double dt) {
  detail::validate_model(model);
  detail::require(std::isfinite(dt) && dt > 0.0, "build_weights: dt must be > 0");
  if (std::abs(model.a) * dt >= 0.1)
    throw InvalidParameter("build_weights: unstable discretization, |a| * dt must be < 0.1");

  const std::size_t n = state_grid.size();
  const auto m = static_cast<Eigen::Index>(n);
  const double h = state_grid.spacing();
  const double w2 = state_grid.tuning_width() * state_grid.tuning_width();

  const Eigen::MatrixXd d = detail::central_difference(n, h);
  Eigen::VectorXd pref(m);
  for (std::size_t i = 0; i < n; ++i) pref[static_cast<Eigen::Index>(i)] = state_grid.preferred(i);
  const double reach = std::max(std::abs(state_grid.lo()), std::abs(state_grid.hi()));

  // Lax-Wendroff-sized smoothing for the typical drift the network will see.
  const double speed = std::abs(model.b) * model.control_bound + std::abs(model.a) * reach;
  const double smoothing = 0.5 * speed * speed * dt;
  if (smoothing * dt / (h * h) > 0.5)
    throw InvalidParameter("build_weights: control_bound too large for dt and grid spacing");

  NetworkWeights w;
  w.smoothing = smoothing;
  w.W = -2.0 * model.a * Eigen::MatrixXd::Identity(m, m) - model.a * d * pref.asDiagonal() +
        smoothing * detail::neumann_laplacian(n, h);
  w.U = -model.b * d;
  const double obs_w2 = model.obs_grid.tuning_width() * model.obs_grid.tuning_width();
  w.M = (w2 / obs_w2) * detail::interpolation_map(model.obs_grid, state_grid, model.input_blur);
  w.Q = Eigen::MatrixXd::Constant(m, m, model.q / w2);
  return w;
}

inline NetworkState initial_state(const TuningGrid& state_grid, double mean, double variance) {
  return {bump_activity(state_grid, mean, variance), 0.0, 0};
}

/// One forward-Euler step. `obs` holds counts over obs.window seconds and
/// enters as the rate counts / window.
inline NetworkState step(const NetworkState& state, const NetworkWeights& weights,
                         const PopulationActivity& obs, double u, double dt, Rng& rng,
                         const NetworkOptions& options = {}) {
  const Eigen::VectorXd& x = state.rates.counts;
  const Eigen::Index n = x.size();
  if (weights.W.rows() != n || weights.W.cols() != n || weights.U.rows() != n ||
      weights.U.cols() != n || weights.Q.rows() != n || weights.Q.cols() != n ||
      weights.M.rows() != n)
    throw InvalidParameter("step: weight dimensions do not match the state population");
  if (obs.counts.size() != weights.M.cols())
    throw InvalidParameter("step: observation size " + std::to_string(obs.counts.size()) +
                           " does not match M (" + std::to_string(weights.M.cols()) + ")");
  detail::require(std::isfinite(u), "step: control must be finite");
  detail::require(std::isfinite(dt) && dt > 0.0, "step: dt must be > 0");
  detail::require(obs.window > 0.0, "step: observation window must be > 0");

  Eigen::VectorXd drive = x;
  if (options.mode == NetworkMode::kSpiking) {
    const double lambda = options.spike_scale * dt;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x[i] <= 0.0) continue;
      std::poisson_distribution<long long> spikes(x[i] * lambda);
      drive[i] = static_cast<double>(spikes(rng)) / lambda;
    }
  }

  Eigen::VectorXd dx = weights.W * drive;
  if (u != 0.0) dx.noalias() += u * (weights.U * drive);
  dx.noalias() += weights.M * (obs.counts / obs.window);
  dx -= drive.cwiseProduct(weights.Q * drive);

  NetworkState next{state.rates, state.time + dt, state.clamped};
  next.rates.counts += dt * dx;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (next.rates.counts[i] < 0.0) {
      next.rates.counts[i] = 0.0;
      ++next.clamped;
    }
  }
  next.rates.time = next.time;
  return next;
}

/// Stateful wrapper for closed-loop use.
class KalmanNetwork {
 public:
  KalmanNetwork(KalmanModel model, TuningGrid state_grid, double dt, NetworkOptions options = {})
      : model_(std::move(model)),
        grid_(std::move(state_grid)),
        dt_(dt),
        options_(options),
        weights_(build_weights(model_, grid_, dt)),
        state_(initial_state(grid_, 0.0, 1.0)) {}

  void reset(double mean, double variance) { state_ = initial_state(grid_, mean, variance); }

  const NetworkState& advance(const PopulationActivity& obs, double u, Rng& rng) {
    state_ = step(state_, weights_, obs, u, dt_, rng, options_);
    return state_;
  }

  GaussianPosterior posterior() const { return decode(grid_, state_.rates); }
  const NetworkState& state() const { return state_; }
  const NetworkWeights& weights() const { return weights_; }
  const TuningGrid& grid() const { return grid_; }
  const KalmanModel& model() const { return model_; }
  double dt() const { return dt_; }

 private:
  KalmanModel model_;
  TuningGrid grid_;
  double dt_;
  NetworkOptions options_;
  NetworkWeights weights_;
  NetworkState state_;
};

struct NetworkSample {
  NetworkState state;
  GaussianPosterior posterior;
};

using ObservationStream = std::function<PopulationActivity(std::size_t step, double t)>;
using ControlStream = std::function<double(std::size_t step, double t)>;

/// Integrates `duration` seconds from `initial` and decodes after every step.
/// Stream callbacks receive the step index and the time at the start of the step.
inline std::vector<NetworkSample> run(const NetworkState& initial, const TuningGrid& state_grid,
                                      const NetworkWeights& weights,
                                      const ObservationStream& observations,
                                      const ControlStream& control, double duration, double dt,
                                      Rng& rng, const NetworkOptions& options = {}) {
  detail::require(std::isfinite(duration) && duration >= 0.0, "run: duration must be >= 0");
  detail::require(std::isfinite(dt) && dt > 0.0, "run: dt must be > 0");
  const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
  std::vector<NetworkSample> out;
  out.reserve(steps);
  NetworkState state = initial;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    state = step(state, weights, observations(k, t), control ? control(k, t) : 0.0, dt, rng,
                 options);
    out.push_back({state, decode(state_grid, state.rates)});
  }
  return out;
}

}  // namespace ppc
