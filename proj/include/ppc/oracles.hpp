#pragma once

// Reference estimators used to validate the population-code networks:
// an exact scalar Kalman filter for dx/dt = a x + b u + eta and a
// discrete grid (histogram) Bayes filter.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ppc/error.hpp"

namespace ppc::oracles {

struct KalmanBelief {
  double mean = 0.0;
  double variance = 1.0;
};

/// Continuous-time scalar model; q is the spectral density of eta.
struct LinearModel {
  double a = 0.0;
  double b = 0.0;
  double q = 0.0;
};

/// First-order (Euler) prediction over dt.
inline KalmanBelief kalman_predict(const KalmanBelief& belief, const LinearModel& model, double u,
                                   double dt) {
  detail::require(dt > 0.0, "kalman_predict: dt must be > 0");
  return {belief.mean + dt * (model.a * belief.mean + model.b * u),
          belief.variance + dt * (2.0 * model.a * belief.variance + model.q)};
}

inline KalmanBelief kalman_update(const KalmanBelief& belief, double z_mean, double z_variance) {
  detail::require(z_variance > 0.0, "kalman_update: observation variance must be > 0");
  const double k = belief.variance / (belief.variance + z_variance);
  return {belief.mean + k * (z_mean - belief.mean), (1.0 - k) * belief.variance};
}

/// Stationary variance of the continuous-time filter observing at
/// precision rate `r` (precision gained per second): 0 = 2 a P + q - r P^2.
inline double stationary_variance(const LinearModel& model, double precision_rate) {
  detail::require(precision_rate > 0.0, "stationary_variance: precision rate must be > 0");
  const double a = model.a;
  return (a + std::sqrt(a * a + model.q * precision_rate)) / precision_rate;
}

class UniformSupport {
 public:
  UniformSupport(double lo, double hi, std::size_t count) : lo_(lo), hi_(hi), n_(count) {
    detail::require(count >= 2 && hi > lo, "UniformSupport: need count >= 2 and lo < hi");
    h_ = (hi - lo) / static_cast<double>(count - 1);
  }
  /// 401 points over [-6, 6].
  static UniformSupport standard() { return {-6.0, 6.0, 401}; }

  std::size_t size() const { return n_; }
  double spacing() const { return h_; }
  double operator[](std::size_t i) const {
    return i + 1 == n_ ? hi_ : lo_ + h_ * static_cast<double>(i);
  }

 private:
  double lo_;
  double hi_;
  std::size_t n_;
  double h_ = 0.0;
};

struct GridBelief {
  UniformSupport support;
  Eigen::VectorXd weights;

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i)
      m += weights[static_cast<Eigen::Index>(i)] * support[i];
    return m;
  }
  double variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      const double d = support[i] - m;
      v += weights[static_cast<Eigen::Index>(i)] * d * d;
    }
    return v;
  }
};

inline GridBelief gaussian_belief(const UniformSupport& support, double mean, double variance) {
  detail::require(variance > 0.0, "gaussian_belief: variance must be > 0");
  Eigen::VectorXd w(static_cast<Eigen::Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) {
    const double d = support[i] - mean;
    w[static_cast<Eigen::Index>(i)] = std::exp(-0.5 * d * d / variance);
  }
  const double s = w.sum();
  if (!(s > 0.0)) throw DegenerateBelief("gaussian_belief: no mass on the support");
  return {support, w / s};
}

inline GridBelief delta_belief(const UniformSupport& support, std::size_t index) {
  detail::require(index < support.size(), "delta_belief: index out of range");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(support.size()));
  w[static_cast<Eigen::Index>(index)] = 1.0;
  return {support, w};
}

/// Row-stochastic transition matrix K(i, j) = p(x' = s_j | x = s_i) with
/// x' ~ N(next_mean(s_i), variance), renormalized over the support. Zero
/// variance gives a deterministic map with linear mass splitting.
inline Eigen::MatrixXd gaussian_kernel(const UniformSupport& support,
                                       const std::function<double(double)>& next_mean,
                                       double variance) {
  const auto n = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = next_mean(support[static_cast<std::size_t>(i)]);
    if (variance <= 0.0) {
      // Deterministic map: split mass linearly between neighbours.
      const double x = (m - support[0]) / support.spacing();
      const auto j = static_cast<Eigen::Index>(std::floor(x));
      const double f = x - std::floor(x);
      if (j >= 0 && j < n) k(i, j) += 1.0 - f;
      if (j + 1 >= 0 && j + 1 < n) k(i, j + 1) += f;
    } else {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double d = support[static_cast<std::size_t>(j)] - m;
        k(i, j) = std::exp(-0.5 * d * d / variance);
      }
    }
    const double s = k.row(i).sum();
    if (s > 0.0) k.row(i) /= s;
  }
  return k;
}

inline Eigen::MatrixXd identity_kernel(const UniformSupport& support) {
  const auto n = static_cast<Eigen::Index>(support.size());
  return Eigen::MatrixXd::Identity(n, n);
}

/// Predict through `kernel` (a discrete marginalization over the previous
/// state), multiply in the likelihood, renormalize.
inline GridBelief grid_filter_step(const GridBelief& belief, const Eigen::MatrixXd& kernel,
                                   const std::function<double(double)>& likelihood) {
  const auto n = static_cast<Eigen::Index>(belief.support.size());
  detail::require(kernel.rows() == n && kernel.cols() == n,
                  "grid_filter_step: kernel does not match support");
  for (Eigen::Index i = 0; i < n; ++i)
    detail::require(std::abs(kernel.row(i).sum() - 1.0) < 1e-9,
                    "grid_filter_step: kernel rows must be normalized");
  Eigen::VectorXd predicted = kernel.transpose() * belief.weights;
  for (Eigen::Index j = 0; j < n; ++j)
    predicted[j] *= likelihood(belief.support[static_cast<std::size_t>(j)]);
  const double mass = predicted.sum();
  if (!(mass > 0.0)) throw DegenerateBelief("grid_filter_step: posterior has no mass");
  return {belief.support, predicted / mass};
}

inline std::function<double(double)> gaussian_likelihood(double z_mean, double z_variance) {
  detail::require(z_variance > 0.0, "gaussian_likelihood: variance must be > 0");
  return [=](double x) {
    const double d = x - z_mean;
    return std::exp(-0.5 * d * d / z_variance);
  };
}

inline std::function<double(double)> flat_likelihood() {
  return [](double) { return 1.0; };
}

}  // namespace ppc::oracles
