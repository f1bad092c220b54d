#pragma once

// Linear probabilistic population codes with Gaussian tuning.
//
// A population of N neurons with preferred stimuli p_i and tuning width
// sigma fires Poisson spikes at rate g * rate_scale * exp(-(s - p_i)^2 / 2 sigma^2).
// On a dense uniform lattice the summed tuning curve is flat in s, so the
// log-likelihood of a response r is quadratic in s and the posterior under
// a flat prior is Gaussian with
//
//   mean     = sum(r_i p_i) / sum(r_i)
//   variance = sigma^2 / sum(r_i)
//
// The total activity sum(r_i) is the gain of the encoding.

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ppc/error.hpp"
#include "ppc/random.hpp"

namespace ppc {

class TuningGrid {
 public:
  TuningGrid(std::vector<double> preferred, double tuning_width, double rate_scale)
      : preferred_(std::move(preferred)), width_(tuning_width), rate_scale_(rate_scale) {
    detail::require(preferred_.size() >= 2, "TuningGrid: need at least two neurons");
    detail::require(std::isfinite(width_) && width_ > 0.0, "TuningGrid: tuning_width must be > 0");
    detail::require(std::isfinite(rate_scale_) && rate_scale_ >= 0.0,
                    "TuningGrid: rate_scale must be >= 0");
    spacing_ = (preferred_.back() - preferred_.front()) / static_cast<double>(preferred_.size() - 1);
    detail::require(spacing_ > 0.0, "TuningGrid: preferred stimuli must be increasing");
    for (std::size_t i = 1; i < preferred_.size(); ++i) {
      const double d = preferred_[i] - preferred_[i - 1];
      detail::require(d > 0.0, "TuningGrid: preferred stimuli must be strictly increasing");
      detail::require(std::abs(d - spacing_) <= 1e-12 * spacing_,
                      "TuningGrid: preferred stimuli must be uniformly spaced");
    }
    detail::require(width_ >= spacing_ * (1.0 - 1e-12),
                    "TuningGrid: tuning_width must be at least the grid spacing");
  }

  /// `count` neurons spanning [lo, hi] inclusive.
  static TuningGrid uniform(double lo, double hi, std::size_t count, double tuning_width,
                            double rate_scale) {
    detail::require(count >= 2, "TuningGrid: need at least two neurons");
    detail::require(std::isfinite(lo) && std::isfinite(hi) && hi > lo, "TuningGrid: need lo < hi");
    std::vector<double> p(count);
    const double h = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) p[i] = lo + h * static_cast<double>(i);
    p.back() = hi;
    return TuningGrid(std::move(p), tuning_width, rate_scale);
  }

  /// 50 neurons over [-4, 4], width 0.5, 50 spikes/s peak at unit gain.
  static TuningGrid standard() { return uniform(-4.0, 4.0, 50, 0.5, 50.0); }

  std::size_t size() const { return preferred_.size(); }
  const std::vector<double>& preferred() const { return preferred_; }
  double preferred(std::size_t i) const { return preferred_[i]; }
  double tuning_width() const { return width_; }
  double rate_scale() const { return rate_scale_; }
  double spacing() const { return spacing_; }
  double lo() const { return preferred_.front(); }
  double hi() const { return preferred_.back(); }

  /// Sum of unit-gain tuning curves at s.
  double summed_rate(double s) const {
    double acc = 0.0;
    for (double p : preferred_) acc += tuning(s, p);
    return acc;
  }

  double tuning(double s, double pref) const {
    const double z = (s - pref) / width_;
    return rate_scale_ * std::exp(-0.5 * z * z);
  }

 private:
  std::vector<double> preferred_;
  double width_;
  double rate_scale_;
  double spacing_ = 0.0;
};

/// Spike counts (or rate * window) of one population, accumulated over
/// `window` seconds ending at `time`.
struct PopulationActivity {
  Eigen::VectorXd counts;
  double time = 0.0;
  double window = 1.0;

  double total() const { return counts.sum(); }
};

struct GaussianPosterior {
  double mean = 0.0;
  double variance = 1.0;
  double gain = 0.0;

  double precision() const { return 1.0 / variance; }
  double stddev() const { return std::sqrt(variance); }
};

struct FlatPrior {};
struct GaussianPrior {
  double mean = 0.0;
  double variance = 1.0;
};
using PriorSpec = std::variant<FlatPrior, GaussianPrior>;

/// Product of two Gaussian densities: precisions add, means combine
/// precision-weighted. Gains add.
inline GaussianPosterior fuse(const GaussianPosterior& a, const GaussianPosterior& b) {
  const double pa = 1.0 / a.variance;
  const double pb = 1.0 / b.variance;
  const double p = pa + pb;
  return {(pa * a.mean + pb * b.mean) / p, 1.0 / p, a.gain + b.gain};
}

inline Eigen::VectorXd tuning_rate(const TuningGrid& grid, double s, double gain) {
  if (!std::isfinite(s) || !std::isfinite(gain))
    throw InvalidParameter("tuning_rate: stimulus and gain must be finite");
  detail::require(gain >= 0.0, "tuning_rate: gain must be >= 0");
  Eigen::VectorXd rate(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i)
    rate[static_cast<Eigen::Index>(i)] = gain * grid.tuning(s, grid.preferred(i));
  return rate;
}

/// Poisson population response to stimulus s over `window` seconds.
inline PopulationActivity encode(const TuningGrid& grid, double s, double gain, double window,
                                 Rng& rng, double time = 0.0) {
  if (!std::isfinite(window) || window <= 0.0)
    throw InvalidParameter("encode: window must be > 0");
  Eigen::VectorXd mean = tuning_rate(grid, s, gain) * window;
  Eigen::VectorXd counts(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    if (mean[i] <= 0.0) {
      counts[i] = 0.0;
      continue;
    }
    std::poisson_distribution<long long> draw(mean[i]);
    counts[i] = static_cast<double>(draw(rng));
  }
  return {std::move(counts), time, window};
}

/// Gain at which an encode of s over `window` yields `total` spikes in
/// expectation.
inline double gain_for_total(const TuningGrid& grid, double s, double total, double window) {
  detail::require(total >= 0.0 && window > 0.0, "gain_for_total: need total >= 0, window > 0");
  const double per_gain = grid.summed_rate(s) * window;
  if (!(per_gain > 0.0)) throw InvalidParameter("gain_for_total: population cannot fire at s");
  return total / per_gain;
}

/// Noise-free counterpart of `encode`: the expected counts.
inline PopulationActivity encode_expected(const TuningGrid& grid, double s, double gain,
                                          double window, double time = 0.0) {
  if (!std::isfinite(window) || window <= 0.0)
    throw InvalidParameter("encode_expected: window must be > 0");
  return {tuning_rate(grid, s, gain) * window, time, window};
}

inline GaussianPosterior decode(const TuningGrid& grid, const PopulationActivity& activity,
                                const PriorSpec& prior = FlatPrior{}) {
  if (static_cast<std::size_t>(activity.counts.size()) != grid.size())
    throw InvalidParameter("decode: activity size " + std::to_string(activity.counts.size()) +
                           " does not match grid size " + std::to_string(grid.size()));
  double total = 0.0;
  double moment = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = activity.counts[static_cast<Eigen::Index>(i)];
    if (!(r >= 0.0)) throw InvalidParameter("decode: activity must be nonnegative");
    total += r;
    moment += r * grid.preferred(i);
  }
  if (!(total > 0.0)) throw DegenerateActivity("decode: population is silent");

  const double w2 = grid.tuning_width() * grid.tuning_width();
  GaussianPosterior post{moment / total, w2 / total, total};
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    detail::require(g->variance > 0.0, "decode: prior variance must be > 0");
    const double gain = post.gain;
    post = fuse(post, GaussianPosterior{g->mean, g->variance, 0.0});
    post.gain = gain;
  }
  return post;
}

inline double map_estimate(const GaussianPosterior& posterior) { return posterior.mean; }

/// Activity profile on `grid` whose flat-prior decode is N(mean, variance):
/// a tuning-shaped bump normalized to total tuning_width^2 / variance.
inline PopulationActivity bump_activity(const TuningGrid& grid, double mean, double variance,
                                        double time = 0.0) {
  detail::require(variance > 0.0, "bump_activity: variance must be > 0");
  Eigen::VectorXd shape(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double z = (grid.preferred(i) - mean) / grid.tuning_width();
    shape[static_cast<Eigen::Index>(i)] = std::exp(-0.5 * z * z);
  }
  const double s = shape.sum();
  if (!(s > 0.0)) throw InvalidParameter("bump_activity: mean lies outside the grid");
  const double total = grid.tuning_width() * grid.tuning_width() / variance;
  return {shape * (total / s), time, 1.0};
}

}  // namespace ppc
