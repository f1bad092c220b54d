#pragma once

// Bayes-optimal linear coordinate transform x_R = x_H + e_H on population
// codes. The output encodes the convolution of the two decoded input
// posteriors; with equal tuning widths its gain is the divisive
// normalization g1 g2 / (g1 + g2) of the input gains.

#include <cmath>
#include <string>

#include "ppc/error.hpp"
#include "ppc/popcode.hpp"
#include "ppc/random.hpp"

namespace ppc {

inline double combine_gain(double g1, double g2) {
  detail::require(std::isfinite(g1) && std::isfinite(g2) && g1 >= 0.0 && g2 >= 0.0,
                  "combine_gain: gains must be finite and >= 0");
  if (g1 == 0.0 && g2 == 0.0) throw DegenerateActivity("combine_gain: both gains are zero");
  return g1 * g2 / (g1 + g2);
}

enum class TransformMode { kDeterministic, kStochastic };

class TransformCircuit {
 public:
  TransformCircuit(TuningGrid grid_a, TuningGrid grid_b, TuningGrid grid_out)
      : a_(std::move(grid_a)), b_(std::move(grid_b)), out_(std::move(grid_out)) {
    detail::require(out_.lo() <= a_.lo() + b_.lo() && out_.hi() >= a_.hi() + b_.hi(),
                    "TransformCircuit: output grid must span the sum of the input ranges");
  }

  /// Output grid spanning exactly the Minkowski sum of the input ranges,
  /// with the spacing and tuning of `grid_a`.
  static TransformCircuit with_summed_output(const TuningGrid& grid_a, const TuningGrid& grid_b) {
    const double lo = grid_a.lo() + grid_b.lo();
    const double hi = grid_a.hi() + grid_b.hi();
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / grid_a.spacing() - 1e-9)) + 1;
    return {grid_a, grid_b,
            TuningGrid::uniform(lo, hi, n, grid_a.tuning_width(), grid_a.rate_scale())};
  }

  const TuningGrid& grid_a() const { return a_; }
  const TuningGrid& grid_b() const { return b_; }
  const TuningGrid& grid_out() const { return out_; }

  /// Posterior over x_a + x_b implied by the two input encodings.
  GaussianPosterior target_posterior(const PopulationActivity& act_a,
                                     const PopulationActivity& act_b) const {
    const auto pa = decode(a_, act_a);
    const auto pb = decode(b_, act_b);
    const double variance = pa.variance + pb.variance;
    const double w2 = out_.tuning_width() * out_.tuning_width();
    return {pa.mean + pb.mean, variance, w2 / variance};
  }

  /// Output encoding. Deterministic mode emits the tuning-shaped expected
  /// profile carrying the target posterior exactly; stochastic mode draws a
  /// Poisson response with that mean and expected total activity.
  PopulationActivity transform(const PopulationActivity& act_a, const PopulationActivity& act_b,
                               Rng& rng, TransformMode mode = TransformMode::kDeterministic) const {
    const auto target = target_posterior(act_a, act_b);
    const double time = std::max(act_a.time, act_b.time);
    if (mode == TransformMode::kDeterministic) {
      auto out = bump_activity(out_, target.mean, target.variance, time);
      out.window = act_a.window;
      return out;
    }
    const double window = act_a.window;
    const double summed = out_.summed_rate(target.mean) * window;
    if (!(summed > 0.0)) throw DegenerateActivity("transform: output population cannot fire");
    return encode(out_, target.mean, target.gain / summed, window, rng, time);
  }

 private:
  TuningGrid a_;
  TuningGrid b_;
  TuningGrid out_;
};

}  // namespace ppc
