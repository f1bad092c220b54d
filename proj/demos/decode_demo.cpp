// Encode a stimulus at a few gains, decode, and fuse two responses.

#include <cstdio>

#include "ppc/popcode.hpp"
#include "ppc/transform.hpp"

int main() {
  using namespace ppc;
  const auto grid = TuningGrid::standard();
  Rng rng = make_rng(42, Stream::kEncode);

  for (double total : {5.0, 20.0, 80.0}) {
    const double gain = gain_for_total(grid, 0.7, total, 1.0);
    const auto act = encode(grid, 0.7, gain, 1.0, rng);
    const auto post = decode(grid, act);
    std::printf("expected spikes %5.1f  got %4.0f  posterior N(%.3f, %.4f)\n", total, act.total(),
                post.mean, post.variance);
  }

  // Two independent looks at the same stimulus: summing the spike counts is
  // the same as multiplying the posteriors.
  const double gain = gain_for_total(grid, -1.0, 30.0, 1.0);
  const auto a = encode(grid, -1.0, gain, 1.0, rng);
  const auto b = encode(grid, -1.0, gain, 1.0, rng);
  PopulationActivity sum{a.counts + b.counts, 0.0, 1.0};
  const auto fused = fuse(decode(grid, a), decode(grid, b));
  const auto pooled = decode(grid, sum);
  std::printf("fused N(%.6f, %.6f)  pooled N(%.6f, %.6f)\n", fused.mean, fused.variance,
              pooled.mean, pooled.variance);

  std::printf("combine_gain(40, 60) = %.3f\n", combine_gain(40.0, 60.0));
  return 0;
}
