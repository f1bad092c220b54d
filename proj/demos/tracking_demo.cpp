// Closed-loop eye control with and without proprioception, over a few seeds.
//
//   tracking_demo [seeds]

#include <cstdio>
#include <cstdlib>

#include "ppc/oculomotor.hpp"

int main(int argc, char** argv) {
  using namespace ppc;
  const int seeds = argc > 1 ? std::atoi(argv[1]) : 5;
  const auto grid = TuningGrid::standard();
  const oculomotor::TaskConfig config;

  std::printf("seed  within0.5  final_err  | withheld: final_err  var(init) -> var(end)\n");
  for (int s = 1; s <= seeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    oculomotor::EpisodeOptions options;
    const auto gated = oculomotor::summarize(oculomotor::run_episode(config, grid, 1e-3, seed, options));
    options.ablation = true;
    const auto cut = oculomotor::summarize(oculomotor::run_episode(config, grid, 1e-3, seed, options));
    std::printf("%4d  %9.3f  %9.3f  | %19.3f  %9.4f -> %.4f\n", s, gated.fraction_within,
                gated.final_error, cut.final_error, cut.variance_at_init_end, cut.variance_at_end);
  }
  return 0;
}
