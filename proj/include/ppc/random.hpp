#pragma once

#include <cstdint>
#include <random>

namespace ppc {

using Rng = std::mt19937_64;

// Independent named streams derived from one user seed, so that adding a
// consumer of randomness does not perturb the draws of the others.
enum class Stream : std::uint64_t {
  kEncode = 1,
  kTarget = 2,
  kProprio = 3,
  kEfference = 4,
  kProcess = 5,
  kObservation = 6,
  kNetwork = 7,
  kTransform = 8,
};

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  const auto s = static_cast<std::uint64_t>(stream);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return Rng(seq);
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t episode) {
  return make_rng(seed ^ (0x9E3779B97F4A7C15ULL * (episode + 1)), stream);
}

}  // namespace ppc
