#pragma once

#include <cstdint>
#include <random>

namespace feedback {

// One stream per run. Nothing in the library reads ambient entropy.
using Rng = std::mt19937_64;

// Independent stream for replication `rep` of an experiment seeded with `master_seed`.
inline Rng derive_stream(std::uint64_t master_seed, std::uint64_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(rep),
                    static_cast<std::uint32_t>(rep >> 32),
                    0x5eedu};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
  return std::bernoulli_distribution(p)(rng);
}

inline std::int64_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

}  // namespace feedback
