#pragma once

#include <cstdint>
#include <random>

namespace sectrack {

// One splitmix64 step. Used only for seed derivation, not as a generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag) {
  std::uint64_t s = root + (tag + 1) * 0x9e3779b97f4a7c15ull;
  (void)splitmix64(s);
  return splitmix64(s);
}

// One generator per consumer, all derived from a single root seed, so that
// toggling one feature (say the attack) never shifts the draws another
// consumer sees.
struct RngStreams {
  std::mt19937_64 deployment;
  std::mt19937_64 shadowing;
  std::mt19937_64 attack;

  explicit RngStreams(std::uint64_t root_seed)
      : deployment(derive_seed(root_seed, 0)),
        shadowing(derive_seed(root_seed, 1)),
        attack(derive_seed(root_seed, 2)) {}
};

// N(0, sigma^2) draw; returns 0 without touching the generator when sigma <= 0.
inline double normal_draw(std::mt19937_64& gen, double sigma) {
  if (sigma <= 0.0) return 0.0;
  std::normal_distribution<double> dist(0.0, sigma);
  return dist(gen);
}

inline double uniform_draw(std::mt19937_64& gen, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(gen);
}

inline int uniform_int_draw(std::mt19937_64& gen, int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  return dist(gen);
}

}  // namespace sectrack
