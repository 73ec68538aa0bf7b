#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace oal {

// Stable 64-bit mixing (splitmix64 finalizer). Used to derive independent
// seed streams from a master seed and a path of integer tags, so that the
// stream for (phase, batch, episode) never depends on how many draws any
// other stream made.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// A seeded random stream. Distribution helpers are written out instead of
// using <random> distributions so that draws are identical across standard
// library implementations (checkpoints and metrics CSVs are compared
// byte-for-byte).
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  // Standard normal via Box-Muller (no cached second value).
  double normal();
  // Inverse-CDF draw from unnormalized non-negative weights.
  std::size_t weighted_index(std::span<const double> weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace oal
