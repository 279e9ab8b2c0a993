#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace infdecomp {

// Seeded random source whose outputs are identical on every platform.
// std::mt19937_64's raw stream is fully specified by the standard, but the
// standard distributions are not, so all derived draws are implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). Unbiased (rejection on the low remainder).
  std::uint64_t uniform_index(std::uint64_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller.
  double normal();

  // First k elements of a seeded Fisher-Yates shuffle of [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a base seed with a string key (e.g. a document id) into an
// independent, reproducible sub-seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

}  // namespace infdecomp
