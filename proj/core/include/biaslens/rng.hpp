#pragma once

// Portable, seedable randomness. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; the derived draws (uniform doubles,
// normals, bounded integers, shuffles) are implemented here rather than taken
// from <random>, whose distributions differ between standard libraries.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace biaslens {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::size_t uniform_index(std::size_t bound);

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace biaslens
