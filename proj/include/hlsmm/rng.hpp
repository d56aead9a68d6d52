#pragma once

// Reproducible random streams.
//
// The generator is std::mt19937_64, whose output sequence is fixed by the C++
// standard for a given 64-bit seed. The distributions are implemented here
// rather than taken from <random>, because the standard library's
// distributions are implementation-defined and differ between vendors:
//
//   uniform01   (bits >> 11) * 2^-53, in [0, 1)
//   normal      Box-Muller on (1 - uniform01, uniform01), one value per pair
//   index(n)    rejection sampling on the full 64-bit output
//   shuffle     Fisher-Yates from the back, using index(i + 1)

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace hlsmm {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal();

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Deterministic per-task seed derived from a base seed and a task index
/// (splitmix64 finaliser), so parallel tasks draw independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace hlsmm
