#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hma {

/// Seeded random stream. Draws are built from mt19937_64 words with explicit
/// arithmetic (not std distributions, whose sequences are implementation
/// defined), so a seed pins every downstream value bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  /// Box-Muller without a cached spare: two words per draw, stateless
  /// between calls.
  double normal(double mean, double stddev) {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  /// Uniform index in [0, n) via multiply-high; n must be nonzero.
  std::size_t index_below(std::size_t n) {
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::size_t>(wide >> 64);
  }

  /// Fisher-Yates.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index_below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hma
