#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace gesture {

// Seeded generator whose derived draws do not depend on the standard
// library's distribution implementations, so corpora and initial weights are
// reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.
  double normal();

  // Uniform integer on [0, n), unbiased.
  std::size_t index(std::size_t n);

  // Derives an independent stream, e.g. one per corpus sequence.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gesture
