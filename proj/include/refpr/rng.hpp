#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace refpr {

/// Portable random stream: std::mt19937_64 (whose output sequence is fixed by
/// the C++ standard) with hand-written uniform and normal transforms, so the
/// same seed gives the same doubles on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent child seed from a root seed and a purpose tag
/// ("noise", "init", "hio", ...) plus an optional index.
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                          std::uint64_t index = 0) noexcept;

}  // namespace refpr
