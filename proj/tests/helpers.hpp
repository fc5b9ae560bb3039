#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "refpr/grid.hpp"
#include "refpr/rng.hpp"

namespace testing {

inline refpr::RealGrid random_real(std::size_t h, std::size_t w, std::uint64_t seed,
                                   double lo = 0.0, double hi = 1.0) {
  refpr::Rng rng(seed);
  refpr::RealGrid g(h, w);
  for (double& v : g.values()) v = rng.uniform(lo, hi);
  return g;
}

inline refpr::ComplexGrid random_complex(std::size_t h, std::size_t w, std::uint64_t seed) {
  refpr::Rng rng(seed);
  refpr::ComplexGrid g(h, w);
  for (auto& v : g.values()) v = {rng.normal(), rng.normal()};
  return g;
}

// Direct O(N^2) orthonormal 2D DFT; sign -1 forward, +1 inverse.
inline refpr::ComplexGrid naive_dft(const refpr::ComplexGrid& g, int sign) {
  const std::size_t h = g.height();
  const std::size_t w = g.width();
  refpr::ComplexGrid out(h, w);
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  for (std::size_t k = 0; k < h; ++k) {
    for (std::size_t l = 0; l < w; ++l) {
      refpr::Complex acc = 0.0;
      for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
          const double angle = sign * 2.0 * std::numbers::pi *
                                (static_cast<double>((k * r) % h) / h +
                                 static_cast<double>((l * c) % w) / w);
          acc += g(r, c) * refpr::Complex(std::cos(angle), std::sin(angle));
        }
      }
      out(k, l) = acc * scale;
    }
  }
  return out;
}

// Complex inner product sum conj(a) b.
inline refpr::Complex cdot(const refpr::ComplexGrid& a, const refpr::ComplexGrid& b) {
  refpr::Complex acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

template <typename G>
double max_abs_diff(const G& a, const G& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double norm2(const refpr::RealGrid& g) { return std::sqrt(refpr::squared_norm(g)); }

inline double rel_l2(const refpr::RealGrid& a, const refpr::RealGrid& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace testing
