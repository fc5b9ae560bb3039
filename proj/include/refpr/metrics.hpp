#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "refpr/grid.hpp"

namespace refpr {

/// PSNR values above this are tabulated as this value; exact matches report
/// +infinity.
inline constexpr double kPsnrCapDb = 160.0;

enum class Flip { kNone, kHorizontal, kVertical, kBoth };

/// Applied to an estimate in this order: flip, rotate by 180 degrees when
/// `rotate180`, then circularly shift so that out(r, c) = in(r - dr, c - dc).
struct AmbiguityTransform {
  Flip flip = Flip::kNone;
  bool rotate180 = false;
  std::size_t shift_rows = 0;
  std::size_t shift_cols = 0;

  bool operator==(const AmbiguityTransform&) const = default;
  std::string describe() const;
};

struct MetricResult {
  double psnr_db = 0.0;
  double mse = 0.0;
  std::optional<AmbiguityTransform> resolved_transform;

  /// psnr_db capped at kPsnrCapDb.
  double tabulated_db() const;
};

MetricResult psnr(const RealGrid& a, const RealGrid& b, double peak = 1.0);

/// PSNR of an estimate after clipping it to [0, 1].
MetricResult reconstruction_psnr(const RealGrid& estimate, const RealGrid& truth);

RealGrid apply_transform(const RealGrid& g, const AmbiguityTransform& t);

/// Best PSNR of the estimate over every circular shift, each flip and both
/// 180-degree rotations. For reference-free baselines only.
MetricResult psnr_ambiguity_resolved(const RealGrid& estimate, const RealGrid& truth);

}  // namespace refpr
