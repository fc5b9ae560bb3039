#include "refpr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace refpr {

std::string AmbiguityTransform::describe() const {
  static const char* const kFlipNames[] = {"none", "horizontal", "vertical", "both"};
  return std::string("flip=") + kFlipNames[static_cast<int>(flip)] +
         " rot180=" + (rotate180 ? "yes" : "no") + " shift=(" + std::to_string(shift_rows) +
         "," + std::to_string(shift_cols) + ")";
}

double MetricResult::tabulated_db() const { return std::min(psnr_db, kPsnrCapDb); }

namespace {

double psnr_from_mse(double mse, double peak) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

// Source index of output (r, c) under flip + rotation, before shifting.
struct IndexMap {
  std::size_t h, w;
  bool mirror_rows, mirror_cols;

  IndexMap(std::size_t height, std::size_t width, Flip flip, bool rotate180)
      : h(height), w(width) {
    mirror_rows = flip == Flip::kVertical || flip == Flip::kBoth;
    mirror_cols = flip == Flip::kHorizontal || flip == Flip::kBoth;
    if (rotate180) {
      mirror_rows = !mirror_rows;
      mirror_cols = !mirror_cols;
    }
  }
  std::size_t row(std::size_t r) const { return mirror_rows ? h - 1 - r : r; }
  std::size_t col(std::size_t c) const { return mirror_cols ? w - 1 - c : c; }
};

}  // namespace

MetricResult psnr(const RealGrid& a, const RealGrid& b, double peak) {
  require_same_shape(a, b, "psnr");
  if (a.empty()) throw DimensionError("psnr: empty grids");
  if (!(peak > 0.0)) throw ParameterError("psnr: peak must be > 0");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  MetricResult out;
  out.mse = acc / static_cast<double>(a.size());
  out.psnr_db = psnr_from_mse(out.mse, peak);
  return out;
}

MetricResult reconstruction_psnr(const RealGrid& estimate, const RealGrid& truth) {
  return psnr(clip(estimate, 0.0, 1.0), truth);
}

RealGrid apply_transform(const RealGrid& g, const AmbiguityTransform& t) {
  const std::size_t h = g.height();
  const std::size_t w = g.width();
  const IndexMap map(h, w, t.flip, t.rotate180);
  RealGrid out(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t sr = map.row((r + h - t.shift_rows % h) % h);
    for (std::size_t c = 0; c < w; ++c) {
      out(r, c) = g(sr, map.col((c + w - t.shift_cols % w) % w));
    }
  }
  return out;
}

MetricResult psnr_ambiguity_resolved(const RealGrid& estimate, const RealGrid& truth) {
  require_same_shape(estimate, truth, "psnr_ambiguity_resolved");
  if (estimate.empty()) throw DimensionError("psnr_ambiguity_resolved: empty grids");
  const std::size_t h = estimate.height();
  const std::size_t w = estimate.width();

  double best_sse = std::numeric_limits<double>::infinity();
  AmbiguityTransform best;
  constexpr Flip kFlips[] = {Flip::kNone, Flip::kHorizontal, Flip::kVertical, Flip::kBoth};
  for (bool rotate : {false, true}) {
    for (Flip flip : kFlips) {
      const IndexMap map(h, w, flip, rotate);
      // Flipped estimate, materialized once per orientation.
      RealGrid oriented(h, w);
      for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) oriented(r, c) = estimate(map.row(r), map.col(c));
      }
      for (std::size_t dr = 0; dr < h; ++dr) {
        for (std::size_t dc = 0; dc < w; ++dc) {
          double sse = 0.0;
          for (std::size_t r = 0; r < h && sse < best_sse; ++r) {
            const std::size_t sr = (r + h - dr) % h;
            for (std::size_t c = 0; c < w; ++c) {
              const double d = oriented(sr, (c + w - dc) % w) - truth(r, c);
              sse += d * d;
            }
          }
          if (sse < best_sse) {
            best_sse = sse;
            best = AmbiguityTransform{flip, rotate, dr, dc};
          }
        }
      }
    }
  }
  MetricResult out;
  out.mse = best_sse / static_cast<double>(estimate.size());
  out.psnr_db = psnr_from_mse(out.mse, 1.0);
  out.resolved_transform = best;
  return out;
}

}  // namespace refpr
