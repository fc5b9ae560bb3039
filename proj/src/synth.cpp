#include "refpr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "refpr/rng.hpp"

namespace refpr {
namespace {

struct Point {
  double r;
  double c;
};

double segment_distance(Point p, Point a, Point b) {
  const double dr = b.r - a.r;
  const double dc = b.c - a.c;
  const double len2 = dr * dr + dc * dc;
  double t = len2 > 0.0 ? ((p.r - a.r) * dr + (p.c - a.c) * dc) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double er = a.r + t * dr - p.r;
  const double ec = a.c + t * dc - p.c;
  return std::sqrt(er * er + ec * ec);
}

std::vector<Point> random_stroke(Rng& rng, double top, double left, double extent_r,
                                 double extent_c) {
  constexpr int kSegments = 24;
  std::vector<Point> pts;
  pts.reserve(kSegments + 1);
  auto in_box = [&] {
    return Point{top + extent_r * rng.uniform(), left + extent_c * rng.uniform()};
  };
  if (rng.uniform() < 0.6) {
    // Quadratic Bezier.
    const Point p0 = in_box();
    const Point p1 = in_box();
    const Point p2 = in_box();
    for (int s = 0; s <= kSegments; ++s) {
      const double t = static_cast<double>(s) / kSegments;
      const double a = (1 - t) * (1 - t);
      const double b = 2 * (1 - t) * t;
      const double c = t * t;
      pts.push_back({a * p0.r + b * p1.r + c * p2.r, a * p0.c + b * p1.c + c * p2.c});
    }
  } else {
    // Elliptic arc inside the box.
    const double rr = extent_r * (0.2 + 0.25 * rng.uniform());
    const double rc = extent_c * (0.15 + 0.25 * rng.uniform());
    const Point centre{top + rr + (extent_r - 2 * rr) * rng.uniform(),
                       left + rc + (extent_c - 2 * rc) * rng.uniform()};
    const double start = 2.0 * std::numbers::pi * rng.uniform();
    const double sweep = std::numbers::pi * (1.0 + rng.uniform());
    for (int s = 0; s <= kSegments; ++s) {
      const double a = start + sweep * s / kSegments;
      pts.push_back({centre.r + rr * std::sin(a), centre.c + rc * std::cos(a)});
    }
  }
  return pts;
}

RealGrid glyph(std::size_t h, std::size_t w, Rng& rng) {
  // Strokes live in the central ~70% of the frame.
  const double margin_r = 0.16 * static_cast<double>(h);
  const double margin_c = 0.16 * static_cast<double>(w);
  const double extent_r = static_cast<double>(h) - 2 * margin_r - 1;
  const double extent_c = static_cast<double>(w) - 2 * margin_c - 1;
  const double radius = (0.8 + 0.6 * rng.uniform()) * static_cast<double>(std::min(h, w)) / 32.0;
  const int strokes = 1 + static_cast<int>(rng.uniform() * 3.0);

  RealGrid img(h, w);
  for (int s = 0; s < strokes; ++s) {
    const auto pts = random_stroke(rng, margin_r, margin_c, extent_r, extent_c);
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const Point p{static_cast<double>(r), static_cast<double>(c)};
        double d = 1e300;
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
          d = std::min(d, segment_distance(p, pts[k], pts[k + 1]));
        }
        const double v = std::clamp(radius + 0.5 - d, 0.0, 1.0);
        img(r, c) = std::max(img(r, c), v);
      }
    }
  }
  return img;
}

RealGrid texture(std::size_t h, std::size_t w, Rng& rng) {
  const double fh = static_cast<double>(h);
  const double fw = static_cast<double>(w);
  RealGrid img(h, w);
  // Planar shading.
  const double gr = rng.uniform(-1.0, 1.0);
  const double gc = rng.uniform(-1.0, 1.0);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) img(r, c) = gr * r / fh + gc * c / fw;
  }
  // Blobs.
  const int blobs = 4 + static_cast<int>(rng.uniform() * 5.0);
  for (int b = 0; b < blobs; ++b) {
    const double cr = fh * rng.uniform();
    const double cc = fw * rng.uniform();
    const double sr = fh * (0.05 + 0.2 * rng.uniform());
    const double sc = fw * (0.05 + 0.2 * rng.uniform());
    const double amp = rng.uniform(-1.5, 1.5);
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const double dr = (r - cr) / sr;
        const double dc = (c - cc) / sc;
        img(r, c) += amp * std::exp(-0.5 * (dr * dr + dc * dc));
      }
    }
  }
  // Oriented stripes.
  const double freq = 2.0 * std::numbers::pi * (1.0 + 5.0 * rng.uniform());
  const double theta = std::numbers::pi * rng.uniform();
  const double amp = 0.3 * rng.uniform();
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      img(r, c) += amp * std::sin(freq * (std::cos(theta) * r / fh + std::sin(theta) * c / fw));
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(img.values().begin(), img.values().end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  for (double& v : img.values()) v = span > 0.0 ? (v - lo) / span : 0.5;
  return img;
}

}  // namespace

RealGrid synthesize_image(SynthKind kind, std::size_t height, std::size_t width,
                          std::uint64_t seed) {
  if (height == 0 || width == 0) throw DimensionError("synthesize: empty dims");
  Rng rng(seed);
  return kind == SynthKind::kGlyphs ? glyph(height, width, rng) : texture(height, width, rng);
}

std::vector<RealGrid> synthesize_dataset(SynthKind kind, std::size_t count, std::size_t height,
                                         std::size_t width, std::uint64_t seed) {
  std::vector<RealGrid> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(synthesize_image(kind, height, width, derive_seed(seed, "synth", i)));
  }
  return out;
}

}  // namespace refpr
