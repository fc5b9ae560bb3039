#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "refpr/grid.hpp"

namespace refpr {

/// Synthetic stand-ins for the image classes used in experiments.
///   kGlyphs   - sparse anti-aliased pen strokes on a zero background, centred
///               with a margin (digit/letter-like).
///   kTextures - dense smooth fields spanning [0, 1] over the whole frame
///               (grayscale natural-image-like).
enum class SynthKind { kGlyphs, kTextures };

RealGrid synthesize_image(SynthKind kind, std::size_t height, std::size_t width,
                          std::uint64_t seed);

/// Image i is synthesize_image(kind, h, w, derive_seed(seed, "synth", i)).
std::vector<RealGrid> synthesize_dataset(SynthKind kind, std::size_t count, std::size_t height,
                                         std::size_t width, std::uint64_t seed);

}  // namespace refpr
