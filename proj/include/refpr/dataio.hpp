#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "refpr/grid.hpp"
#include "refpr/trainer.hpp"

namespace refpr {

// --- PGM (Netpbm P5) -------------------------------------------------------

/// Parses a binary PGM. Samples are scaled to [0, 1] by maxval. Accepts
/// maxval 1..65535; 16-bit samples are big-endian as Netpbm requires.
RealGrid decode_pgm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_pgm(const RealGrid& grid, std::uint32_t maxval = 255);

RealGrid load_pgm(const std::string& path);
/// Clamps to [0, 1] and quantizes with round-half-up.
void write_pgm(const RealGrid& grid, const std::string& path, std::uint32_t maxval = 255);

// --- Reference file ("RFU1") ---------------------------------------------
//
//   offset  size        field
//   0       4           magic "RFU1"
//   4       4           height, u32 little-endian
//   8       4           width, u32 little-endian
//   12      8           lo, IEEE-754 binary64 little-endian
//   20      8           hi, IEEE-754 binary64 little-endian
//   28      1           mask_present (0 or 1)
//   29      8*h*w       values, binary64 little-endian, row-major
//   ...     h*w         mask bytes (0/1), only when mask_present == 1

std::vector<std::uint8_t> encode_reference(const ReferenceSignal& ref);
ReferenceSignal decode_reference(const std::vector<std::uint8_t>& bytes);

void save_reference(const ReferenceSignal& ref, const std::string& path);
ReferenceSignal load_reference(const std::string& path);

// --- Dataset manifests ------------------------------------------------------

enum class DatasetSplit { kUnspecified, kTrain, kTest };

struct ManifestEntry {
  std::string path;  // resolved against the manifest's directory
  std::optional<std::string> label;
};

/// UTF-8 text, one image path per line, optionally followed by a tab and a
/// label. Lines starting with '#' are comments; "# split: train|test" and
/// "# dims: HxW" comments set the split and expected image size.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  DatasetSplit split = DatasetSplit::kUnspecified;
  std::optional<std::size_t> image_height;
  std::optional<std::size_t> image_width;
};

DatasetManifest parse_manifest(const std::string& text, const std::string& base_dir);
DatasetManifest load_manifest(const std::string& path);
void write_manifest(const DatasetManifest& manifest, const std::string& path);

/// Loads every image of the manifest in order; fails on the first missing or
/// malformed file, or on a size mismatch.
std::vector<RealGrid> load_dataset(const DatasetManifest& manifest);

// --- Resizing ----------------------------------------------------------------

enum class ResizeMethod { kNearest, kBilinear };

/// Align-corners resampling: output pixel i maps to source coordinate
/// i * (src - 1) / (dst - 1), so corner pixel centres coincide.
RealGrid resize_image(const RealGrid& grid, std::size_t height, std::size_t width,
                      ResizeMethod method = ResizeMethod::kBilinear);

// --- Files -------------------------------------------------------------------

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace refpr
