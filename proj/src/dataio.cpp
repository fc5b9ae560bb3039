#include "refpr/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace refpr {
namespace {

bool is_space(std::uint8_t ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f';
}

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t read_uint(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw ParseError(std::string("PGM: missing ") + what, pos_);
    if (bytes_[pos_] < '0' || bytes_[pos_] > '9') {
      throw ParseError(std::string("PGM: expected digit for ") + what, pos_);
    }
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 0xFFFFFFFFULL) throw ParseError(std::string("PGM: ") + what + " too large", pos_);
      ++pos_;
    }
    return value;
  }

  void expect_single_space() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw ParseError("PGM: expected whitespace after maxval", pos_);
    }
    ++pos_;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 2;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(std::string("reference file truncated reading ") + what, pos_);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading", path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed", path);
  return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed", path);
}

RealGrid decode_pgm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw ParseError("PGM: bad magic, expected P5", 0);
  }
  HeaderReader header(bytes);
  const std::uint64_t width = header.read_uint("width");
  const std::uint64_t height = header.read_uint("height");
  const std::uint64_t maxval = header.read_uint("maxval");
  header.expect_single_space();
  if (width == 0 || height == 0) throw FormatError("PGM: zero width or height");
  if (width > (1u << 20) || height > (1u << 20)) throw FormatError("PGM: dimensions too large");
  if (maxval == 0 || maxval > 65535) {
    throw FormatError("PGM: unsupported maxval " + std::to_string(maxval));
  }
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t start = header.offset();
  const std::uint64_t needed = width * height * sample_bytes;
  if (bytes.size() - start < needed) {
    throw ParseError("PGM: truncated pixel data (" + std::to_string(bytes.size() - start) +
                         " of " + std::to_string(needed) + " bytes)",
                     bytes.size());
  }
  RealGrid grid(height, width);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::uint32_t sample = 0;
    if (sample_bytes == 1) {
      sample = bytes[start + i];
    } else {
      sample = (static_cast<std::uint32_t>(bytes[start + 2 * i]) << 8) | bytes[start + 2 * i + 1];
    }
    if (sample > maxval) {
      throw FormatError("PGM: sample " + std::to_string(sample) + " exceeds maxval");
    }
    grid[i] = static_cast<double>(sample) * scale;
  }
  return grid;
}

std::vector<std::uint8_t> encode_pgm(const RealGrid& grid, std::uint32_t maxval) {
  if (grid.empty()) throw DimensionError("PGM: empty grid");
  if (maxval == 0 || maxval > 65535) {
    throw ParameterError("PGM: unsupported maxval " + std::to_string(maxval));
  }
  const std::string header = "P5\n" + std::to_string(grid.width()) + " " +
                             std::to_string(grid.height()) + "\n" + std::to_string(maxval) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const bool wide = maxval > 255;
  out.reserve(out.size() + grid.size() * (wide ? 2 : 1));
  for (double v : grid.values()) {
    const double clamped = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    const auto q = static_cast<std::uint32_t>(std::floor(clamped * maxval + 0.5));
    if (wide) {
      out.push_back(static_cast<std::uint8_t>(q >> 8));
      out.push_back(static_cast<std::uint8_t>(q & 0xFF));
    } else {
      out.push_back(static_cast<std::uint8_t>(q));
    }
  }
  return out;
}

RealGrid load_pgm(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return decode_pgm(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.reason(), e.byte_offset());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_pgm(const RealGrid& grid, const std::string& path, std::uint32_t maxval) {
  write_file(path, encode_pgm(grid, maxval));
}

std::vector<std::uint8_t> encode_reference(const ReferenceSignal& ref) {
  const RealGrid& v = ref.values;
  if (v.empty()) throw DimensionError("reference: empty grid");
  if (v.height() > 0xFFFFFFFFu || v.width() > 0xFFFFFFFFu) {
    throw DimensionError("reference: dims exceed 32 bits");
  }
  if (ref.support) require_same_shape(v, *ref.support, "reference mask");
  std::vector<std::uint8_t> out = {'R', 'F', 'U', '1'};
  out.reserve(29 + v.size() * 9);
  put_u32(out, static_cast<std::uint32_t>(v.height()));
  put_u32(out, static_cast<std::uint32_t>(v.width()));
  put_f64(out, ref.lo);
  put_f64(out, ref.hi);
  out.push_back(ref.support ? 1 : 0);
  for (double x : v.values()) put_f64(out, x);
  if (ref.support) {
    for (std::uint8_t m : ref.support->values()) out.push_back(m ? 1 : 0);
  }
  return out;
}

ReferenceSignal decode_reference(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || bytes[0] != 'R' || bytes[1] != 'F' || bytes[2] != 'U' || bytes[3] != '1') {
    throw FormatError("reference file: bad magic, expected RFU1");
  }
  ByteReader in(bytes);
  in.u32("magic");
  const std::uint32_t height = in.u32("height");
  const std::uint32_t width = in.u32("width");
  ReferenceSignal ref;
  ref.lo = in.f64("lo");
  ref.hi = in.f64("hi");
  const std::uint8_t mask_present = in.u8("mask flag");
  if (height == 0 || width == 0) throw FormatError("reference file: zero dims");
  if (mask_present > 1) throw FormatError("reference file: mask flag must be 0 or 1");
  if (!(ref.lo <= ref.hi)) throw FormatError("reference file: lo > hi");
  const std::uint64_t count = static_cast<std::uint64_t>(height) * width;
  const std::uint64_t needed = count * 8 + (mask_present ? count : 0);
  if (in.remaining() < needed) {
    throw ParseError("reference file truncated: payload needs " + std::to_string(needed) +
                         " bytes",
                     in.offset());
  }
  if (in.remaining() > needed) {
    throw FormatError("reference file: " + std::to_string(in.remaining() - needed) +
                      " trailing bytes");
  }
  ref.values = RealGrid(height, width);
  for (std::size_t i = 0; i < count; ++i) {
    const double v = in.f64("value");
    if (!(v >= ref.lo && v <= ref.hi)) {
      throw FormatError("reference file: value " + std::to_string(i) + " outside [lo, hi]");
    }
    ref.values[i] = v;
  }
  if (mask_present) {
    MaskGrid mask(height, width);
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint8_t m = in.u8("mask");
      if (m > 1) throw FormatError("reference file: mask byte must be 0 or 1");
      if (m == 0 && ref.values[i] != 0.0) {
        throw FormatError("reference file: nonzero value outside mask");
      }
      mask[i] = m;
    }
    ref.support = std::move(mask);
  }
  return ref;
}

void save_reference(const ReferenceSignal& ref, const std::string& path) {
  write_file(path, encode_reference(ref));
}

ReferenceSignal load_reference(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return decode_reference(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.reason(), e.byte_offset());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

DatasetManifest parse_manifest(const std::string& text, const std::string& base_dir) {
  DatasetManifest manifest;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    if (trimmed[0] == '#') {
      const std::string body = trim(trimmed.substr(1));
      if (body.rfind("split:", 0) == 0) {
        const std::string value = trim(body.substr(6));
        if (value == "train") {
          manifest.split = DatasetSplit::kTrain;
        } else if (value == "test") {
          manifest.split = DatasetSplit::kTest;
        } else {
          throw ParseError("manifest: unknown split '" + value + "'", line_offset);
        }
      } else if (body.rfind("dims:", 0) == 0) {
        const std::string value = trim(body.substr(5));
        std::size_t h = 0;
        std::size_t w = 0;
        char sep = 0;
        std::istringstream dims(value);
        if (!(dims >> h >> sep >> w) || sep != 'x' || h == 0 || w == 0) {
          throw ParseError("manifest: dims must look like HxW", line_offset);
        }
        manifest.image_height = h;
        manifest.image_width = w;
      }
      continue;
    }
    ManifestEntry entry;
    const auto tab = trimmed.find('\t');
    std::string path = tab == std::string::npos ? trimmed : trim(trimmed.substr(0, tab));
    if (tab != std::string::npos) entry.label = trim(trimmed.substr(tab + 1));
    std::filesystem::path p(path);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    entry.path = p.lexically_normal().string();
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::string& path) {
  const auto bytes = read_file(path);
  const std::string text(bytes.begin(), bytes.end());
  const std::string base = std::filesystem::path(path).parent_path().string();
  DatasetManifest manifest = parse_manifest(text, base);
  for (const ManifestEntry& e : manifest.entries) {
    if (!std::filesystem::exists(e.path)) throw IoError("manifest entry does not exist", e.path);
  }
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::string text;
  if (manifest.split != DatasetSplit::kUnspecified) {
    text += std::string("# split: ") + (manifest.split == DatasetSplit::kTrain ? "train" : "test") + "\n";
  }
  if (manifest.image_height && manifest.image_width) {
    text += "# dims: " + std::to_string(*manifest.image_height) + "x" +
            std::to_string(*manifest.image_width) + "\n";
  }
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (const ManifestEntry& e : manifest.entries) {
    std::filesystem::path p(e.path);
    if (!base.empty() && p.is_absolute() == base.is_absolute()) {
      const auto rel = p.lexically_relative(base);
      if (!rel.empty()) p = rel;
    }
    text += p.generic_string();
    if (e.label) text += "\t" + *e.label;
    text += "\n";
  }
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<RealGrid> load_dataset(const DatasetManifest& manifest) {
  std::vector<RealGrid> images;
  images.reserve(manifest.entries.size());
  for (const ManifestEntry& e : manifest.entries) {
    RealGrid img = load_pgm(e.path);
    const std::size_t h = manifest.image_height.value_or(images.empty() ? img.height()
                                                                        : images.front().height());
    const std::size_t w = manifest.image_width.value_or(images.empty() ? img.width()
                                                                       : images.front().width());
    if (img.height() != h || img.width() != w) {
      throw DimensionError("dataset image " + e.path + " is " +
                           shape_string(img.height(), img.width()) + ", expected " +
                           shape_string(h, w));
    }
    images.push_back(std::move(img));
  }
  return images;
}

RealGrid resize_image(const RealGrid& grid, std::size_t height, std::size_t width,
                      ResizeMethod method) {
  if (grid.empty()) throw DimensionError("resize: empty grid");
  if (height == 0 || width == 0) throw DimensionError("resize: target dims must be positive");
  const std::size_t sh = grid.height();
  const std::size_t sw = grid.width();
  auto source_coord = [](std::size_t i, std::size_t src, std::size_t dst) {
    if (dst == 1 || src == 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(src - 1) / static_cast<double>(dst - 1);
  };
  RealGrid out(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    const double fr = source_coord(r, sh, height);
    for (std::size_t c = 0; c < width; ++c) {
      const double fc = source_coord(c, sw, width);
      if (method == ResizeMethod::kNearest) {
        const auto nr = std::min(sh - 1, static_cast<std::size_t>(std::floor(fr + 0.5)));
        const auto nc = std::min(sw - 1, static_cast<std::size_t>(std::floor(fc + 0.5)));
        out(r, c) = grid(nr, nc);
        continue;
      }
      const auto r0 = std::min(sh - 1, static_cast<std::size_t>(std::floor(fr)));
      const auto c0 = std::min(sw - 1, static_cast<std::size_t>(std::floor(fc)));
      const std::size_t r1 = std::min(sh - 1, r0 + 1);
      const std::size_t c1 = std::min(sw - 1, c0 + 1);
      const double tr = fr - static_cast<double>(r0);
      const double tc = fc - static_cast<double>(c0);
      // a + t (b - a) reproduces constant regions exactly.
      const double top = grid(r0, c0) + tc * (grid(r0, c1) - grid(r0, c0));
      const double bottom = grid(r1, c0) + tc * (grid(r1, c1) - grid(r1, c0));
      out(r, c) = top + tr * (bottom - top);
    }
  }
  return out;
}

}  // namespace refpr
