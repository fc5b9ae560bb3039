#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "refpr/error.hpp"

namespace refpr {

using Complex = std::complex<double>;

/// Dense row-major 2D array. A default-constructed grid is empty; operations
/// that need data reject empty grids with a DimensionError.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(std::size_t height, std::size_t width, T fill = T{})
      : height_(height), width_(width), data_(height * width, fill) {}

  Grid(std::size_t height, std::size_t width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != height_ * width_) {
      throw DimensionError("grid data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(height_) + "x" +
                           std::to_string(width_));
    }
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const {
    return data_[row * width_ + col];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  bool same_shape(const Grid& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

using RealGrid = Grid<double>;
using ComplexGrid = Grid<Complex>;
using MaskGrid = Grid<std::uint8_t>;

std::string shape_string(std::size_t height, std::size_t width);

template <typename T, typename U>
void require_same_shape(const Grid<T>& a, const Grid<U>& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw DimensionError(std::string(what) + ": shape " +
                         shape_string(a.height(), a.width()) + " vs " +
                         shape_string(b.height(), b.width()));
  }
}

/// Embeds `g` at the top-left corner of a zero canvas.
template <typename T>
Grid<T> zero_pad(const Grid<T>& g, std::size_t canvas_height, std::size_t canvas_width) {
  if (g.empty()) throw DimensionError("zero_pad: empty grid");
  if (canvas_height < g.height() || canvas_width < g.width()) {
    throw DimensionError("zero_pad: canvas " + shape_string(canvas_height, canvas_width) +
                         " smaller than grid " + shape_string(g.height(), g.width()));
  }
  Grid<T> out(canvas_height, canvas_width);
  for (std::size_t r = 0; r < g.height(); ++r) {
    for (std::size_t c = 0; c < g.width(); ++c) out(r, c) = g(r, c);
  }
  return out;
}

/// Top-left `out_height` x `out_width` block; adjoint of zero_pad.
template <typename T>
Grid<T> crop(const Grid<T>& g, std::size_t out_height, std::size_t out_width) {
  if (out_height == 0 || out_width == 0) throw DimensionError("crop: empty output");
  if (out_height > g.height() || out_width > g.width()) {
    throw DimensionError("crop: requested " + shape_string(out_height, out_width) +
                         " exceeds grid " + shape_string(g.height(), g.width()));
  }
  Grid<T> out(out_height, out_width);
  for (std::size_t r = 0; r < out_height; ++r) {
    for (std::size_t c = 0; c < out_width; ++c) out(r, c) = g(r, c);
  }
  return out;
}

RealGrid real_part(const ComplexGrid& g);
ComplexGrid to_complex(const RealGrid& g);

/// Real inner product <a, b> = sum a*b.
double inner(const RealGrid& a, const RealGrid& b);
/// Real inner product on C^n viewed as R^{2n}: Re sum conj(a)*b.
double inner(const ComplexGrid& a, const ComplexGrid& b);
double squared_norm(const RealGrid& g);
double squared_norm(const ComplexGrid& g);
bool all_finite(const RealGrid& g);

RealGrid clip(const RealGrid& g, double lo, double hi);

}  // namespace refpr
