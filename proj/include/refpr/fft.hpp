#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "refpr/grid.hpp"

namespace refpr {

/// Unnormalized 1D DFT of a fixed length. Powers of two use an iterative
/// radix-2 kernel; other lengths go through Bluestein's chirp-z transform on a
/// power-of-two plan. Plans are immutable after construction and may be shared
/// across threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t length);
  ~FftPlan();
  FftPlan(FftPlan&&) noexcept;
  FftPlan& operator=(FftPlan&&) noexcept;

  std::size_t length() const noexcept { return length_; }

  /// X[k] = sum_j x[j] exp(-2 pi i jk/n), in place.
  void forward(std::span<Complex> data) const;
  /// x[j] = sum_k X[k] exp(+2 pi i jk/n), in place, no scaling.
  void inverse(std::span<Complex> data) const;

  /// Transforms `count` interleaved sequences at once: element j of sequence
  /// c lives at data[j * stride + c]. Used for the column pass of 2D
  /// transforms so butterflies sweep contiguous memory.
  void transform_strided(Complex* data, std::size_t stride, std::size_t count,
                         bool inverse) const;

 private:
  void radix2(std::span<Complex> data, bool inverse) const;
  void bluestein(std::span<Complex> data, bool inverse) const;

  std::size_t length_;
  bool power_of_two_;
  std::vector<std::size_t> bit_reverse_;
  std::vector<Complex> twiddles_;          // exp(-2 pi i k/n), k < n/2
  std::vector<Complex> inverse_twiddles_;  // conjugates
  // Bluestein state
  std::vector<Complex> chirp_;         // exp(-i pi k^2/n)
  std::vector<Complex> chirp_filter_;  // transformed conj chirp, padded
  std::unique_ptr<FftPlan> inner_;
};

/// Orthonormal 2D transform for a fixed shape: forward and inverse both scale
/// by 1/sqrt(height*width), so the pair is unitary.
class Fft2d {
 public:
  Fft2d(std::size_t height, std::size_t width);

  std::size_t height() const noexcept { return col_plan_.length(); }
  std::size_t width() const noexcept { return row_plan_.length(); }

  void forward(ComplexGrid& g) const;
  void inverse(ComplexGrid& g) const;

  /// Forward transform of a grid whose rows at index >= `nonzero_rows` are
  /// zero; skips the zero row transforms.
  void forward_row_limited(ComplexGrid& g, std::size_t nonzero_rows) const;
  /// Inverse transform where only columns < `needed_cols` of the result are
  /// used; other columns are left partially transformed.
  void inverse_col_limited(ComplexGrid& g, std::size_t needed_cols) const;

  /// Forward transform of a real grid that is zero outside its top-left
  /// rows x cols block. `src` holds that block row-major with row stride
  /// `src_stride`. The full spectrum is written to `out`.
  void forward_real(const double* src, std::size_t rows, std::size_t cols,
                    std::size_t src_stride, ComplexGrid& out) const;
  /// Real part of the inverse transform of `spectrum`, evaluated on the
  /// top-left rows x cols block and written row-major with stride `dst_stride`.
  void inverse_real(const ComplexGrid& spectrum, std::size_t rows, std::size_t cols, double* dst,
                    std::size_t dst_stride) const;

 private:
  void check(const ComplexGrid& g) const;

  FftPlan row_plan_;  // length width
  FftPlan col_plan_;  // length height
  double scale_;
};

ComplexGrid fft2(const ComplexGrid& g);
ComplexGrid ifft2(const ComplexGrid& g);

}  // namespace refpr
