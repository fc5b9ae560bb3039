#include "refpr/fft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace refpr {
namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// (a + ib)(c + id) without the NaN/Inf recovery of the library operator.
inline void mul_into(double& re, double& im, double wr, double wi) {
  const double r = re * wr - im * wi;
  im = re * wi + im * wr;
  re = r;
}

void scale_all(ComplexGrid& g, double s) {
  for (Complex& v : g.values()) v *= s;
}

}  // namespace

FftPlan::FftPlan(std::size_t length) : length_(length), power_of_two_(is_power_of_two(length)) {
  if (length == 0) throw DimensionError("FftPlan: zero length");
  if (power_of_two_) {
    const int bits = std::countr_zero(length);
    bit_reverse_.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
      std::size_t rev = 0;
      for (int b = 0; b < bits; ++b) rev |= ((i >> b) & 1u) << (bits - 1 - b);
      bit_reverse_[i] = rev;
    }
    twiddles_.resize(length / 2);
    for (std::size_t k = 0; k < length / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(length);
      twiddles_[k] = Complex(std::cos(angle), std::sin(angle));
    }
    inverse_twiddles_.resize(twiddles_.size());
    for (std::size_t k = 0; k < twiddles_.size(); ++k) inverse_twiddles_[k] = std::conj(twiddles_[k]);
    return;
  }

  // Bluestein: X_k = c_k * sum_j (x_j c_j) conj(c_{k-j}), c_k = exp(-i pi k^2/n).
  const std::size_t n = length;
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  inner_ = std::make_unique<FftPlan>(m);
  chirp_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small for large k.
    const std::size_t k2 = (k * k) % (2 * n);
    const double angle = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp_[k] = Complex(std::cos(angle), std::sin(angle));
  }
  chirp_filter_.assign(m, Complex{});
  chirp_filter_[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n; ++k) {
    chirp_filter_[k] = std::conj(chirp_[k]);
    chirp_filter_[m - k] = std::conj(chirp_[k]);
  }
  inner_->forward(chirp_filter_);
}

FftPlan::~FftPlan() = default;
FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;

void FftPlan::forward(std::span<Complex> data) const {
  if (data.size() != length_) throw DimensionError("FftPlan: length mismatch");
  if (power_of_two_) {
    radix2(data, false);
  } else {
    bluestein(data, false);
  }
}

void FftPlan::inverse(std::span<Complex> data) const {
  if (data.size() != length_) throw DimensionError("FftPlan: length mismatch");
  if (power_of_two_) {
    radix2(data, true);
  } else {
    bluestein(data, true);
  }
}

void FftPlan::radix2(std::span<Complex> a, bool inverse) const {
  const std::size_t n = length_;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = bit_reverse_[i];
    if (i < j) std::swap(a[i], a[j]);
  }
  const Complex* tw = inverse ? inverse_twiddles_.data() : twiddles_.data();
  double* d = reinterpret_cast<double*>(a.data());
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const Complex w = tw[j * stride];
        double* u = d + 2 * (start + j);
        double* v = d + 2 * (start + j + half);
        double vr = v[0];
        double vi = v[1];
        mul_into(vr, vi, w.real(), w.imag());
        v[0] = u[0] - vr;
        v[1] = u[1] - vi;
        u[0] += vr;
        u[1] += vi;
      }
    }
  }
}

void FftPlan::transform_strided(Complex* data, std::size_t stride, std::size_t count,
                                bool inverse) const {
  const std::size_t n = length_;
  if (!power_of_two_) {
    std::vector<Complex> seq(n);
    for (std::size_t c = 0; c < count; ++c) {
      for (std::size_t j = 0; j < n; ++j) seq[j] = data[j * stride + c];
      bluestein(seq, inverse);
      for (std::size_t j = 0; j < n; ++j) data[j * stride + c] = seq[j];
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = bit_reverse_[i];
    if (i < j) std::swap_ranges(data + i * stride, data + i * stride + count, data + j * stride);
  }
  const Complex* tw = inverse ? inverse_twiddles_.data() : twiddles_.data();
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t tstride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const double wr = tw[j * tstride].real();
        const double wi = tw[j * tstride].imag();
        double* u = reinterpret_cast<double*>(data + (start + j) * stride);
        double* v = reinterpret_cast<double*>(data + (start + j + half) * stride);
        for (std::size_t c = 0; c < 2 * count; c += 2) {
          const double vr = v[c] * wr - v[c + 1] * wi;
          const double vi = v[c] * wi + v[c + 1] * wr;
          v[c] = u[c] - vr;
          v[c + 1] = u[c + 1] - vi;
          u[c] += vr;
          u[c + 1] += vi;
        }
      }
    }
  }
}

void FftPlan::bluestein(std::span<Complex> data, bool inverse) const {
  // The inverse DFT is conj(DFT(conj(x))).
  const std::size_t n = length_;
  const std::size_t m = inner_->length();
  std::vector<Complex> work(m);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex x = inverse ? std::conj(data[k]) : data[k];
    work[k] = x * chirp_[k];
  }
  inner_->forward(work);
  for (std::size_t k = 0; k < m; ++k) work[k] *= chirp_filter_[k];
  inner_->inverse(work);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex X = work[k] * inv_m * chirp_[k];
    data[k] = inverse ? std::conj(X) : X;
  }
}

Fft2d::Fft2d(std::size_t height, std::size_t width)
    : row_plan_(width),
      col_plan_(height),
      scale_(1.0 / std::sqrt(static_cast<double>(height) * static_cast<double>(width))) {}

void Fft2d::check(const ComplexGrid& g) const {
  if (g.empty()) throw DimensionError("fft2: empty grid");
  if (g.height() != height() || g.width() != width()) {
    throw DimensionError("fft2: plan " + shape_string(height(), width()) + " applied to " +
                         shape_string(g.height(), g.width()));
  }
}

void Fft2d::forward(ComplexGrid& g) const { forward_row_limited(g, height()); }

void Fft2d::inverse(ComplexGrid& g) const { inverse_col_limited(g, width()); }

void Fft2d::forward_row_limited(ComplexGrid& g, std::size_t nonzero_rows) const {
  check(g);
  const std::size_t w = width();
  const std::size_t rows = std::min(nonzero_rows, height());
  for (std::size_t r = 0; r < rows; ++r) row_plan_.forward(std::span<Complex>(g.data() + r * w, w));
  col_plan_.transform_strided(g.data(), w, w, false);
  scale_all(g, scale_);
}

void Fft2d::inverse_col_limited(ComplexGrid& g, std::size_t needed_cols) const {
  check(g);
  const std::size_t cols = std::min(needed_cols, width());
  const std::size_t w = width();
  for (std::size_t r = 0; r < height(); ++r) row_plan_.inverse(std::span<Complex>(g.data() + r * w, w));
  col_plan_.transform_strided(g.data(), w, cols, true);
  if (cols == w) {
    scale_all(g, scale_);
  } else {
    for (std::size_t r = 0; r < height(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) g.data()[r * w + c] *= scale_;
    }
  }
}

// Two real rows are transformed at once as the real and imaginary parts of one
// complex row; the spectra separate by conjugate symmetry.
void Fft2d::forward_real(const double* src, std::size_t rows, std::size_t cols,
                         std::size_t src_stride, ComplexGrid& out) const {
  const std::size_t h = height();
  const std::size_t w = width();
  if (rows > h || cols > w) throw DimensionError("fft2: real block exceeds the plan");
  if (out.height() != h || out.width() != w) out = ComplexGrid(h, w);
  const std::size_t half = w / 2 + 1;
  thread_local std::vector<Complex> row;
  row.assign(w, Complex{});
  Complex* o = out.data();
  for (std::size_t r = 0; r < rows; r += 2) {
    const bool pair = r + 1 < rows;
    const double* a = src + r * src_stride;
    const double* b = pair ? a + src_stride : nullptr;
    for (std::size_t c = 0; c < cols; ++c) row[c] = Complex(a[c], pair ? b[c] : 0.0);
    std::fill(row.begin() + cols, row.end(), Complex{});
    row_plan_.forward(row);
    for (std::size_t k = 0; k < half; ++k) {
      const Complex p = row[k];
      const Complex q = std::conj(row[(w - k) % w]);
      o[r * w + k] = Complex(0.5 * (p.real() + q.real()), 0.5 * (p.imag() + q.imag()));
      if (pair) o[(r + 1) * w + k] = Complex(0.5 * (p.imag() - q.imag()), -0.5 * (p.real() - q.real()));
    }
  }
  for (std::size_t r = rows; r < h; ++r) std::fill(o + r * w, o + r * w + half, Complex{});
  col_plan_.transform_strided(o, w, half, false);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t k = 0; k < half; ++k) o[r * w + k] *= scale_;
  }
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t mr = (h - r) % h;
    for (std::size_t k = half; k < w; ++k) o[r * w + k] = std::conj(o[mr * w + (w - k)]);
  }
}

// Re(ifft2(F)) equals ifft2 of the conjugate-symmetric part of F, whose
// columns beyond w/2 are redundant and whose rows after the column pass are
// conjugate symmetric, so two output rows share one complex row transform.
void Fft2d::inverse_real(const ComplexGrid& spectrum, std::size_t rows, std::size_t cols,
                         double* dst, std::size_t dst_stride) const {
  check(spectrum);
  const std::size_t h = height();
  const std::size_t w = width();
  if (rows > h || cols > w) throw DimensionError("ifft2: real block exceeds the plan");
  const std::size_t half = w / 2 + 1;
  thread_local std::vector<Complex> sym;
  thread_local std::vector<Complex> row;
  sym.resize(h * half);
  row.resize(w);
  const Complex* f = spectrum.data();
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t mr = (h - r) % h;
    for (std::size_t k = 0; k < half; ++k) {
      const Complex p = f[r * w + k];
      const Complex q = f[mr * w + (w - k) % w];
      sym[r * half + k] = Complex(0.5 * (p.real() + q.real()), 0.5 * (p.imag() - q.imag()));
    }
  }
  col_plan_.transform_strided(sym.data(), half, half, true);
  for (std::size_t r = 0; r < rows; r += 2) {
    const bool pair = r + 1 < rows;
    const Complex* a = sym.data() + r * half;
    const Complex* b = pair ? a + half : nullptr;
    for (std::size_t k = 0; k < w; ++k) {
      Complex ga;
      Complex gb;
      if (k < half) {
        ga = a[k];
        gb = pair ? b[k] : Complex{};
      } else {
        ga = std::conj(a[w - k]);
        gb = pair ? std::conj(b[w - k]) : Complex{};
      }
      row[k] = Complex(ga.real() - gb.imag(), ga.imag() + gb.real());
    }
    row_plan_.inverse(row);
    for (std::size_t c = 0; c < cols; ++c) {
      dst[r * dst_stride + c] = row[c].real() * scale_;
      if (pair) dst[(r + 1) * dst_stride + c] = row[c].imag() * scale_;
    }
  }
}

ComplexGrid fft2(const ComplexGrid& g) {
  if (g.empty()) throw DimensionError("fft2: empty grid");
  ComplexGrid out = g;
  Fft2d(g.height(), g.width()).forward(out);
  return out;
}

ComplexGrid ifft2(const ComplexGrid& g) {
  if (g.empty()) throw DimensionError("ifft2: empty grid");
  ComplexGrid out = g;
  Fft2d(g.height(), g.width()).inverse(out);
  return out;
}

}  // namespace refpr
