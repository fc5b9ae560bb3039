#pragma once

#include <cstddef>
#include <cstdint>

#include "refpr/fft.hpp"
#include "refpr/grid.hpp"

namespace refpr {

enum class MeasurementMode { kAmplitude, kSquaredAmplitude };

/// The oversampled Fourier operator used for both the target (A) and the
/// reference (B): apply = fft2 o zero_pad onto a canvas twice the signal size
/// in each dimension, adjoint = Re o crop o ifft2.
class MeasurementOperator {
 public:
  MeasurementOperator(std::size_t signal_height, std::size_t signal_width,
                      MeasurementMode mode = MeasurementMode::kAmplitude);

  std::size_t signal_height() const noexcept { return signal_height_; }
  std::size_t signal_width() const noexcept { return signal_width_; }
  std::size_t canvas_height() const noexcept { return 2 * signal_height_; }
  std::size_t canvas_width() const noexcept { return 2 * signal_width_; }
  std::size_t canvas_size() const noexcept { return canvas_height() * canvas_width(); }
  MeasurementMode mode() const noexcept { return mode_; }

  ComplexGrid apply(const RealGrid& g) const;
  RealGrid adjoint(const ComplexGrid& c) const;

  /// Same as apply/adjoint but writing into caller-owned buffers.
  /// must be canvas-sized and is clobbered.
  void apply_into(const RealGrid& g, ComplexGrid& out) const;
  void adjoint_into(const ComplexGrid& c, RealGrid& out) const;

  /// Full-canvas orthonormal transform used by reference-free baselines.
  const Fft2d& canvas_transform() const noexcept { return fft_; }

 private:
  void check_signal(const RealGrid& g) const;
  void check_canvas(const ComplexGrid& c) const;

  std::size_t signal_height_;
  std::size_t signal_width_;
  MeasurementMode mode_;
  Fft2d fft_;
};

enum class NoiseKind { kNone, kGaussian, kPoisson };

/// Additive measurement noise. Gaussian: eta ~ N(0, sigma^2). Poisson is the
/// Gaussian surrogate eta(i) ~ N(0, lambda |z(i)|).
struct NoiseModel {
  NoiseKind kind = NoiseKind::kNone;
  double sigma = 0.0;
  double lambda = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Phaseless measurements on the canvas. `values` has canvas dimensions.
struct AmplitudeMeasurements {
  RealGrid values;
  MeasurementMode mode = MeasurementMode::kAmplitude;
};

struct NoisyMeasurements {
  AmplitudeMeasurements measurements;
  double clean_norm = 0.0;  // ||clean||_2
  double noise_norm = 0.0;  // ||y - clean||_2 after clamping
  /// 20 log10(clean_norm / noise_norm); +inf when noise-free.
  double snr_db() const;
};

/// y = max(0, |Ax + Bu| + eta), or |.|^2 in squared-amplitude mode.
AmplitudeMeasurements forward(const MeasurementOperator& op, const RealGrid& x,
                              const RealGrid& u, const NoiseModel& noise = {});

NoisyMeasurements forward_with_stats(const MeasurementOperator& op, const RealGrid& x,
                                     const RealGrid& u, const NoiseModel& noise = {});

/// Noise-free measurement of a precomputed field z.
void measure_field(const ComplexGrid& z, MeasurementMode mode, RealGrid& out);

}  // namespace refpr
