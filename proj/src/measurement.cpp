#include "refpr/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "refpr/rng.hpp"

namespace refpr {

MeasurementOperator::MeasurementOperator(std::size_t signal_height, std::size_t signal_width,
                                         MeasurementMode mode)
    : signal_height_(signal_height),
      signal_width_(signal_width),
      mode_(mode),
      fft_((signal_height == 0 || signal_width == 0)
               ? throw DimensionError("MeasurementOperator: empty signal dims")
               : 2 * signal_height,
           2 * signal_width) {}

void MeasurementOperator::check_signal(const RealGrid& g) const {
  if (g.height() != signal_height_ || g.width() != signal_width_) {
    throw DimensionError("measurement: signal " + shape_string(g.height(), g.width()) +
                         " does not match operator " +
                         shape_string(signal_height_, signal_width_));
  }
}

void MeasurementOperator::check_canvas(const ComplexGrid& c) const {
  if (c.height() != canvas_height() || c.width() != canvas_width()) {
    throw DimensionError("measurement: canvas " + shape_string(c.height(), c.width()) +
                         " does not match operator " +
                         shape_string(canvas_height(), canvas_width()));
  }
}

void MeasurementOperator::apply_into(const RealGrid& g, ComplexGrid& out) const {
  check_signal(g);
  fft_.forward_real(g.data(), signal_height_, signal_width_, signal_width_, out);
}

ComplexGrid MeasurementOperator::apply(const RealGrid& g) const {
  ComplexGrid out(canvas_height(), canvas_width());
  apply_into(g, out);
  return out;
}

void MeasurementOperator::adjoint_into(const ComplexGrid& c, RealGrid& out) const {
  check_canvas(c);
  if (out.height() != signal_height_ || out.width() != signal_width_) {
    out = RealGrid(signal_height_, signal_width_);
  }
  fft_.inverse_real(c, signal_height_, signal_width_, out.data(), signal_width_);
}

RealGrid MeasurementOperator::adjoint(const ComplexGrid& c) const {
  RealGrid out;
  adjoint_into(c, out);
  return out;
}

void NoiseModel::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("noise: sigma must be finite and >= 0");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("noise: lambda must be finite and >= 0");
  }
}

double NoisyMeasurements::snr_db() const {
  if (noise_norm == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(clean_norm / noise_norm);
}

void measure_field(const ComplexGrid& z, MeasurementMode mode, RealGrid& out) {
  if (!out.same_shape(z)) out = RealGrid(z.height(), z.width());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double sq = std::norm(z[i]);
    out[i] = mode == MeasurementMode::kAmplitude ? std::sqrt(sq) : sq;
  }
}

NoisyMeasurements forward_with_stats(const MeasurementOperator& op, const RealGrid& x,
                                     const RealGrid& u, const NoiseModel& noise) {
  require_same_shape(x, u, "forward: target vs reference");
  noise.validate();
  ComplexGrid z = op.apply(x);
  const ComplexGrid zu = op.apply(u);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += zu[i];

  NoisyMeasurements result;
  result.measurements.mode = op.mode();
  RealGrid& y = result.measurements.values;
  measure_field(z, op.mode(), y);
  result.clean_norm = std::sqrt(squared_norm(y));

  if (noise.kind == NoiseKind::kNone) return result;

  // Row-major draw order; one normal per canvas entry.
  Rng rng(noise.seed);
  double noise_sq = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double std_dev = noise.kind == NoiseKind::kGaussian
                               ? noise.sigma
                               : std::sqrt(noise.lambda * std::abs(z[i]));
    const double clean = y[i];
    const double noisy = std::max(0.0, clean + std_dev * rng.normal());
    noise_sq += (noisy - clean) * (noisy - clean);
    y[i] = noisy;
  }
  result.noise_norm = std::sqrt(noise_sq);
  return result;
}

AmplitudeMeasurements forward(const MeasurementOperator& op, const RealGrid& x,
                              const RealGrid& u, const NoiseModel& noise) {
  return forward_with_stats(op, x, u, noise).measurements;
}

}  // namespace refpr
