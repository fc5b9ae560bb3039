#include "refpr/solver.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "refpr/rng.hpp"

namespace refpr {

void SolverConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ParameterError("solver: alpha must be finite and > 0");
  }
  if (!alpha_per_layer.empty()) {
    if (alpha_per_layer.size() != layers) {
      throw ParameterError("solver: alpha list has " + std::to_string(alpha_per_layer.size()) +
                           " entries for " + std::to_string(layers) + " layers");
    }
    for (double a : alpha_per_layer) {
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw ParameterError("solver: every per-layer alpha must be finite and > 0");
      }
    }
  }
  if (!(epsilon_phase > 0.0)) throw ParameterError("solver: epsilon_phase must be > 0");
}

ComplexGrid phase(const ComplexGrid& z, double epsilon) {
  if (!(epsilon > 0.0)) throw ParameterError("phase: epsilon must be > 0");
  ComplexGrid out(z.height(), z.width());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = z[i] / std::max(std::abs(z[i]), epsilon);
  }
  return out;
}

void residual_field(const ComplexGrid& z, const RealGrid& y, const SolverConfig& cfg,
                    ComplexGrid& out) {
  require_same_shape(z, y, "residual_field");
  if (!out.same_shape(z)) out = ComplexGrid(z.height(), z.width());
  if (cfg.mode == MeasurementMode::kAmplitude) {
    const double eps = cfg.epsilon_phase;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double modulus = std::sqrt(std::norm(z[i]));
      out[i] = z[i] * ((modulus - y[i]) / std::max(modulus, eps));
    }
  } else {
    for (std::size_t i = 0; i < z.size(); ++i) {
      out[i] = z[i] * (std::norm(z[i]) - y[i]);
    }
  }
}

double data_misfit(const ComplexGrid& z, const RealGrid& y, MeasurementMode mode) {
  require_same_shape(z, y, "data_misfit");
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double sq = std::norm(z[i]);
    const double model = mode == MeasurementMode::kAmplitude ? std::sqrt(sq) : sq;
    acc += (y[i] - model) * (y[i] - model);
  }
  return acc;
}

namespace {

void check_measurements(const AmplitudeMeasurements& y, const MeasurementOperator& op,
                        MeasurementMode mode) {
  if (y.values.height() != op.canvas_height() || y.values.width() != op.canvas_width()) {
    throw DimensionError("measurements " + shape_string(y.values.height(), y.values.width()) +
                         " do not match canvas " +
                         shape_string(op.canvas_height(), op.canvas_width()));
  }
  if (y.mode != mode) throw ParameterError("measurement mode does not match solver mode");
}

}  // namespace

RealGrid grad_x(const RealGrid& x, const RealGrid& u, const AmplitudeMeasurements& y,
                const MeasurementOperator& op, const SolverConfig& cfg) {
  check_measurements(y, op, cfg.mode);
  require_same_shape(x, u, "grad_x: x vs u");
  ComplexGrid z = op.apply(x);
  const ComplexGrid zu = op.apply(u);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += zu[i];
  ComplexGrid r;
  residual_field(z, y.values, cfg, r);
  RealGrid g = op.adjoint(r);
  for (double& v : g.values()) v *= 2.0;
  return g;
}

SolveResult solve_unrolled(const AmplitudeMeasurements& y, const RealGrid& u,
                           const MeasurementOperator& op, const SolverConfig& cfg,
                           bool record) {
  cfg.validate();
  check_measurements(y, op, cfg.mode);
  const ComplexGrid zu = op.apply(u);

  SolveResult result;
  RealGrid& x = result.estimate;
  x = RealGrid(op.signal_height(), op.signal_width());
  ComplexGrid z(op.canvas_height(), op.canvas_width());
  ComplexGrid r;
  RealGrid g;

  auto field_at = [&](const RealGrid& xk) {
    op.apply_into(xk, z);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += zu[i];
  };

  if (record) result.trace.iterates.push_back(x);
  for (std::size_t k = 0; k < cfg.layers; ++k) {
    field_at(x);
    if (record) {
      result.trace.residual_norms.push_back(data_misfit(z, y.values, cfg.mode));
      result.trace.phases.push_back(phase(z, cfg.epsilon_phase));
    }
    residual_field(z, y.values, cfg, r);
    op.adjoint_into(r, g);
    const double step = 2.0 * cfg.step(k);
    double check = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] -= step * g[i];
      check += x[i];
    }
    if (!std::isfinite(check)) {
      throw DivergenceError("solve_unrolled: non-finite iterate at layer " + std::to_string(k),
                            k);
    }
    if (record) result.trace.iterates.push_back(x);
  }
  if (record) {
    field_at(x);
    result.trace.residual_norms.push_back(data_misfit(z, y.values, cfg.mode));
  }
  return result;
}

namespace {

// Amplitudes that replace the Fourier modulus in the HIO projection.
RealGrid target_moduli(const AmplitudeMeasurements& y) {
  RealGrid m = y.values;
  if (y.mode == MeasurementMode::kSquaredAmplitude) {
    for (double& v : m.values()) v = std::sqrt(std::max(v, 0.0));
  }
  return m;
}

// g' = Re ifft2( m * phase(fft2(g)) ) on the full canvas.
void fourier_projection(const RealGrid& g, const RealGrid& moduli, const Fft2d& fft,
                        ComplexGrid& work, RealGrid& out) {
  fft.forward_real(g.data(), g.height(), g.width(), g.width(), work);
  for (std::size_t i = 0; i < work.size(); ++i) {
    const double re = work[i].real();
    const double im = work[i].imag();
    const double modulus = std::sqrt(re * re + im * im);
    work[i] = modulus > 0.0 ? Complex(re * (moduli[i] / modulus), im * (moduli[i] / modulus))
                            : Complex(moduli[i], 0.0);
  }
  fft.inverse_real(work, g.height(), g.width(), out.data(), out.width());
}

}  // namespace

RealGrid solve_hio(const AmplitudeMeasurements& y, const MeasurementOperator& op,
                   const HioConfig& cfg) {
  if (cfg.iterations < 1) throw ParameterError("hio: iterations must be >= 1");
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) throw ParameterError("hio: beta must lie in (0, 1)");
  check_measurements(y, op, y.mode);

  const std::size_t ch = op.canvas_height();
  const std::size_t cw = op.canvas_width();
  const std::size_t sh = op.signal_height();
  const std::size_t sw = op.signal_width();
  const Fft2d& fft = op.canvas_transform();
  const RealGrid moduli = target_moduli(y);

  ComplexGrid work(ch, cw);
  Rng rng(cfg.seed);
  for (std::size_t i = 0; i < work.size(); ++i) {
    work[i] = std::polar(moduli[i], 2.0 * std::numbers::pi * rng.uniform());
  }
  fft.inverse(work);
  RealGrid g(ch, cw);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = work[i].real();

  RealGrid projected(ch, cw);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    fourier_projection(g, moduli, fft, work, projected);
    for (std::size_t r = 0; r < ch; ++r) {
      for (std::size_t c = 0; c < cw; ++c) {
        const double p = projected(r, c);
        const bool inside = r < sh && c < sw;
        g(r, c) = (inside && p >= 0.0) ? p : g(r, c) - cfg.beta * p;
      }
    }
  }
  // Final error-reduction step: Fourier projection, then support and positivity.
  fourier_projection(g, moduli, fft, work, projected);
  RealGrid out(sh, sw);
  for (std::size_t r = 0; r < sh; ++r) {
    for (std::size_t c = 0; c < sw; ++c) out(r, c) = std::max(projected(r, c), 0.0);
  }
  return out;
}

RealGrid solve_hio_best_of(const AmplitudeMeasurements& y, const MeasurementOperator& op,
                           const HioConfig& cfg, std::size_t restarts) {
  if (restarts < 1) throw ParameterError("hio: restarts must be >= 1");
  RealGrid best;
  double best_misfit = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < restarts; ++s) {
    HioConfig run = cfg;
    run.seed = derive_seed(cfg.seed, "hio", s);
    RealGrid estimate = solve_hio(y, op, run);
    const ComplexGrid z = op.apply(estimate);
    const double misfit = data_misfit(z, y.values, y.mode);
    if (misfit < best_misfit || best.empty()) {
      best_misfit = misfit;
      best = std::move(estimate);
    }
  }
  return best;
}

RealGrid make_reference(ReferenceKind kind, std::size_t height, std::size_t width, double lo,
                        double hi, std::uint64_t seed) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ParameterError("make_reference: invalid range [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
  }
  if (height == 0 || width == 0) throw DimensionError("make_reference: empty dims");
  RealGrid u(height, width);
  switch (kind) {
    case ReferenceKind::kZero:
      break;
    case ReferenceKind::kFlat:
      for (double& v : u.values()) v = 0.5 * (lo + hi);
      break;
    case ReferenceKind::kRandom: {
      Rng rng(seed);
      for (double& v : u.values()) v = rng.uniform(lo, hi);
      break;
    }
  }
  return u;
}

}  // namespace refpr
