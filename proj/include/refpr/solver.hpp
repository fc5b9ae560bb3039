#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "refpr/grid.hpp"
#include "refpr/measurement.hpp"

namespace refpr {

/// Hyperparameters of the unrolled solver.
struct SolverConfig {
  std::size_t layers = 50;            // unrolled gradient steps
  double alpha = 0.25;                // shared step size
  std::vector<double> alpha_per_layer;  // overrides `alpha` when non-empty
  double epsilon_phase = 1e-12;
  MeasurementMode mode = MeasurementMode::kAmplitude;

  double step(std::size_t layer) const {
    return alpha_per_layer.empty() ? alpha : alpha_per_layer[layer];
  }
  void validate() const;
};

struct SolveTrace {
  std::vector<RealGrid> iterates;     // x^0 ... x^K
  std::vector<ComplexGrid> phases;    // p at each layer
  std::vector<double> residual_norms; // L_x at x^0 ... x^K
};

struct SolveResult {
  RealGrid estimate;  // raw x^K, not clipped
  SolveTrace trace;
};

/// z / max(|z|, epsilon), entry-wise.
ComplexGrid phase(const ComplexGrid& z, double epsilon);

/// Per-entry residual that the adjoint maps to the gradient:
/// amplitude: phase(z) (|z| - y); squared amplitude: z (|z|^2 - y).
void residual_field(const ComplexGrid& z, const RealGrid& y, const SolverConfig& cfg,
                    ComplexGrid& out);

/// Gradient of L_x at x for reference u: 2 A*[residual_field(Ax + Bu, y)].
RealGrid grad_x(const RealGrid& x, const RealGrid& u, const AmplitudeMeasurements& y,
                const MeasurementOperator& op, const SolverConfig& cfg);

/// L_x(x, u) = || y - |Ax + Bu| ||^2 (or with |.|^2).
double data_misfit(const ComplexGrid& z, const RealGrid& y, MeasurementMode mode);

/// K unrolled gradient steps from x^0 = 0. With `record`, the trace holds
/// every iterate, phase and misfit. Throws DivergenceError naming the layer
/// that produced a non-finite iterate.
SolveResult solve_unrolled(const AmplitudeMeasurements& y, const RealGrid& u,
                           const MeasurementOperator& op, const SolverConfig& cfg,
                           bool record = false);

struct HioConfig {
  std::size_t iterations = 600;
  double beta = 0.9;
  std::uint64_t seed = 0;
};

/// Fienup hybrid input-output on the canvas. Support is the signal-sized
/// top-left block, with nonnegativity on the support. Starts from the
/// measured amplitudes with uniformly random phases.
RealGrid solve_hio(const AmplitudeMeasurements& y, const MeasurementOperator& op,
                   const HioConfig& cfg);

/// Runs `restarts` HIO instances with derived seeds and keeps the one whose
/// estimate best explains the measurements.
RealGrid solve_hio_best_of(const AmplitudeMeasurements& y, const MeasurementOperator& op,
                           const HioConfig& cfg, std::size_t restarts);

enum class ReferenceKind { kZero, kFlat, kRandom };

/// zero: all zeros; flat: constant (lo+hi)/2; random: i.i.d. uniform on [lo, hi].
RealGrid make_reference(ReferenceKind kind, std::size_t height, std::size_t width, double lo,
                        double hi, std::uint64_t seed);

}  // namespace refpr
