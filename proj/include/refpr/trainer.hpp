#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "refpr/grid.hpp"
#include "refpr/measurement.hpp"
#include "refpr/solver.hpp"

namespace refpr {

/// A learnable reference with box bounds and an optional support mask
/// (1 = learnable, 0 = held at zero).
struct ReferenceSignal {
  RealGrid values;
  double lo = 0.0;
  double hi = 1.0;
  std::optional<MaskGrid> support;

  /// Clamps into [lo, hi] and zeroes entries off the support.
  void project();
  bool feasible() const;
};

enum class Optimizer { kPlainGd, kAdaptiveMoments };
enum class ReferenceInit { kZero, kFlatHalf, kUniformRandom };
/// Step size over outer iterations for the adaptive optimizer. kCosine scales
/// the step at iteration j by (1 + cos(pi j / J)) / 2.
enum class StepSchedule { kConstant, kCosine };

struct TrainConfig {
  std::size_t iterations = 300;  // outer iterations J
  double step = 1e-2;            // beta
  std::size_t train_size = 32;   // N
  Optimizer optimizer = Optimizer::kAdaptiveMoments;
  StepSchedule schedule = StepSchedule::kConstant;
  std::uint64_t seed = 0;
  ReferenceInit init = ReferenceInit::kUniformRandom;
  double lo = 0.0;
  double hi = 1.0;
  std::optional<MaskGrid> support;
  std::optional<RealGrid> warm_start;  // initial values; overrides `init`

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_history;  // L_u(u^j), j = 0 ... J-1
  double final_loss = 0.0;           // L_u(u^J)
  ReferenceSignal reference;
  double wall_seconds = 0.0;
};

struct LossAndGradient {
  double loss = 0.0;
  RealGrid gradient;
};

/// L_u(u) = sum_i ||x_i - x_i^K||^2 with y_i synthesized noise-free from u.
double loss_u(const RealGrid& u, std::span<const RealGrid> batch,
              const MeasurementOperator& op, const SolverConfig& cfg);

/// Loss and its exact reverse-mode gradient with respect to u, including the
/// dependence of every y_i on u and of every layer's phase on u. Entries off
/// `support` are zeroed.
LossAndGradient loss_and_grad_u(const RealGrid& u, std::span<const RealGrid> batch,
                                const MeasurementOperator& op, const SolverConfig& cfg,
                                const std::optional<MaskGrid>& support = std::nullopt);

RealGrid grad_u(const RealGrid& u, std::span<const RealGrid> batch,
                const MeasurementOperator& op, const SolverConfig& cfg,
                const std::optional<MaskGrid>& support = std::nullopt);

/// Initial reference for a train config, already projected.
ReferenceSignal initial_reference(std::size_t height, std::size_t width, const TrainConfig& cfg);

/// Projected first-order descent on L_u over the first `train_size` images.
/// Plain GD halves the step until the loss does not increase, so its loss
/// history is non-increasing.
TrainReport train_reference(std::span<const RealGrid> dataset, const MeasurementOperator& op,
                            const TrainConfig& train_cfg, const SolverConfig& solver_cfg);

/// Candidate step sizes searched by autotune_alpha.
inline constexpr double kAlphaGrid[] = {1.0, 0.5, 0.25, 0.1, 0.05};

/// Picks the alpha from kAlphaGrid minimizing L_u(u) after cfg.layers steps.
/// Candidates that diverge are skipped.
double autotune_alpha(const RealGrid& u, std::span<const RealGrid> batch,
                      const MeasurementOperator& op, const SolverConfig& cfg);

/// Bilinear (align-corners) resize, then projection onto the bounds. The
/// support mask, if any, is resized by nearest neighbour.
ReferenceSignal resize_reference(const ReferenceSignal& u, std::size_t height, std::size_t width);

/// Thrown when training diverges; carries the last finite reference.
class TrainingDivergence : public DivergenceError {
 public:
  TrainingDivergence(const DivergenceError& cause, ReferenceSignal last_stable,
                     std::size_t iteration)
      : DivergenceError(std::string("training diverged at outer iteration ") +
                            std::to_string(iteration) + ": " + cause.what(),
                        cause.layer(), cause.sample()),
        last_stable_(std::move(last_stable)),
        iteration_(iteration) {}

  const ReferenceSignal& last_stable() const noexcept { return last_stable_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  ReferenceSignal last_stable_;
  std::size_t iteration_;
};

}  // namespace refpr
