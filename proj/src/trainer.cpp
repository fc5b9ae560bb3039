#include "refpr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "parallel.hpp"
#include "refpr/dataio.hpp"
#include "refpr/rng.hpp"

namespace refpr {

void ReferenceSignal::project() {
  for (double& v : values.values()) v = std::clamp(v, lo, hi);
  if (support) {
    require_same_shape(values, *support, "reference support");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if ((*support)[i] == 0) values[i] = 0.0;
    }
  }
}

bool ReferenceSignal::feasible() const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (support && (*support)[i] == 0) {
      if (v != 0.0) return false;
    } else if (!(v >= lo && v <= hi)) {
      return false;
    }
  }
  return true;
}

void TrainConfig::validate() const {
  if (train_size < 1) throw ParameterError("train: N must be >= 1");
  if (!(step > 0.0) || !std::isfinite(step)) throw ParameterError("train: beta must be > 0");
  if (!(lo <= hi)) throw ParameterError("train: reference bounds require lo <= hi");
}

namespace {

// Per-worker buffers for one forward/backward pass.
struct Workspace {
  std::vector<ComplexGrid> fields;  // z^k = A x^k + B u, k < K
  ComplexGrid zy, r, zbar, zbar_total;
  RealGrid y, x, g, xbar, work;
};

// Runs the unroll for one target. Returns ||x - x^K||^2. When `want_grad`,
// adds dL/d(Bu) (as a canvas field) into ws.zbar_total.
double sample_pass(const RealGrid& target, const ComplexGrid& zu, const MeasurementOperator& op,
                   const SolverConfig& cfg, bool want_grad, Workspace& ws) {
  const std::size_t K = cfg.layers;
  const double eps = cfg.epsilon_phase;
  const bool amplitude = cfg.mode == MeasurementMode::kAmplitude;

  op.apply_into(target, ws.zy);
  for (std::size_t i = 0; i < ws.zy.size(); ++i) ws.zy[i] += zu[i];
  measure_field(ws.zy, cfg.mode, ws.y);

  if (ws.fields.size() < K) ws.fields.resize(K);
  ws.x = RealGrid(op.signal_height(), op.signal_width());
  for (std::size_t k = 0; k < K; ++k) {
    ComplexGrid& z = ws.fields[k];
    op.apply_into(ws.x, z);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += zu[i];
    residual_field(z, ws.y, cfg, ws.r);
    op.adjoint_into(ws.r, ws.g);
    const double step = 2.0 * cfg.step(k);
    double check = 0.0;
    for (std::size_t i = 0; i < ws.x.size(); ++i) {
      ws.x[i] -= step * ws.g[i];
      check += ws.x[i];
    }
    if (!std::isfinite(check)) {
      throw DivergenceError("unrolled solve diverged at layer " + std::to_string(k), k);
    }
  }

  double loss = 0.0;
  ws.xbar = RealGrid(ws.x.height(), ws.x.width());
  for (std::size_t i = 0; i < ws.x.size(); ++i) {
    const double d = ws.x[i] - target[i];
    loss += d * d;
    ws.xbar[i] = 2.0 * d;
  }
  if (!want_grad) return loss;

  // Reverse sweep. ybar collects dL/dy; zbar_total collects dL/d(Bu).
  RealGrid ybar(ws.y.height(), ws.y.width());
  for (std::size_t kk = K; kk-- > 0;) {
    // x^{k+1} = x^k - 2 a_k A* r^k  =>  rbar = -2 a_k A xbar.
    const double step = 2.0 * cfg.step(kk);
    ws.work = ws.xbar;
    for (double& v : ws.work.values()) v *= -step;
    op.apply_into(ws.work, ws.r);  // ws.r now holds rbar

    const ComplexGrid& z = ws.fields[kk];
    if (!ws.zbar.same_shape(z)) ws.zbar = ComplexGrid(z.height(), z.width());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const Complex zi = z[i];
      const Complex rb = ws.r[i];
      const double yi = ws.y[i];
      if (amplitude) {
        const double m = std::sqrt(std::norm(zi));
        if (m >= eps) {
          // r = z - y z/|z|; d(z/|z|) = (I - w w^T)/|z|.
          const Complex w = zi / m;
          const double c = w.real() * rb.real() + w.imag() * rb.imag();
          ws.zbar[i] = rb - (yi / m) * (rb - w * c);
          ybar[i] -= c;
        } else {
          // r = z (|z| - y)/eps with d|z| taken along z/eps.
          const double c = zi.real() * rb.real() + zi.imag() * rb.imag();
          ws.zbar[i] = rb * ((m - yi) / eps) + zi * (c / (eps * eps));
          ybar[i] -= c / eps;
        }
      } else {
        // r = z (|z|^2 - y).
        const double c = zi.real() * rb.real() + zi.imag() * rb.imag();
        ws.zbar[i] = rb * (std::norm(zi) - yi) + zi * (2.0 * c);
        ybar[i] -= c;
      }
    }
    for (std::size_t i = 0; i < ws.zbar.size(); ++i) ws.zbar_total[i] += ws.zbar[i];
    if (kk > 0) {
      op.adjoint_into(ws.zbar, ws.g);
      for (std::size_t i = 0; i < ws.xbar.size(); ++i) ws.xbar[i] += ws.g[i];
    }
  }
  // y = |zy| (or |zy|^2), zy = A x + B u.
  for (std::size_t i = 0; i < ws.zy.size(); ++i) {
    const Complex zi = ws.zy[i];
    const Complex dmeas = amplitude ? zi / std::max(std::sqrt(std::norm(zi)), eps) : 2.0 * zi;
    ws.zbar_total[i] += ybar[i] * dmeas;
  }
  return loss;
}

void check_batch(const RealGrid& u, std::span<const RealGrid> batch,
                 const MeasurementOperator& op) {
  if (batch.empty()) throw ParameterError("reference loss: empty batch");
  if (u.height() != op.signal_height() || u.width() != op.signal_width()) {
    throw DimensionError("reference " + shape_string(u.height(), u.width()) +
                         " does not match operator signal " +
                         shape_string(op.signal_height(), op.signal_width()));
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch[i].same_shape(u)) {
      throw DimensionError("batch image " + std::to_string(i) + " has shape " +
                           shape_string(batch[i].height(), batch[i].width()));
    }
  }
}

LossAndGradient evaluate(const RealGrid& u, std::span<const RealGrid> batch,
                         const MeasurementOperator& op, const SolverConfig& cfg,
                         bool want_grad) {
  cfg.validate();
  check_batch(u, batch, op);
  const ComplexGrid zu = op.apply(u);
  const std::size_t n = batch.size();

  std::vector<double> losses(n, 0.0);
  // Per-sample canvas adjoints, summed in sample order below.
  std::vector<ComplexGrid> per_sample(want_grad ? n : 0);
  std::vector<Workspace> workspaces(detail::worker_count(n));
  detail::parallel_for(n, workspaces.size(), [&](std::size_t worker, std::size_t i) {
    Workspace& ws = workspaces[worker];
    ws.zbar_total = ComplexGrid(op.canvas_height(), op.canvas_width());
    try {
      losses[i] = sample_pass(batch[i], zu, op, cfg, want_grad, ws);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " (sample " + std::to_string(i) + ")",
                            e.layer(), i);
    }
    if (want_grad) per_sample[i] = ws.zbar_total;
  });

  LossAndGradient out;
  for (double l : losses) out.loss += l;
  if (want_grad) {
    ComplexGrid total(op.canvas_height(), op.canvas_width());
    for (const ComplexGrid& zb : per_sample) {
      for (std::size_t i = 0; i < total.size(); ++i) total[i] += zb[i];
    }
    out.gradient = op.adjoint(total);
  }
  return out;
}

void mask_gradient(RealGrid& g, const std::optional<MaskGrid>& support) {
  if (!support) return;
  require_same_shape(g, *support, "gradient support");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if ((*support)[i] == 0) g[i] = 0.0;
  }
}

}  // namespace

double loss_u(const RealGrid& u, std::span<const RealGrid> batch,
              const MeasurementOperator& op, const SolverConfig& cfg) {
  return evaluate(u, batch, op, cfg, false).loss;
}

LossAndGradient loss_and_grad_u(const RealGrid& u, std::span<const RealGrid> batch,
                                const MeasurementOperator& op, const SolverConfig& cfg,
                                const std::optional<MaskGrid>& support) {
  LossAndGradient out = evaluate(u, batch, op, cfg, true);
  mask_gradient(out.gradient, support);
  return out;
}

RealGrid grad_u(const RealGrid& u, std::span<const RealGrid> batch,
                const MeasurementOperator& op, const SolverConfig& cfg,
                const std::optional<MaskGrid>& support) {
  return loss_and_grad_u(u, batch, op, cfg, support).gradient;
}

ReferenceSignal initial_reference(std::size_t height, std::size_t width, const TrainConfig& cfg) {
  ReferenceSignal ref;
  ref.lo = cfg.lo;
  ref.hi = cfg.hi;
  ref.support = cfg.support;
  if (cfg.warm_start) {
    if (cfg.warm_start->height() != height || cfg.warm_start->width() != width) {
      throw DimensionError("train: warm start is " +
                           shape_string(cfg.warm_start->height(), cfg.warm_start->width()) +
                           ", expected " + shape_string(height, width));
    }
    ref.values = *cfg.warm_start;
    ref.project();
    return ref;
  }
  switch (cfg.init) {
    case ReferenceInit::kZero:
      ref.values = make_reference(ReferenceKind::kZero, height, width, cfg.lo, cfg.hi, 0);
      break;
    case ReferenceInit::kFlatHalf:
      ref.values = make_reference(ReferenceKind::kFlat, height, width, cfg.lo, cfg.hi, 0);
      break;
    case ReferenceInit::kUniformRandom:
      ref.values = make_reference(ReferenceKind::kRandom, height, width, cfg.lo, cfg.hi,
                                  derive_seed(cfg.seed, "init"));
      break;
  }
  ref.project();
  return ref;
}

TrainReport train_reference(std::span<const RealGrid> dataset, const MeasurementOperator& op,
                            const TrainConfig& train_cfg, const SolverConfig& solver_cfg) {
  train_cfg.validate();
  solver_cfg.validate();
  if (dataset.size() < train_cfg.train_size) {
    throw ParameterError("train: dataset has " + std::to_string(dataset.size()) +
                         " images, N = " + std::to_string(train_cfg.train_size));
  }
  const auto start = std::chrono::steady_clock::now();
  const std::span<const RealGrid> batch = dataset.first(train_cfg.train_size);

  TrainReport report;
  ReferenceSignal u = initial_reference(op.signal_height(), op.signal_width(), train_cfg);
  ReferenceSignal last_stable = u;

  auto eval = [&](const ReferenceSignal& ref, std::size_t iteration) {
    try {
      LossAndGradient lg = loss_and_grad_u(ref.values, batch, op, solver_cfg, ref.support);
      last_stable = ref;
      return lg;
    } catch (const DivergenceError& e) {
      throw TrainingDivergence(e, last_stable, iteration);
    }
  };

  const std::size_t J = train_cfg.iterations;
  report.loss_history.reserve(J);
  if (train_cfg.optimizer == Optimizer::kAdaptiveMoments) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    RealGrid m(u.values.height(), u.values.width());
    RealGrid v(u.values.height(), u.values.width());
    double b1 = 1.0;
    double b2 = 1.0;
    for (std::size_t j = 0; j < J; ++j) {
      const LossAndGradient lg = eval(u, j);
      report.loss_history.push_back(lg.loss);
      b1 *= kBeta1;
      b2 *= kBeta2;
      const double step =
          train_cfg.schedule == StepSchedule::kCosine
              ? train_cfg.step * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(j) / static_cast<double>(J)))
              : train_cfg.step;
      for (std::size_t i = 0; i < u.values.size(); ++i) {
        const double g = lg.gradient[i];
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
        const double m_hat = m[i] / (1.0 - b1);
        const double v_hat = v[i] / (1.0 - b2);
        u.values[i] -= step * m_hat / (std::sqrt(v_hat) + kEps);
      }
      u.project();
    }
    report.final_loss = loss_u(u.values, batch, op, solver_cfg);
  } else {
    double step = train_cfg.step;
    LossAndGradient current = J > 0 ? eval(u, 0) : LossAndGradient{};
    for (std::size_t j = 0; j < J; ++j) {
      report.loss_history.push_back(current.loss);
      // Backtrack: halve the step until the projected move does not increase the loss.
      bool moved = false;
      for (int attempt = 0; attempt < 40 && !moved; ++attempt) {
        ReferenceSignal candidate = u;
        for (std::size_t i = 0; i < candidate.values.size(); ++i) {
          candidate.values[i] -= step * current.gradient[i];
        }
        candidate.project();
        LossAndGradient next;
        try {
          next = loss_and_grad_u(candidate.values, batch, op, solver_cfg, candidate.support);
        } catch (const DivergenceError&) {
          step *= 0.5;
          continue;
        }
        if (next.loss <= current.loss) {
          u = std::move(candidate);
          current = std::move(next);
          moved = true;
        } else {
          step *= 0.5;
        }
      }
    }
    report.final_loss = J > 0 ? current.loss : loss_u(u.values, batch, op, solver_cfg);
  }

  report.reference = std::move(u);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double autotune_alpha(const RealGrid& u, std::span<const RealGrid> batch,
                      const MeasurementOperator& op, const SolverConfig& cfg) {
  double best_alpha = 0.0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (double alpha : kAlphaGrid) {
    SolverConfig trial = cfg;
    trial.alpha = alpha;
    trial.alpha_per_layer.clear();
    double loss = 0.0;
    try {
      loss = loss_u(u, batch, op, trial);
    } catch (const DivergenceError&) {
      continue;
    }
    if (std::isfinite(loss) && loss < best_loss) {
      best_loss = loss;
      best_alpha = alpha;
    }
  }
  if (best_alpha == 0.0) throw ParameterError("autotune_alpha: every candidate diverged");
  return best_alpha;
}

ReferenceSignal resize_reference(const ReferenceSignal& u, std::size_t height, std::size_t width) {
  ReferenceSignal out;
  out.lo = u.lo;
  out.hi = u.hi;
  out.values = resize_image(u.values, height, width, ResizeMethod::kBilinear);
  if (u.support) {
    RealGrid mask(u.support->height(), u.support->width());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = (*u.support)[i];
    const RealGrid resized = resize_image(mask, height, width, ResizeMethod::kNearest);
    MaskGrid support(height, width);
    for (std::size_t i = 0; i < support.size(); ++i) support[i] = resized[i] > 0.5 ? 1 : 0;
    out.support = std::move(support);
  }
  out.project();
  return out;
}

}  // namespace refpr
