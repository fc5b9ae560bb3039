// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "parallel.hpp"
#include "refpr/fft.hpp"
#include "refpr/measurement.hpp"
#include "refpr/metrics.hpp"
#include "refpr/rng.hpp"
#include "refpr/solver.hpp"
#include "refpr/synth.hpp"
#include "refpr/trainer.hpp"

#ifndef REFPR_CLI_PATH
#define REFPR_CLI_PATH "refpr"
#endif

using namespace refpr;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

RealGrid random_grid(std::size_t h, std::size_t w, Rng& rng, double lo = 0.0, double hi = 1.0) {
  RealGrid g(h, w);
  for (double& v : g.values()) v = rng.uniform(lo, hi);
  return g;
}

ComplexGrid random_complex(std::size_t h, std::size_t w, Rng& rng) {
  ComplexGrid g(h, w);
  for (Complex& v : g.values()) v = Complex(rng.normal(), rng.normal());
  return g;
}

// ---------------------------------------------------------------------------
// Independent oracles

ComplexGrid dft2_oracle(const ComplexGrid& g, bool inverse) {
  const std::size_t h = g.height();
  const std::size_t w = g.width();
  const double sign = inverse ? 1.0 : -1.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  ComplexGrid out(h, w);
  for (std::size_t k = 0; k < h; ++k) {
    for (std::size_t l = 0; l < w; ++l) {
      Complex acc{};
      for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
          const double a = sign * 2.0 * std::numbers::pi *
                           (static_cast<double>((k * r) % h) / h + static_cast<double>((l * c) % w) / w);
          acc += g(r, c) * Complex(std::cos(a), std::sin(a));
        }
      }
      out(k, l) = acc * scale;
    }
  }
  return out;
}

double max_abs_diff(const ComplexGrid& a, const ComplexGrid& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const RealGrid& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------------------
// Desk suite

constexpr std::size_t kSide = 32;
constexpr std::size_t kTrainN = 32;
constexpr std::size_t kTestN = 500;
constexpr std::uint64_t kRoot = 20240607;

SolverConfig desk_solver(std::size_t layers) {
  SolverConfig cfg;
  cfg.layers = layers;
  cfg.alpha = 0.5;
  return cfg;
}

// References are trained in two phases: a single-layer reference first,
// then the target depth starting from it at a smaller step.
constexpr std::size_t kPretrainIterations = 2000;
constexpr double kPretrainStep = 0.05;
constexpr std::size_t kTrainIterations = 300;
constexpr double kTrainStep = 0.01;

TrainConfig desk_train(std::size_t iterations, double step) {
  TrainConfig tc;
  tc.iterations = iterations;
  tc.step = step;
  tc.train_size = kTrainN;
  tc.schedule = StepSchedule::kCosine;
  tc.seed = derive_seed(kRoot, "train");
  return tc;
}

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
};

Stats summarize(const std::vector<double>& v) {
  Stats s;
  s.n = v.size();
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(v.size()));
  return s;
}

class Desk {
 public:
  Desk() : op_(kSide, kSide) {}

  const MeasurementOperator& op() const { return op_; }

  const std::vector<RealGrid>& data(SynthKind kind, bool train) {
    auto& slot = datasets_[{kind, train}];
    if (slot.empty()) {
      const std::size_t count = train ? kTrainN : kTestN;
      slot = synthesize_dataset(kind, count, kSide, kSide,
                                derive_seed(kRoot, train ? "train-set" : "test-set",
                                            static_cast<std::uint64_t>(kind)));
    }
    return slot;
  }

  // Single-layer reference, cached as "<tag>-K1".
  const ReferenceSignal& pretrained(const std::string& tag, SynthKind kind,
                                    const std::optional<MaskGrid>& support = std::nullopt) {
    return train(tag + "-K1", kind, 1, kPretrainIterations, kPretrainStep, support, nullptr);
  }

  // K = 50 reference started from the single-layer one, cached as "<tag>-K50".
  const ReferenceSignal& deep(const std::string& tag, SynthKind kind,
                              const std::optional<MaskGrid>& support = std::nullopt) {
    const ReferenceSignal& start = pretrained(tag, kind, support);
    return train(tag + "-K50", kind, 50, kTrainIterations, kTrainStep, support, &start.values);
  }

 private:
  const ReferenceSignal& train(const std::string& key, SynthKind kind, std::size_t layers,
                               std::size_t iterations, double step,
                               const std::optional<MaskGrid>& support, const RealGrid* warm) {
    auto it = refs_.find(key);
    if (it != refs_.end()) return it->second;
    TrainConfig tc = desk_train(iterations, step);
    tc.support = support;
    if (warm != nullptr) tc.warm_start = *warm;
    const auto t0 = Clock::now();
    TrainReport rep = train_reference(data(kind, true), op_, tc, desk_solver(layers));
    std::printf("  trained %-14s J=%zu K=%zu loss %.3e -> %.3e in %.1fs\n", key.c_str(),
                iterations, layers, rep.loss_history.front(), rep.final_loss, seconds_since(t0));
    std::fflush(stdout);
    return refs_.emplace(key, std::move(rep.reference)).first->second;
  }

 public:

  // Mean clipped PSNR of the unrolled solver over the held-out set.
  Stats evaluate(const RealGrid& u, SynthKind kind, std::size_t layers,
                 const NoiseModel& noise = {},
                 const std::function<RealGrid(const RealGrid&)>& transform = {}) {
    const auto& test = data(kind, false);
    const SolverConfig cfg = desk_solver(layers);
    std::vector<double> scores(test.size());
    detail::parallel_for(test.size(), test.size(), [&](std::size_t, std::size_t i) {
      const RealGrid x = transform ? transform(test[i]) : test[i];
      NoiseModel nm = noise;
      nm.seed = derive_seed(noise.seed, "noise", i);
      const auto y = forward(op_, x, u, nm);
      scores[i] = reconstruction_psnr(solve_unrolled(y, u, op_, cfg).estimate, x).tabulated_db();
    });
    return summarize(scores);
  }

  // Plain and ambiguity-resolved PSNR of best-of-restarts HIO.
  std::pair<Stats, Stats> evaluate_hio(SynthKind kind, std::size_t restarts) {
    const auto& test = data(kind, false);
    const RealGrid zero(kSide, kSide);
    std::vector<double> plain(test.size());
    std::vector<double> resolved(test.size());
    detail::parallel_for(test.size(), test.size(), [&](std::size_t, std::size_t i) {
      const auto y = forward(op_, test[i], zero);
      HioConfig hc;
      hc.seed = derive_seed(kRoot, "hio", i);
      const RealGrid est = solve_hio_best_of(y, op_, hc, restarts);
      plain[i] = reconstruction_psnr(est, test[i]).tabulated_db();
      resolved[i] = psnr_ambiguity_resolved(clip(est, 0.0, 1.0), test[i]).tabulated_db();
    });
    return {summarize(plain), summarize(resolved)};
  }

 private:
  MeasurementOperator op_;
  std::map<std::pair<SynthKind, bool>, std::vector<RealGrid>> datasets_;
  std::map<std::string, ReferenceSignal> refs_;
};

const ReferenceSignal& glyph_u50(Desk& d) { return d.deep("glyphs", SynthKind::kGlyphs); }

// ---------------------------------------------------------------------------
// Criteria

Outcome criterion_numerical_core(Desk&) {
  const auto t0 = Clock::now();
  Rng rng(101);
  double fft_err = 0.0;
  double parseval_err = 0.0;
  const std::size_t sides[] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 12, 15, 16};
  for (std::size_t h : sides) {
    for (std::size_t w : sides) {
      const ComplexGrid g = random_complex(h, w, rng);
      const ComplexGrid f = fft2(g);
      fft_err = std::max(fft_err, max_abs_diff(f, dft2_oracle(g, false)));
      fft_err = std::max(fft_err, max_abs_diff(ifft2(g), dft2_oracle(g, true)));
      double ng = 0.0;
      double nf = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        ng += std::norm(g[i]);
        nf += std::norm(f[i]);
      }
      parseval_err = std::max(parseval_err, std::abs(ng - nf) / ng);
    }
  }

  double pad_err = 0.0;
  double adjoint_err = 0.0;
  double roundtrip_err = 0.0;
  for (std::size_t n : {std::size_t{2}, std::size_t{3}, std::size_t{4}, std::size_t{7}, std::size_t{8}}) {
    for (int trial = 0; trial < 5; ++trial) {
      const RealGrid a = random_grid(n, n + 1, rng, -1.0, 1.0);
      const RealGrid b = random_grid(2 * n, 2 * (n + 1), rng, -1.0, 1.0);
      pad_err = std::max(pad_err, std::abs(inner(zero_pad(a, 2 * n, 2 * (n + 1)), b) -
                                           inner(a, crop(b, n, n + 1))));
      const MeasurementOperator op(n, n + 1);
      const ComplexGrid c = random_complex(2 * n, 2 * (n + 1), rng);
      adjoint_err = std::max(adjoint_err, std::abs(inner(op.apply(a), c) - inner(a, op.adjoint(c))));
      const RealGrid back = op.adjoint(op.apply(a));
      for (std::size_t i = 0; i < a.size(); ++i) {
        roundtrip_err = std::max(roundtrip_err, std::abs(back[i] - a[i]));
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = fft_err < 1e-10 && parseval_err < 1e-12 && pad_err < 1e-12 && adjoint_err < 1e-10 &&
           roundtrip_err < 1e-12 && secs < 10.0;
  o.detail = fmt("fft vs dft %.1e, parseval %.1e, pad/crop %.1e, <Ax,z>-<x,A*z> %.1e, "
                 "A*A-I %.1e, %.2fs",
                 fft_err, parseval_err, pad_err, adjoint_err, roundtrip_err, secs);
  return o;
}

Outcome criterion_gradient_keystone(Desk&) {
  const auto t0 = Clock::now();
  Rng rng(202);
  double worst = 0.0;
  std::size_t instances = 0;
  for (std::size_t n : {std::size_t{4}, std::size_t{8}}) {
    for (std::size_t layers : {std::size_t{1}, std::size_t{2}, std::size_t{5}}) {
      for (std::size_t batch = 1; batch <= 3; ++batch) {
        for (MeasurementMode mode : {MeasurementMode::kAmplitude, MeasurementMode::kSquaredAmplitude}) {
          const MeasurementOperator op(n, n, mode);
          SolverConfig cfg;
          cfg.layers = layers;
          cfg.mode = mode;
          cfg.alpha = mode == MeasurementMode::kAmplitude ? rng.uniform(0.1, 0.6) : 0.02;
          const RealGrid u = random_grid(n, n, rng, 0.1, 0.9);
          std::vector<RealGrid> xs;
          for (std::size_t b = 0; b < batch; ++b) xs.push_back(random_grid(n, n, rng));
          const RealGrid g = grad_u(u, xs, op, cfg);
          const double h = 1e-5;
          double num = 0.0;
          double den = 0.0;
          for (std::size_t i = 0; i < u.size(); ++i) {
            RealGrid up = u;
            RealGrid um = u;
            up[i] += h;
            um[i] -= h;
            const double fd = (loss_u(up, xs, op, cfg) - loss_u(um, xs, op, cfg)) / (2 * h);
            num += (fd - g[i]) * (fd - g[i]);
            den += fd * fd;
          }
          worst = std::max(worst, std::sqrt(num / den));
          ++instances;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst < 1e-4 && instances >= 20 && secs < 60.0;
  o.detail = fmt("%zu instances, worst relative L2 error %.2e, %.2fs", instances, worst, secs);
  return o;
}

Outcome criterion_gradient_identity(Desk&) {
  Rng rng(303);
  double worst = 0.0;
  const MeasurementOperator op(8, 8);
  SolverConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    const RealGrid x = random_grid(8, 8, rng);
    const RealGrid u = random_grid(8, 8, rng);
    const auto y = forward(op, random_grid(8, 8, rng), u);
    // 2 A*[p (conj(p) z - y)] evaluated literally.
    ComplexGrid z = op.apply(x);
    const ComplexGrid bu = op.apply(u);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += bu[i];
    const ComplexGrid p = phase(z, cfg.epsilon_phase);
    ComplexGrid field(z.height(), z.width());
    for (std::size_t i = 0; i < z.size(); ++i) {
      field[i] = p[i] * (std::conj(p[i]) * z[i] - y.values[i]);
    }
    RealGrid literal = op.adjoint(field);
    for (double& v : literal.values()) v *= 2.0;
    const RealGrid simplified = grad_x(x, u, y, op, cfg);
    for (std::size_t i = 0; i < literal.size(); ++i) {
      worst = std::max(worst, std::abs(literal[i] - simplified[i]));
    }
  }
  Outcome o;
  o.pass = worst < 1e-10;
  o.detail = fmt("50 random 8x8 instances, max abs difference %.2e", worst);
  return o;
}

Outcome criterion_fixed_point(Desk&) {
  Rng rng(404);
  double worst_grad = 0.0;
  double worst_step = 0.0;
  for (std::size_t n : {std::size_t{4}, std::size_t{8}, std::size_t{16}}) {
    for (MeasurementMode mode : {MeasurementMode::kAmplitude, MeasurementMode::kSquaredAmplitude}) {
      const MeasurementOperator op(n, n, mode);
      SolverConfig cfg;
      cfg.mode = mode;
      for (int trial = 0; trial < 10; ++trial) {
        const RealGrid xs = random_grid(n, n, rng);
        const RealGrid u = random_grid(n, n, rng);
        const auto y = forward(op, xs, u);
        const RealGrid g = grad_x(xs, u, y, op, cfg);
        worst_grad = std::max(worst_grad, max_abs(g));
        for (double alpha : kAlphaGrid) {
          for (std::size_t i = 0; i < xs.size(); ++i) {
            worst_step = std::max(worst_step, std::abs(alpha * g[i]));
          }
        }
      }
    }
  }
  Outcome o;
  o.pass = worst_grad < 1e-10 && worst_step < 1e-10;
  o.detail = fmt("max |grad_x(x*)| %.2e, max |x^{k+1} - x*| %.2e", worst_grad, worst_step);
  return o;
}

Outcome criterion_desk_training(Desk& d) {
  const RealGrid& u = glyph_u50(d).values;
  const RealGrid random = make_reference(ReferenceKind::kRandom, kSide, kSide, 0, 1,
                                         derive_seed(kRoot, "random-reference"));
  const RealGrid flat = make_reference(ReferenceKind::kFlat, kSide, kSide, 0, 1, 0);
  const Stats learned = d.evaluate(u, SynthKind::kGlyphs, 50);
  const Stats rnd = d.evaluate(random, SynthKind::kGlyphs, 50);
  const Stats fl = d.evaluate(flat, SynthKind::kGlyphs, 50);
  const auto t0 = Clock::now();
  const auto [hio, hio_resolved] = d.evaluate_hio(SynthKind::kGlyphs, 10);
  std::printf("  HIO (best of 10) took %.1fs; ambiguity-resolved HIO mean %.2f dB, "
              "learned - resolved HIO = %.2f dB\n",
              seconds_since(t0), hio_resolved.mean, learned.mean - hio_resolved.mean);
  Outcome o;
  o.pass = learned.n >= 500 && learned.mean >= rnd.mean + 10.0 && learned.mean > rnd.mean &&
           rnd.mean > fl.mean && fl.mean > hio.mean;
  o.detail = fmt("n=%zu learned %.2f, random %.2f, flat %.2f, HIO %.2f dB (plain PSNR)",
                 learned.n, learned.mean, rnd.mean, fl.mean, hio.mean);
  return o;
}

Outcome criterion_single_layer(Desk& d) {
  const auto& u1 = d.pretrained("glyphs", SynthKind::kGlyphs);
  const Stats s = d.evaluate(u1.values, SynthKind::kGlyphs, 1);
  Outcome o;
  o.pass = s.mean >= 15.0;
  o.detail = fmt("K=1 trained and tested: mean %.2f dB (sd %.2f, n=%zu)", s.mean, s.stddev, s.n);
  return o;
}

Outcome criterion_k_sweep(Desk& d) {
  const std::size_t ks[] = {1, 5, 10, 25, 50, 100, 200};
  const RealGrid& u50 = glyph_u50(d).values;
  const RealGrid& u1 = d.pretrained("glyphs", SynthKind::kGlyphs).values;
  std::vector<double> m50;
  std::vector<double> m1;
  std::string curve;
  for (std::size_t k : ks) {
    m50.push_back(d.evaluate(u50, SynthKind::kGlyphs, k).mean);
    m1.push_back(d.evaluate(u1, SynthKind::kGlyphs, k).mean);
    curve += fmt(" K%zu=%.1f/%.1f", k, m50.back(), m1.back());
  }
  bool rising = true;
  double best = -1e300;
  std::size_t i50 = 0;
  for (std::size_t i = 0; i < std::size(ks); ++i) {
    if (ks[i] <= 50) {
      rising = rising && m50[i] >= best - 0.5;
      best = std::max(best, m50[i]);
      if (ks[i] == 50) i50 = i;
    }
  }
  bool plateau = true;
  for (std::size_t i = i50 + 1; i < std::size(ks); ++i) plateau = plateau && m50[i] >= m50[i50] - 0.5;
  const double plateau50 = m50.back();
  const double plateau1 = *std::max_element(m1.begin(), m1.end());
  Outcome o;
  o.pass = rising && plateau && plateau1 < plateau50;
  o.detail = fmt("u50/u1:%s", curve.c_str());
  return o;
}

Outcome criterion_noise(Desk& d) {
  const RealGrid& u = glyph_u50(d).values;
  const double sigmas[] = {0.01, 0.02, 0.05, 0.1, 0.2};
  const double lambdas[] = {0.001, 0.003, 0.01, 0.03, 0.1};
  auto sweep = [&](NoiseKind kind, const double* levels, std::string& text) {
    std::vector<double> means;
    for (std::size_t i = 0; i < 5; ++i) {
      NoiseModel nm;
      nm.kind = kind;
      (kind == NoiseKind::kGaussian ? nm.sigma : nm.lambda) = levels[i];
      nm.seed = derive_seed(kRoot, kind == NoiseKind::kGaussian ? "gauss" : "poisson", i);
      means.push_back(d.evaluate(u, SynthKind::kGlyphs, 50, nm).mean);
      text += fmt(" %g:%.1f", levels[i], means.back());
    }
    return means;
  };
  std::string gtext;
  std::string ptext;
  const auto g = sweep(NoiseKind::kGaussian, sigmas, gtext);
  const auto p = sweep(NoiseKind::kPoisson, lambdas, ptext);
  auto monotone = [](const std::vector<double>& m) {
    for (std::size_t i = 1; i < m.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (m[i] > m[j] + 1.0) return false;
      }
    }
    return true;
  };
  Outcome o;
  o.pass = monotone(g) && monotone(p) && g.front() >= 20.0 && p.front() >= 20.0;
  o.detail = fmt("sigma%s | lambda%s", gtext.c_str(), ptext.c_str());
  return o;
}

Outcome criterion_shift_flip(Desk& d) {
  const RealGrid& u = glyph_u50(d).values;
  const double base = d.evaluate(u, SynthKind::kGlyphs, 50).mean;
  struct Variant {
    const char* name;
    AmbiguityTransform t;
  };
  const Variant variants[] = {
      {"shift(5,9)", {Flip::kNone, false, 5, 9}},
      {"shift(27,3)", {Flip::kNone, false, 27, 3}},
      {"flip-h", {Flip::kHorizontal, false, 0, 0}},
      {"flip-v", {Flip::kVertical, false, 0, 0}},
      {"rot180", {Flip::kNone, true, 0, 0}},
  };
  bool ok = true;
  std::string text = fmt("canonical %.2f", base);
  for (const auto& v : variants) {
    const double m = d.evaluate(u, SynthKind::kGlyphs, 50, {},
                                [&](const RealGrid& x) { return apply_transform(x, v.t); })
                         .mean;
    ok = ok && std::abs(m - base) <= 3.0;
    text += fmt(", %s %.2f", v.name, m);
  }
  Outcome o;
  o.pass = ok;
  o.detail = text + " dB";
  return o;
}

Outcome criterion_transfer(Desk& d) {
  const RealGrid flat = make_reference(ReferenceKind::kFlat, kSide, kSide, 0, 1, 0);
  const RealGrid& ug = glyph_u50(d).values;
  const RealGrid& ut = d.deep("textures", SynthKind::kTextures).values;
  const double g_on_t = d.evaluate(ug, SynthKind::kTextures, 50).mean;
  const double t_on_g = d.evaluate(ut, SynthKind::kGlyphs, 50).mean;
  const double flat_t = d.evaluate(flat, SynthKind::kTextures, 50).mean;
  const double flat_g = d.evaluate(flat, SynthKind::kGlyphs, 50).mean;
  Outcome o;
  o.pass = g_on_t >= flat_t && t_on_g >= flat_g;
  o.detail = fmt("glyphs->textures %.2f vs flat %.2f, textures->glyphs %.2f vs flat %.2f dB",
                 g_on_t, flat_t, t_on_g, flat_g);
  return o;
}

MaskGrid block_mask(std::size_t top, std::size_t left) {
  MaskGrid m(kSide, kSide);
  for (std::size_t r = top; r < top + 8; ++r) {
    for (std::size_t c = left; c < left + 8; ++c) m(r, c) = 1;
  }
  return m;
}

Outcome criterion_localized(Desk& d) {
  const std::size_t mid = (kSide - 8) / 2;
  const auto& corner = d.deep("block-corner", SynthKind::kGlyphs, block_mask(0, 0));
  const auto& centre = d.deep("block-center", SynthKind::kGlyphs, block_mask(mid, mid));
  const double mc = d.evaluate(corner.values, SynthKind::kGlyphs, 50).mean;
  const double mm = d.evaluate(centre.values, SynthKind::kGlyphs, 50).mean;
  Outcome o;
  o.pass = mc > mm;
  o.detail = fmt("8x8 block: corner %.2f dB, center %.2f dB", mc, mm);
  return o;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + REFPR_CLI_PATH + "\" " + args + " > \"" +
                          log.string() + "\" 2>&1";
  return std::system(cmd.c_str());
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") {
      std::ifstream in(e.path(), std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      out[fs::relative(e.path(), dir).string()] = ss.str();
    }
  }
  return out;
}

Outcome criterion_reproducibility(Desk&) {
  const fs::path root = fs::temp_directory_path() / "refpr-acceptance-repro";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path log = root / "log.txt";
  {
    std::ofstream cfg(root / "run.cfg");
    cfg << "# small reproducibility run\n"
           "height = 16\nwidth = 16\ndataset = glyphs\ntrain_size = 8\ntest_size = 12\n"
           "layers = 10\nalpha = 0.5\niterations = 15\nstep = 0.05\n"
           "noise = gaussian\nnoise_sigma = 0.02\nhio_restarts = 2\nhio_iterations = 50\n";
  }
  const char* commands[] = {"train", "reconstruct", "eval", "baseline", "sweep"};
  std::size_t compared = 0;
  std::string failure;
  for (const char* command : commands) {
    const fs::path first = root / (std::string(command) + "-a");
    const fs::path second = root / (std::string(command) + "-b");
    std::string extra = std::string(command) == "sweep" ? " --set axis=K_test --set values=1,5,10" : "";
    const std::string base = std::string(command) + " --config \"" + (root / "run.cfg").string() +
                             "\" --seed 7" + extra;
    if (run_cli(base + " --out \"" + first.string() + "\"", log) != 0) {
      failure = fmt("%s failed", command);
      break;
    }
    const fs::path snapshot = first / "config.resolved.txt";
    if (!fs::exists(snapshot)) {
      failure = fmt("%s wrote no snapshot", command);
      break;
    }
    if (run_cli(std::string(command) + " --config \"" + snapshot.string() + "\" --out \"" +
                    second.string() + "\"",
                log) != 0) {
      failure = fmt("%s rerun from snapshot failed", command);
      break;
    }
    const auto a = csv_files(first);
    const auto b = csv_files(second);
    if (a.empty() || a != b) {
      failure = fmt("%s CSVs differ or are missing", command);
      break;
    }
    compared += a.size();
  }
  Outcome o;
  o.pass = failure.empty();
  o.detail = o.pass ? fmt("5 subcommands rerun from snapshots, %zu CSVs byte-identical", compared)
                    : failure;
  if (o.pass) fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)(Desk&);
  };
  const Criterion criteria[] = {
      {1, "numerical core oracles", criterion_numerical_core},
      {2, "gradient keystone", criterion_gradient_keystone},
      {3, "gradient identity", criterion_gradient_identity},
      {4, "fixed point", criterion_fixed_point},
      {5, "desk-scale training", criterion_desk_training},
      {6, "single-layer viability", criterion_single_layer},
      {7, "K-sweep plateau", criterion_k_sweep},
      {8, "noise degradation", criterion_noise},
      {9, "shift/flip robustness", criterion_shift_flip},
      {10, "cross-dataset transfer", criterion_transfer},
      {11, "localized reference", criterion_localized},
      {12, "CLI reproducibility", criterion_reproducibility},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  Desk desk;
  int failures = 0;
  const auto t0 = Clock::now();
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run(desk);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d failed, total %.1fs\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
