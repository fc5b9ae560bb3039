#include <cmath>
#include <functional>

#include "doctest.h"
#include "helpers.hpp"
#include "refpr/measurement.hpp"
#include "refpr/metrics.hpp"
#include "refpr/solver.hpp"

using namespace refpr;
using namespace testing;

namespace {

SolverConfig config(std::size_t layers, double alpha) {
  SolverConfig cfg;
  cfg.layers = layers;
  cfg.alpha = alpha;
  return cfg;
}

}  // namespace

TEST_CASE("phase normalizes and guards zero") {
  ComplexGrid z(1, 3);
  z[0] = {3.0, 4.0};
  z[1] = 0.0;
  z[2] = {1e-14, 0.0};
  const ComplexGrid p = phase(z, 1e-12);
  CHECK(std::abs(p[0] - Complex(0.6, 0.8)) < 1e-15);
  CHECK(p[1] == Complex(0.0, 0.0));
  CHECK(std::abs(p[2] - Complex(1e-2, 0.0)) < 1e-15);

  const ComplexGrid r = random_complex(16, 16, 1);
  const ComplexGrid pr = phase(r, 1e-12);
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(std::abs(pr[i]) <= 1.0 + 1e-15);
    if (std::abs(r[i]) > 1e-6) CHECK(std::abs(std::abs(pr[i]) - 1.0) < 1e-12);
  }
}

TEST_CASE("gradient vanishes at the truth") {
  const MeasurementOperator op(8, 8);
  const RealGrid x = random_real(8, 8, 2);
  const RealGrid u = random_real(8, 8, 3);
  const AmplitudeMeasurements y = forward(op, x, u);
  const RealGrid g = grad_x(x, u, y, op, config(1, 0.25));
  for (double v : g.values()) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("literal and simplified gradient forms agree") {
  const MeasurementOperator op(8, 8);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const RealGrid x = random_real(8, 8, s);
    const RealGrid u = random_real(8, 8, s + 20);
    const AmplitudeMeasurements y = forward(op, random_real(8, 8, s + 40), u);
    ComplexGrid z = op.apply(x);
    const ComplexGrid bu = op.apply(u);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += bu[i];
    const ComplexGrid p = phase(z, 1e-12);
    ComplexGrid field(z.height(), z.width());
    for (std::size_t i = 0; i < z.size(); ++i) {
      field[i] = 2.0 * p[i] * (std::conj(p[i]) * z[i] - y.values[i]);
    }
    const RealGrid literal = op.adjoint(field);
    CHECK(max_abs_diff(grad_x(x, u, y, op, config(1, 0.25)), literal) < 1e-10);
  }
}

TEST_CASE("gradient matches finite differences with the phase frozen") {
  const MeasurementOperator op(8, 8);
  const RealGrid x = random_real(8, 8, 5);
  const RealGrid u = random_real(8, 8, 6);
  const AmplitudeMeasurements y = forward(op, random_real(8, 8, 7), u);
  const ComplexGrid bu = op.apply(u);
  ComplexGrid z = op.apply(x);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += bu[i];
  const ComplexGrid p = phase(z, 1e-12);

  auto linearized = [&](const RealGrid& v) {
    const ComplexGrid av = op.apply(v);
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += std::norm(y.values[i] * p[i] - av[i] - bu[i]);
    return acc;
  };
  RealGrid fd(8, 8);
  const double h = 1e-6;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    RealGrid plus = x;
    RealGrid minus = x;
    plus[i] += h;
    minus[i] -= h;
    fd[i] = (linearized(plus) - linearized(minus)) / (2.0 * h);
  }
  CHECK(rel_l2(grad_x(x, u, y, op, config(1, 0.25)), fd) < 1e-5);
}

TEST_CASE("squared mode uses the field as the phase factor") {
  const MeasurementOperator op(4, 4, MeasurementMode::kSquaredAmplitude);
  const RealGrid x = random_real(4, 4, 8);
  const RealGrid u = random_real(4, 4, 9);
  const AmplitudeMeasurements y = forward(op, random_real(4, 4, 10), u);
  SolverConfig cfg = config(1, 0.25);
  cfg.mode = MeasurementMode::kSquaredAmplitude;
  ComplexGrid z = op.apply(x);
  const ComplexGrid bu = op.apply(u);
  ComplexGrid field(8, 8);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] += bu[i];
    field[i] = 2.0 * z[i] * (std::norm(z[i]) - y.values[i]);
  }
  CHECK(max_abs_diff(grad_x(x, u, y, op, cfg), op.adjoint(field)) < 1e-10);
}

TEST_CASE("the truth is a fixed point of one step") {
  const MeasurementOperator op(8, 8);
  const RealGrid x = random_real(8, 8, 11);
  const RealGrid u = random_real(8, 8, 12);
  const AmplitudeMeasurements y = forward(op, x, u);
  const RealGrid g = grad_x(x, u, y, op, config(1, 0.5));
  RealGrid next = x;
  for (std::size_t i = 0; i < next.size(); ++i) next[i] -= 0.5 * g[i];
  CHECK(max_abs_diff(next, x) < 1e-10);
}

TEST_CASE("solve_unrolled degenerate cases") {
  const MeasurementOperator op(8, 8);
  const RealGrid u = random_real(8, 8, 13);
  const AmplitudeMeasurements y = forward(op, RealGrid(8, 8), u);
  for (std::size_t k : {0u, 1u, 7u, 50u}) {
    const SolveResult r = solve_unrolled(y, u, op, config(k, 0.25), true);
    for (double v : r.estimate.values()) CHECK(std::abs(v) < 1e-12);
    CHECK(r.trace.residual_norms.size() == k + 1);
    CHECK(r.trace.iterates.size() == k + 1);
  }
}

TEST_CASE("solve_unrolled is deterministic") {
  const MeasurementOperator op(8, 8);
  const RealGrid u = random_real(8, 8, 14);
  const AmplitudeMeasurements y = forward(op, random_real(8, 8, 15), u);
  const SolveResult a = solve_unrolled(y, u, op, config(30, 0.5));
  const SolveResult b = solve_unrolled(y, u, op, config(30, 0.5));
  CHECK(a.estimate == b.estimate);
}

TEST_CASE("per-layer step sizes override the shared one") {
  const MeasurementOperator op(8, 8);
  const RealGrid u = random_real(8, 8, 16);
  const AmplitudeMeasurements y = forward(op, random_real(8, 8, 17), u);
  SolverConfig list = config(5, 99.0);
  list.alpha_per_layer = {0.3, 0.3, 0.3, 0.3, 0.3};
  CHECK(solve_unrolled(y, u, op, list).estimate == solve_unrolled(y, u, op, config(5, 0.3)).estimate);
  list.alpha_per_layer.pop_back();
  CHECK_THROWS_AS(solve_unrolled(y, u, op, list), ParameterError);
  CHECK_THROWS_AS(solve_unrolled(y, u, op, config(5, 0.0)), ParameterError);
  SolverConfig eps = config(5, 0.3);
  eps.epsilon_phase = 0.0;
  CHECK_THROWS_AS(solve_unrolled(y, u, op, eps), ParameterError);
}

TEST_CASE("excessive step sizes report the diverging layer") {
  const MeasurementOperator op(8, 8);
  const RealGrid u = random_real(8, 8, 18);
  const AmplitudeMeasurements y = forward(op, random_real(8, 8, 19), u);
  try {
    solve_unrolled(y, u, op, config(200, 1e6));
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    REQUIRE(e.layer().has_value());
    CHECK(*e.layer() < 200);
  }
}

TEST_CASE("misfit decreases layer by layer at backtracked step sizes") {
  const MeasurementOperator op(8, 8);
  int monotone = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const RealGrid u = random_real(8, 8, 1000 + s);
    const AmplitudeMeasurements y = forward(op, random_real(8, 8, 2000 + s), u);
    // Halve alpha until the first step does not increase the misfit.
    double alpha = 1.0;
    for (;;) {
      const SolveResult one = solve_unrolled(y, u, op, config(1, alpha), true);
      if (one.trace.residual_norms[1] <= one.trace.residual_norms[0] || alpha < 1e-3) break;
      alpha *= 0.5;
    }
    const SolveResult r = solve_unrolled(y, u, op, config(20, alpha), true);
    bool ok = true;
    for (std::size_t k = 1; k < r.trace.residual_norms.size(); ++k) {
      ok = ok && r.trace.residual_norms[k] <= r.trace.residual_norms[k - 1] * (1.0 + 1e-12);
    }
    monotone += ok ? 1 : 0;
  }
  CHECK(monotone >= 95);
}

TEST_CASE("hio on zero measurements returns zero") {
  const MeasurementOperator op(8, 8);
  const AmplitudeMeasurements y{RealGrid(16, 16), MeasurementMode::kAmplitude};
  const RealGrid x = solve_hio(y, op, HioConfig{50, 0.9, 1});
  for (double v : x.values()) CHECK(v == 0.0);
}

TEST_CASE("hio is deterministic per seed") {
  const MeasurementOperator op(8, 8);
  const AmplitudeMeasurements y = forward(op, random_real(8, 8, 21), RealGrid(8, 8));
  const HioConfig cfg{100, 0.9, 7};
  CHECK(solve_hio(y, op, cfg) == solve_hio(y, op, cfg));
  CHECK_FALSE(solve_hio(y, op, cfg) == solve_hio(y, op, HioConfig{100, 0.9, 8}));
  CHECK(solve_hio_best_of(y, op, cfg, 3) == solve_hio_best_of(y, op, cfg, 3));
  CHECK_THROWS_AS(solve_hio(y, op, HioConfig{0, 0.9, 1}), ParameterError);
  CHECK_THROWS_AS(solve_hio(y, op, HioConfig{10, 1.0, 1}), ParameterError);
}

TEST_CASE("hio recovers a nonnegative image up to its trivial ambiguities") {
  const MeasurementOperator op(8, 8);
  const RealGrid x = random_real(8, 8, 22);
  const AmplitudeMeasurements y = forward(op, x, RealGrid(8, 8));
  const RealGrid est = solve_hio_best_of(y, op, HioConfig{600, 0.9, 3}, 5);
  CHECK(psnr_ambiguity_resolved(clip(est, 0, 1), x).psnr_db > 30.0);
}

TEST_CASE("make_reference kinds") {
  const RealGrid flat = make_reference(ReferenceKind::kFlat, 4, 5, 0.0, 1.0, 0);
  for (double v : flat.values()) CHECK(v == 0.5);
  const RealGrid zero = make_reference(ReferenceKind::kZero, 4, 5, 0.0, 1.0, 0);
  for (double v : zero.values()) CHECK(v == 0.0);
  const RealGrid a = make_reference(ReferenceKind::kRandom, 16, 16, 0.0, 1.0, 9);
  CHECK(a == make_reference(ReferenceKind::kRandom, 16, 16, 0.0, 1.0, 9));
  CHECK_FALSE(a == make_reference(ReferenceKind::kRandom, 16, 16, 0.0, 1.0, 10));
  for (double v : a.values()) CHECK((v >= 0.0 && v <= 1.0));
  const RealGrid b = make_reference(ReferenceKind::kRandom, 8, 8, -2.0, -1.0, 9);
  for (double v : b.values()) CHECK((v >= -2.0 && v <= -1.0));
  CHECK_THROWS_AS(make_reference(ReferenceKind::kFlat, 4, 4, 1.0, 0.0, 0), ParameterError);
}
