#include "refpr/grid.hpp"

#include <algorithm>
#include <cmath>

namespace refpr {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDimension: return "dimension error";
    case ErrorCode::kParameter: return "parameter error";
    case ErrorCode::kDivergence: return "divergence error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kIo: return "I/O error";
  }
  return "unknown error";
}

std::string shape_string(std::size_t height, std::size_t width) {
  return std::to_string(height) + "x" + std::to_string(width);
}

RealGrid real_part(const ComplexGrid& g) {
  RealGrid out(g.height(), g.width());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i].real();
  return out;
}

ComplexGrid to_complex(const RealGrid& g) {
  ComplexGrid out(g.height(), g.width());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = Complex(g[i], 0.0);
  return out;
}

double inner(const RealGrid& a, const RealGrid& b) {
  require_same_shape(a, b, "inner");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double inner(const ComplexGrid& a, const ComplexGrid& b) {
  require_same_shape(a, b, "inner");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  }
  return acc;
}

double squared_norm(const RealGrid& g) {
  double acc = 0.0;
  for (double v : g.values()) acc += v * v;
  return acc;
}

double squared_norm(const ComplexGrid& g) {
  double acc = 0.0;
  for (const Complex& v : g.values()) acc += std::norm(v);
  return acc;
}

bool all_finite(const RealGrid& g) {
  return std::all_of(g.values().begin(), g.values().end(),
                     [](double v) { return std::isfinite(v); });
}

RealGrid clip(const RealGrid& g, double lo, double hi) {
  RealGrid out = g;
  for (double& v : out.values()) v = std::clamp(v, lo, hi);
  return out;
}

}  // namespace refpr
