#include "refpr/refpr.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "refpr/dataio.hpp"
#include "refpr/error.hpp"
#include "refpr/measurement.hpp"
#include "refpr/metrics.hpp"
#include "refpr/rng.hpp"
#include "refpr/solver.hpp"
#include "refpr/synth.hpp"
#include "refpr/trainer.hpp"

struct refpr_grid {
  refpr::RealGrid g;
};

struct refpr_reference {
  refpr::ReferenceSignal ref;
  refpr_grid view;
};

struct refpr_dataset {
  std::vector<refpr_grid> images;
  std::vector<std::string> paths;
};

struct refpr_train_report {
  refpr::TrainReport report;
  refpr_reference reference;
};

namespace {

thread_local std::string last_error;

refpr_status fail(refpr_status status, const std::string& message) {
  last_error = message;
  return status;
}

refpr_status status_of(refpr::ErrorCode code) {
  switch (code) {
    case refpr::ErrorCode::kDimension: return REFPR_ERR_DIMENSION;
    case refpr::ErrorCode::kParameter: return REFPR_ERR_PARAMETER;
    case refpr::ErrorCode::kDivergence: return REFPR_ERR_DIVERGENCE;
    case refpr::ErrorCode::kParse: return REFPR_ERR_PARSE;
    case refpr::ErrorCode::kFormat: return REFPR_ERR_FORMAT;
    case refpr::ErrorCode::kIo: return REFPR_ERR_IO;
  }
  return REFPR_ERR_INTERNAL;
}

template <typename F>
refpr_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return REFPR_OK;
  } catch (const refpr::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(REFPR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(REFPR_ERR_INTERNAL, e.what());
  }
}

#define REFPR_REQUIRE(ptr)                                        \
  do {                                                            \
    if ((ptr) == nullptr) return fail(REFPR_ERR_NULL, #ptr " is NULL"); \
  } while (0)

refpr::MeasurementMode mode_of(refpr_mode m) {
  switch (m) {
    case REFPR_MODE_AMPLITUDE: return refpr::MeasurementMode::kAmplitude;
    case REFPR_MODE_SQUARED: return refpr::MeasurementMode::kSquaredAmplitude;
  }
  throw refpr::ParameterError("unknown measurement mode");
}

refpr::SolverConfig solver_of(const refpr_solver_config& c) {
  refpr::SolverConfig s;
  s.layers = c.layers;
  s.alpha = c.alpha;
  if (c.alpha_per_layer != nullptr) s.alpha_per_layer.assign(c.alpha_per_layer, c.alpha_per_layer + c.layers);
  s.epsilon_phase = c.epsilon_phase;
  s.mode = mode_of(c.mode);
  s.validate();
  return s;
}

refpr::NoiseModel noise_of(const refpr_noise_config* c) {
  refpr::NoiseModel n;
  if (c == nullptr) return n;
  switch (c->kind) {
    case REFPR_NOISE_NONE: n.kind = refpr::NoiseKind::kNone; break;
    case REFPR_NOISE_GAUSSIAN: n.kind = refpr::NoiseKind::kGaussian; break;
    case REFPR_NOISE_POISSON: n.kind = refpr::NoiseKind::kPoisson; break;
    default: throw refpr::ParameterError("unknown noise kind");
  }
  n.sigma = c->sigma;
  n.lambda = c->lambda;
  n.seed = c->seed;
  n.validate();
  return n;
}

refpr::MaskGrid mask_of(const uint8_t* support, std::size_t h, std::size_t w) {
  refpr::MaskGrid m(h, w);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (support[i] > 1) throw refpr::ParameterError("support mask entries must be 0 or 1");
    m[i] = support[i];
  }
  return m;
}

refpr_grid* wrap(refpr::RealGrid g) { return new refpr_grid{std::move(g)}; }

void sync_view(refpr_reference& r) { r.view.g = r.ref.values; }

refpr_reference* wrap(refpr::ReferenceSignal s) {
  auto* r = new refpr_reference{std::move(s), {}};
  sync_view(*r);
  return r;
}

std::vector<refpr::RealGrid> first_images(const refpr_dataset& d, std::size_t count) {
  if (count == 0 || count > d.images.size()) {
    throw refpr::ParameterError("requested " + std::to_string(count) + " images from a dataset of " +
                                std::to_string(d.images.size()));
  }
  std::vector<refpr::RealGrid> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(d.images[i].g);
  return out;
}

}  // namespace

extern "C" {

const char* refpr_version(void) { return "1.0.0"; }

const char* refpr_status_string(refpr_status status) {
  switch (status) {
    case REFPR_OK: return "ok";
    case REFPR_ERR_DIMENSION: return "dimension error";
    case REFPR_ERR_PARAMETER: return "parameter error";
    case REFPR_ERR_DIVERGENCE: return "divergence";
    case REFPR_ERR_PARSE: return "parse error";
    case REFPR_ERR_FORMAT: return "format error";
    case REFPR_ERR_IO: return "i/o error";
    case REFPR_ERR_NULL: return "null argument";
    case REFPR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* refpr_last_error(void) { return last_error.c_str(); }

uint64_t refpr_derive_seed(uint64_t root, const char* purpose, uint64_t index) {
  return refpr::derive_seed(root, purpose == nullptr ? "" : purpose, index);
}

void refpr_solver_config_init(refpr_solver_config* cfg) {
  if (cfg == nullptr) return;
  const refpr::SolverConfig d;
  *cfg = refpr_solver_config{d.layers, d.alpha, nullptr, d.epsilon_phase, REFPR_MODE_AMPLITUDE};
}

void refpr_noise_config_init(refpr_noise_config* cfg) {
  if (cfg == nullptr) return;
  *cfg = refpr_noise_config{REFPR_NOISE_NONE, 0.0, 0.0, 0};
}

void refpr_train_config_init(refpr_train_config* cfg) {
  if (cfg == nullptr) return;
  const refpr::TrainConfig d;
  *cfg = refpr_train_config{d.iterations, d.step, d.train_size, REFPR_OPTIMIZER_ADAM,
                            REFPR_SCHEDULE_CONSTANT, d.seed, REFPR_INIT_UNIFORM_RANDOM,
                            d.lo, d.hi, nullptr, nullptr};
}

void refpr_hio_config_init(refpr_hio_config* cfg) {
  if (cfg == nullptr) return;
  const refpr::HioConfig d;
  *cfg = refpr_hio_config{d.iterations, d.beta, d.seed, 10};
}

// ---- grids ------------------------------------------------------------------

refpr_status refpr_grid_create(size_t height, size_t width, refpr_grid** out) {
  REFPR_REQUIRE(out);
  return guarded([&] {
    if (height == 0 || width == 0) throw refpr::DimensionError("grid dimensions must be positive");
    *out = wrap(refpr::RealGrid(height, width));
  });
}

refpr_status refpr_grid_from_data(size_t height, size_t width, const double* values,
                                  refpr_grid** out) {
  REFPR_REQUIRE(values);
  REFPR_REQUIRE(out);
  return guarded([&] {
    if (height == 0 || width == 0) throw refpr::DimensionError("grid dimensions must be positive");
    *out = wrap(refpr::RealGrid(height, width, std::vector<double>(values, values + height * width)));
  });
}

refpr_status refpr_grid_clone(const refpr_grid* grid, refpr_grid** out) {
  REFPR_REQUIRE(grid);
  REFPR_REQUIRE(out);
  return guarded([&] { *out = wrap(grid->g); });
}

void refpr_grid_destroy(refpr_grid* grid) { delete grid; }

size_t refpr_grid_height(const refpr_grid* grid) { return grid ? grid->g.height() : 0; }

size_t refpr_grid_width(const refpr_grid* grid) { return grid ? grid->g.width() : 0; }

double* refpr_grid_data(refpr_grid* grid) { return grid ? grid->g.data() : nullptr; }

const double* refpr_grid_cdata(const refpr_grid* grid) { return grid ? grid->g.data() : nullptr; }

refpr_status refpr_grid_load_pgm(const char* path, refpr_grid** out) {
  REFPR_REQUIRE(path);
  REFPR_REQUIRE(out);
  return guarded([&] { *out = wrap(refpr::load_pgm(path)); });
}

refpr_status refpr_grid_save_pgm(const refpr_grid* grid, const char* path, uint32_t maxval) {
  REFPR_REQUIRE(grid);
  REFPR_REQUIRE(path);
  return guarded([&] { refpr::write_pgm(grid->g, path, maxval); });
}

refpr_status refpr_grid_resize(const refpr_grid* grid, size_t height, size_t width,
                               refpr_resize_method method, refpr_grid** out) {
  REFPR_REQUIRE(grid);
  REFPR_REQUIRE(out);
  return guarded([&] {
    const auto m = method == REFPR_RESIZE_NEAREST ? refpr::ResizeMethod::kNearest
                                                  : refpr::ResizeMethod::kBilinear;
    *out = wrap(refpr::resize_image(grid->g, height, width, m));
  });
}

refpr_status refpr_grid_transform(const refpr_grid* grid, refpr_flip flip, int rotate180,
                                  size_t shift_rows, size_t shift_cols, refpr_grid** out) {
  REFPR_REQUIRE(grid);
  REFPR_REQUIRE(out);
  return guarded([&] {
    refpr::AmbiguityTransform t;
    switch (flip) {
      case REFPR_FLIP_NONE: t.flip = refpr::Flip::kNone; break;
      case REFPR_FLIP_HORIZONTAL: t.flip = refpr::Flip::kHorizontal; break;
      case REFPR_FLIP_VERTICAL: t.flip = refpr::Flip::kVertical; break;
      case REFPR_FLIP_BOTH: t.flip = refpr::Flip::kBoth; break;
      default: throw refpr::ParameterError("unknown flip");
    }
    t.rotate180 = rotate180 != 0;
    t.shift_rows = shift_rows % grid->g.height();
    t.shift_cols = shift_cols % grid->g.width();
    *out = wrap(refpr::apply_transform(grid->g, t));
  });
}

// ---- datasets ---------------------------------------------------------------

refpr_status refpr_dataset_load_manifest(const char* path, refpr_dataset** out) {
  REFPR_REQUIRE(path);
  REFPR_REQUIRE(out);
  return guarded([&] {
    const refpr::DatasetManifest manifest = refpr::load_manifest(path);
    auto images = refpr::load_dataset(manifest);
    auto* d = new refpr_dataset;
    for (std::size_t i = 0; i < images.size(); ++i) {
      d->images.push_back({std::move(images[i])});
      d->paths.push_back(manifest.entries[i].path);
    }
    *out = d;
  });
}

refpr_status refpr_dataset_synthesize(refpr_synth_kind kind, size_t count, size_t height,
                                      size_t width, uint64_t seed, refpr_dataset** out) {
  REFPR_REQUIRE(out);
  return guarded([&] {
    if (kind != REFPR_SYNTH_GLYPHS && kind != REFPR_SYNTH_TEXTURES) {
      throw refpr::ParameterError("unknown synthetic dataset kind");
    }
    const auto k = kind == REFPR_SYNTH_GLYPHS ? refpr::SynthKind::kGlyphs : refpr::SynthKind::kTextures;
    auto images = refpr::synthesize_dataset(k, count, height, width, seed);
    auto* d = new refpr_dataset;
    for (auto& g : images) d->images.push_back({std::move(g)});
    d->paths.assign(d->images.size(), std::string());
    *out = d;
  });
}

refpr_status refpr_dataset_save(const refpr_dataset* dataset, const char* directory,
                                const char* manifest_name, uint32_t maxval) {
  REFPR_REQUIRE(dataset);
  REFPR_REQUIRE(directory);
  REFPR_REQUIRE(manifest_name);
  return guarded([&] {
    namespace fs = std::filesystem;
    const fs::path dir(directory);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw refpr::IoError("cannot create directory", dir.string());
    refpr::DatasetManifest manifest;
    const auto& first = dataset->images.empty() ? refpr::RealGrid() : dataset->images.front().g;
    if (!first.empty()) {
      manifest.image_height = first.height();
      manifest.image_width = first.width();
    }
    for (std::size_t i = 0; i < dataset->images.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "image_%05zu.pgm", i);
      refpr::write_pgm(dataset->images[i].g, (dir / name).string(), maxval);
      manifest.entries.push_back({(dir / name).string(), std::nullopt});
    }
    refpr::write_manifest(manifest, (dir / manifest_name).string());
  });
}

refpr_status refpr_dataset_resize(refpr_dataset* dataset, size_t height, size_t width,
                                  refpr_resize_method method) {
  REFPR_REQUIRE(dataset);
  return guarded([&] {
    const auto m = method == REFPR_RESIZE_NEAREST ? refpr::ResizeMethod::kNearest
                                                  : refpr::ResizeMethod::kBilinear;
    std::vector<refpr::RealGrid> resized;
    for (const auto& img : dataset->images) resized.push_back(refpr::resize_image(img.g, height, width, m));
    for (std::size_t i = 0; i < resized.size(); ++i) dataset->images[i].g = std::move(resized[i]);
  });
}

void refpr_dataset_destroy(refpr_dataset* dataset) { delete dataset; }

size_t refpr_dataset_size(const refpr_dataset* dataset) {
  return dataset ? dataset->images.size() : 0;
}

const refpr_grid* refpr_dataset_image(const refpr_dataset* dataset, size_t index) {
  if (dataset == nullptr || index >= dataset->images.size()) return nullptr;
  return &dataset->images[index];
}

const char* refpr_dataset_path(const refpr_dataset* dataset, size_t index) {
  if (dataset == nullptr || index >= dataset->paths.size()) return "";
  return dataset->paths[index].c_str();
}

// ---- references -------------------------------------------------------------

refpr_status refpr_reference_make(refpr_reference_kind kind, size_t height, size_t width,
                                  double lo, double hi, uint64_t seed, refpr_reference** out) {
  REFPR_REQUIRE(out);
  return guarded([&] {
    refpr::ReferenceKind k;
    switch (kind) {
      case REFPR_REFERENCE_ZERO: k = refpr::ReferenceKind::kZero; break;
      case REFPR_REFERENCE_FLAT: k = refpr::ReferenceKind::kFlat; break;
      case REFPR_REFERENCE_RANDOM: k = refpr::ReferenceKind::kRandom; break;
      default: throw refpr::ParameterError("unknown reference kind");
    }
    if (height == 0 || width == 0) throw refpr::DimensionError("reference dimensions must be positive");
    refpr::ReferenceSignal s;
    s.values = refpr::make_reference(k, height, width, lo, hi, seed);
    s.lo = k == refpr::ReferenceKind::kZero ? std::min(lo, 0.0) : lo;
    s.hi = k == refpr::ReferenceKind::kZero ? std::max(hi, 0.0) : hi;
    *out = wrap(std::move(s));
  });
}

refpr_status refpr_reference_create(const refpr_grid* values, double lo, double hi,
                                    const uint8_t* support, refpr_reference** out) {
  REFPR_REQUIRE(values);
  REFPR_REQUIRE(out);
  return guarded([&] {
    if (!(lo <= hi)) throw refpr::ParameterError("reference bounds require lo <= hi");
    refpr::ReferenceSignal s;
    s.values = values->g;
    s.lo = lo;
    s.hi = hi;
    if (support != nullptr) s.support = mask_of(support, values->g.height(), values->g.width());
    s.project();
    *out = wrap(std::move(s));
  });
}

refpr_status refpr_reference_load(const char* path, refpr_reference** out) {
  REFPR_REQUIRE(path);
  REFPR_REQUIRE(out);
  return guarded([&] { *out = wrap(refpr::load_reference(path)); });
}

refpr_status refpr_reference_save(const refpr_reference* ref, const char* path) {
  REFPR_REQUIRE(ref);
  REFPR_REQUIRE(path);
  return guarded([&] { refpr::save_reference(ref->ref, path); });
}

refpr_status refpr_reference_resize(const refpr_reference* ref, size_t height, size_t width,
                                    refpr_reference** out) {
  REFPR_REQUIRE(ref);
  REFPR_REQUIRE(out);
  return guarded([&] { *out = wrap(refpr::resize_reference(ref->ref, height, width)); });
}

void refpr_reference_destroy(refpr_reference* ref) { delete ref; }

const refpr_grid* refpr_reference_values(const refpr_reference* ref) {
  return ref ? &ref->view : nullptr;
}

double refpr_reference_lo(const refpr_reference* ref) {
  return ref ? ref->ref.lo : std::numeric_limits<double>::quiet_NaN();
}

double refpr_reference_hi(const refpr_reference* ref) {
  return ref ? ref->ref.hi : std::numeric_limits<double>::quiet_NaN();
}

int refpr_reference_has_support(const refpr_reference* ref) {
  return ref && ref->ref.support.has_value() ? 1 : 0;
}

// ---- measurement and reconstruction ----------------------------------------

refpr_status refpr_measure(const refpr_grid* x, const refpr_grid* u, refpr_mode mode,
                           const refpr_noise_config* noise, refpr_grid** y, double* snr_db) {
  REFPR_REQUIRE(x);
  REFPR_REQUIRE(u);
  REFPR_REQUIRE(y);
  return guarded([&] {
    const refpr::MeasurementOperator op(x->g.height(), x->g.width(), mode_of(mode));
    auto result = refpr::forward_with_stats(op, x->g, u->g, noise_of(noise));
    if (snr_db != nullptr) *snr_db = result.snr_db();
    *y = wrap(std::move(result.measurements.values));
  });
}

refpr_status refpr_solve(const refpr_grid* y, const refpr_grid* u, const refpr_solver_config* cfg,
                         refpr_grid** estimate) {
  REFPR_REQUIRE(y);
  REFPR_REQUIRE(u);
  REFPR_REQUIRE(cfg);
  REFPR_REQUIRE(estimate);
  return guarded([&] {
    const refpr::SolverConfig s = solver_of(*cfg);
    const refpr::MeasurementOperator op(u->g.height(), u->g.width(), s.mode);
    const refpr::AmplitudeMeasurements m{y->g, s.mode};
    *estimate = wrap(refpr::solve_unrolled(m, u->g, op, s).estimate);
  });
}

refpr_status refpr_solve_hio(const refpr_grid* y, size_t height, size_t width,
                             const refpr_hio_config* cfg, refpr_grid** estimate) {
  REFPR_REQUIRE(y);
  REFPR_REQUIRE(cfg);
  REFPR_REQUIRE(estimate);
  return guarded([&] {
    const refpr::MeasurementOperator op(height, width);
    const refpr::AmplitudeMeasurements m{y->g, refpr::MeasurementMode::kAmplitude};
    const refpr::HioConfig h{cfg->iterations, cfg->beta, cfg->seed};
    if (cfg->restarts == 0) throw refpr::ParameterError("hio restarts must be at least 1");
    *estimate = wrap(refpr::solve_hio_best_of(m, op, h, cfg->restarts));
  });
}

refpr_status refpr_psnr(const refpr_grid* estimate, const refpr_grid* truth, double* psnr_db) {
  REFPR_REQUIRE(estimate);
  REFPR_REQUIRE(truth);
  REFPR_REQUIRE(psnr_db);
  return guarded([&] { *psnr_db = refpr::reconstruction_psnr(estimate->g, truth->g).psnr_db; });
}

refpr_status refpr_psnr_resolved(const refpr_grid* estimate, const refpr_grid* truth,
                                 double* psnr_db) {
  REFPR_REQUIRE(estimate);
  REFPR_REQUIRE(truth);
  REFPR_REQUIRE(psnr_db);
  return guarded([&] {
    *psnr_db = refpr::psnr_ambiguity_resolved(refpr::clip(estimate->g, 0.0, 1.0), truth->g).psnr_db;
  });
}

// ---- training ---------------------------------------------------------------

refpr_status refpr_train(const refpr_dataset* dataset, const refpr_train_config* cfg,
                         const refpr_solver_config* solver, refpr_train_report** out) {
  REFPR_REQUIRE(dataset);
  REFPR_REQUIRE(cfg);
  REFPR_REQUIRE(solver);
  REFPR_REQUIRE(out);
  return guarded([&] {
    if (dataset->images.empty()) throw refpr::ParameterError("empty training dataset");
    refpr::TrainConfig t;
    t.iterations = cfg->iterations;
    t.step = cfg->step;
    t.train_size = cfg->train_size;
    switch (cfg->optimizer) {
      case REFPR_OPTIMIZER_GD: t.optimizer = refpr::Optimizer::kPlainGd; break;
      case REFPR_OPTIMIZER_ADAM: t.optimizer = refpr::Optimizer::kAdaptiveMoments; break;
      default: throw refpr::ParameterError("unknown optimizer");
    }
    switch (cfg->schedule) {
      case REFPR_SCHEDULE_CONSTANT: t.schedule = refpr::StepSchedule::kConstant; break;
      case REFPR_SCHEDULE_COSINE: t.schedule = refpr::StepSchedule::kCosine; break;
      default: throw refpr::ParameterError("unknown step schedule");
    }
    t.seed = cfg->seed;
    switch (cfg->init) {
      case REFPR_INIT_ZERO: t.init = refpr::ReferenceInit::kZero; break;
      case REFPR_INIT_FLAT_HALF: t.init = refpr::ReferenceInit::kFlatHalf; break;
      case REFPR_INIT_UNIFORM_RANDOM: t.init = refpr::ReferenceInit::kUniformRandom; break;
      default: throw refpr::ParameterError("unknown initialization");
    }
    t.lo = cfg->lo;
    t.hi = cfg->hi;
    const auto& first = dataset->images.front().g;
    if (cfg->support != nullptr) t.support = mask_of(cfg->support, first.height(), first.width());
    if (cfg->warm_start != nullptr) t.warm_start = cfg->warm_start->g;
    const refpr::SolverConfig s = solver_of(*solver);
    const refpr::MeasurementOperator op(first.height(), first.width(), s.mode);
    std::vector<refpr::RealGrid> images;
    for (const auto& img : dataset->images) images.push_back(img.g);
    auto* r = new refpr_train_report{refpr::train_reference(images, op, t, s), {}};
    r->reference.ref = r->report.reference;
    sync_view(r->reference);
    *out = r;
  });
}

void refpr_train_report_destroy(refpr_train_report* report) { delete report; }

size_t refpr_train_report_iterations(const refpr_train_report* report) {
  return report ? report->report.loss_history.size() : 0;
}

double refpr_train_report_loss(const refpr_train_report* report, size_t j) {
  if (report == nullptr) return std::numeric_limits<double>::quiet_NaN();
  const auto& h = report->report.loss_history;
  if (j < h.size()) return h[j];
  if (j == h.size()) return report->report.final_loss;
  return std::numeric_limits<double>::quiet_NaN();
}

double refpr_train_report_seconds(const refpr_train_report* report) {
  return report ? report->report.wall_seconds : 0.0;
}

const refpr_reference* refpr_train_report_reference(const refpr_train_report* report) {
  return report ? &report->reference : nullptr;
}

refpr_status refpr_loss(const refpr_grid* u, const refpr_dataset* dataset, size_t count,
                        const refpr_solver_config* solver, double* loss) {
  REFPR_REQUIRE(u);
  REFPR_REQUIRE(dataset);
  REFPR_REQUIRE(solver);
  REFPR_REQUIRE(loss);
  return guarded([&] {
    const refpr::SolverConfig s = solver_of(*solver);
    const refpr::MeasurementOperator op(u->g.height(), u->g.width(), s.mode);
    *loss = refpr::loss_u(u->g, first_images(*dataset, count), op, s);
  });
}

refpr_status refpr_autotune_alpha(const refpr_grid* u, const refpr_dataset* dataset, size_t count,
                                  const refpr_solver_config* solver, double* alpha) {
  REFPR_REQUIRE(u);
  REFPR_REQUIRE(dataset);
  REFPR_REQUIRE(solver);
  REFPR_REQUIRE(alpha);
  return guarded([&] {
    const refpr::SolverConfig s = solver_of(*solver);
    const refpr::MeasurementOperator op(u->g.height(), u->g.width(), s.mode);
    *alpha = refpr::autotune_alpha(u->g, first_images(*dataset, count), op, s);
  });
}

}  // extern "C"
