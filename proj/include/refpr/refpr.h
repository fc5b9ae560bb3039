/* refpr: Fourier phase retrieval with a learned reference signal.
 *
 * C interface. Every object is an opaque handle owned by the caller and freed
 * with the matching *_destroy function (NULL is accepted). Functions that can
 * fail return a refpr_status; on failure refpr_last_error() describes the
 * problem for the calling thread. Output handles are written only on success.
 */
#ifndef REFPR_REFPR_H
#define REFPR_REFPR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(REFPR_BUILDING)
#    define REFPR_API __declspec(dllexport)
#  else
#    define REFPR_API __declspec(dllimport)
#  endif
#else
#  define REFPR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* PSNR values are tabulated with +inf replaced by this cap. */
#define REFPR_PSNR_CAP_DB 160.0

typedef enum refpr_status {
  REFPR_OK = 0,
  REFPR_ERR_DIMENSION = 1,
  REFPR_ERR_PARAMETER = 2,
  REFPR_ERR_DIVERGENCE = 3,
  REFPR_ERR_PARSE = 4,
  REFPR_ERR_FORMAT = 5,
  REFPR_ERR_IO = 6,
  REFPR_ERR_NULL = 7,
  REFPR_ERR_INTERNAL = 8
} refpr_status;

typedef enum refpr_mode {
  REFPR_MODE_AMPLITUDE = 0,
  REFPR_MODE_SQUARED = 1
} refpr_mode;

typedef enum refpr_noise_kind {
  REFPR_NOISE_NONE = 0,
  REFPR_NOISE_GAUSSIAN = 1,
  REFPR_NOISE_POISSON = 2
} refpr_noise_kind;

typedef enum refpr_reference_kind {
  REFPR_REFERENCE_ZERO = 0,
  REFPR_REFERENCE_FLAT = 1,
  REFPR_REFERENCE_RANDOM = 2
} refpr_reference_kind;

typedef enum refpr_optimizer {
  REFPR_OPTIMIZER_GD = 0,
  REFPR_OPTIMIZER_ADAM = 1
} refpr_optimizer;

/* Step scaling over outer iterations: cosine multiplies the step at
 * iteration j of J by (1 + cos(pi j / J)) / 2. */
typedef enum refpr_schedule {
  REFPR_SCHEDULE_CONSTANT = 0,
  REFPR_SCHEDULE_COSINE = 1
} refpr_schedule;

typedef enum refpr_init {
  REFPR_INIT_ZERO = 0,
  REFPR_INIT_FLAT_HALF = 1,
  REFPR_INIT_UNIFORM_RANDOM = 2
} refpr_init;

typedef enum refpr_synth_kind {
  REFPR_SYNTH_GLYPHS = 0,
  REFPR_SYNTH_TEXTURES = 1
} refpr_synth_kind;

typedef enum refpr_resize_method {
  REFPR_RESIZE_NEAREST = 0,
  REFPR_RESIZE_BILINEAR = 1
} refpr_resize_method;

typedef enum refpr_flip {
  REFPR_FLIP_NONE = 0,
  REFPR_FLIP_HORIZONTAL = 1,
  REFPR_FLIP_VERTICAL = 2,
  REFPR_FLIP_BOTH = 3
} refpr_flip;

typedef struct refpr_grid refpr_grid;
typedef struct refpr_reference refpr_reference;
typedef struct refpr_dataset refpr_dataset;
typedef struct refpr_train_report refpr_train_report;

/* Unrolled solver settings. alpha_per_layer, when non-NULL, must hold
 * `layers` entries and overrides alpha. */
typedef struct refpr_solver_config {
  size_t layers;
  double alpha;
  const double* alpha_per_layer;
  double epsilon_phase;
  refpr_mode mode;
} refpr_solver_config;

typedef struct refpr_noise_config {
  refpr_noise_kind kind;
  double sigma;
  double lambda;
  uint64_t seed;
} refpr_noise_config;

/* support, when non-NULL, is a row-major 0/1 mask of the image size.
 * warm_start, when non-NULL, supplies the initial reference values and
 * overrides init. */
typedef struct refpr_train_config {
  size_t iterations;
  double step;
  size_t train_size;
  refpr_optimizer optimizer;
  refpr_schedule schedule;
  uint64_t seed;
  refpr_init init;
  double lo;
  double hi;
  const uint8_t* support;
  const refpr_grid* warm_start;
} refpr_train_config;

typedef struct refpr_hio_config {
  size_t iterations;
  double beta;
  uint64_t seed;
  size_t restarts;
} refpr_hio_config;

/* ---- library ------------------------------------------------------------ */

REFPR_API const char* refpr_version(void);
REFPR_API const char* refpr_status_string(refpr_status status);
/* Message of the last failure on this thread; "" if none. */
REFPR_API const char* refpr_last_error(void);
REFPR_API uint64_t refpr_derive_seed(uint64_t root, const char* purpose, uint64_t index);

REFPR_API void refpr_solver_config_init(refpr_solver_config* cfg);
REFPR_API void refpr_noise_config_init(refpr_noise_config* cfg);
REFPR_API void refpr_train_config_init(refpr_train_config* cfg);
REFPR_API void refpr_hio_config_init(refpr_hio_config* cfg);

/* ---- grids -------------------------------------------------------------- */

REFPR_API refpr_status refpr_grid_create(size_t height, size_t width, refpr_grid** out);
/* Copies height*width row-major values. */
REFPR_API refpr_status refpr_grid_from_data(size_t height, size_t width, const double* values,
                                            refpr_grid** out);
REFPR_API refpr_status refpr_grid_clone(const refpr_grid* grid, refpr_grid** out);
REFPR_API void refpr_grid_destroy(refpr_grid* grid);
REFPR_API size_t refpr_grid_height(const refpr_grid* grid);
REFPR_API size_t refpr_grid_width(const refpr_grid* grid);
REFPR_API double* refpr_grid_data(refpr_grid* grid);
REFPR_API const double* refpr_grid_cdata(const refpr_grid* grid);

REFPR_API refpr_status refpr_grid_load_pgm(const char* path, refpr_grid** out);
/* Clamps to [0, 1] and quantizes round-half-up to maxval. */
REFPR_API refpr_status refpr_grid_save_pgm(const refpr_grid* grid, const char* path,
                                           uint32_t maxval);
REFPR_API refpr_status refpr_grid_resize(const refpr_grid* grid, size_t height, size_t width,
                                         refpr_resize_method method, refpr_grid** out);
/* Flip, optional 180-degree rotation, then circular shift by (rows, cols). */
REFPR_API refpr_status refpr_grid_transform(const refpr_grid* grid, refpr_flip flip,
                                            int rotate180, size_t shift_rows, size_t shift_cols,
                                            refpr_grid** out);

/* ---- datasets ----------------------------------------------------------- */

/* Loads every image listed in a manifest, in file order. */
REFPR_API refpr_status refpr_dataset_load_manifest(const char* path, refpr_dataset** out);
REFPR_API refpr_status refpr_dataset_synthesize(refpr_synth_kind kind, size_t count,
                                                size_t height, size_t width, uint64_t seed,
                                                refpr_dataset** out);
/* Writes image_NNNNN.pgm files and a manifest into `directory`. */
REFPR_API refpr_status refpr_dataset_save(const refpr_dataset* dataset, const char* directory,
                                          const char* manifest_name, uint32_t maxval);
/* Resizes every image in place. */
REFPR_API refpr_status refpr_dataset_resize(refpr_dataset* dataset, size_t height, size_t width,
                                            refpr_resize_method method);
REFPR_API void refpr_dataset_destroy(refpr_dataset* dataset);
REFPR_API size_t refpr_dataset_size(const refpr_dataset* dataset);
/* Borrowed; valid until the dataset is destroyed or resized. */
REFPR_API const refpr_grid* refpr_dataset_image(const refpr_dataset* dataset, size_t index);
/* Source path of image `index`, or "" for synthesized images. */
REFPR_API const char* refpr_dataset_path(const refpr_dataset* dataset, size_t index);

/* ---- references --------------------------------------------------------- */

REFPR_API refpr_status refpr_reference_make(refpr_reference_kind kind, size_t height,
                                            size_t width, double lo, double hi, uint64_t seed,
                                            refpr_reference** out);
/* support may be NULL. The values are projected onto the bounds and mask. */
REFPR_API refpr_status refpr_reference_create(const refpr_grid* values, double lo, double hi,
                                              const uint8_t* support, refpr_reference** out);
REFPR_API refpr_status refpr_reference_load(const char* path, refpr_reference** out);
REFPR_API refpr_status refpr_reference_save(const refpr_reference* ref, const char* path);
REFPR_API refpr_status refpr_reference_resize(const refpr_reference* ref, size_t height,
                                              size_t width, refpr_reference** out);
REFPR_API void refpr_reference_destroy(refpr_reference* ref);
/* Borrowed view of the values. */
REFPR_API const refpr_grid* refpr_reference_values(const refpr_reference* ref);
REFPR_API double refpr_reference_lo(const refpr_reference* ref);
REFPR_API double refpr_reference_hi(const refpr_reference* ref);
REFPR_API int refpr_reference_has_support(const refpr_reference* ref);

/* ---- measurement and reconstruction ------------------------------------- */

/* y = max(0, |A x + B u| + noise) on the 2h x 2w canvas (|.|^2 in squared
 * mode). noise may be NULL. snr_db may be NULL; it receives +inf when
 * noise-free. */
REFPR_API refpr_status refpr_measure(const refpr_grid* x, const refpr_grid* u, refpr_mode mode,
                                     const refpr_noise_config* noise, refpr_grid** y,
                                     double* snr_db);
/* Unrolled solver from x = 0. The signal size is taken from u. */
REFPR_API refpr_status refpr_solve(const refpr_grid* y, const refpr_grid* u,
                                   const refpr_solver_config* cfg, refpr_grid** estimate);
/* Reference-free HIO baseline on amplitude measurements. */
REFPR_API refpr_status refpr_solve_hio(const refpr_grid* y, size_t height, size_t width,
                                       const refpr_hio_config* cfg, refpr_grid** estimate);

/* PSNR (peak 1) of an estimate clipped to [0, 1]. +inf on exact match. */
REFPR_API refpr_status refpr_psnr(const refpr_grid* estimate, const refpr_grid* truth,
                                  double* psnr_db);
/* Best PSNR over circular shifts, flips and 180-degree rotation. */
REFPR_API refpr_status refpr_psnr_resolved(const refpr_grid* estimate, const refpr_grid* truth,
                                           double* psnr_db);

/* ---- training ----------------------------------------------------------- */

/* Learns a reference on the first cfg->train_size images of the dataset. */
REFPR_API refpr_status refpr_train(const refpr_dataset* dataset, const refpr_train_config* cfg,
                                   const refpr_solver_config* solver, refpr_train_report** out);
REFPR_API void refpr_train_report_destroy(refpr_train_report* report);
REFPR_API size_t refpr_train_report_iterations(const refpr_train_report* report);
/* Loss before outer iteration j; j == iterations gives the final loss. */
REFPR_API double refpr_train_report_loss(const refpr_train_report* report, size_t j);
REFPR_API double refpr_train_report_seconds(const refpr_train_report* report);
/* Borrowed; valid until the report is destroyed. */
REFPR_API const refpr_reference* refpr_train_report_reference(const refpr_train_report* report);

/* Sum of squared reconstruction errors over the first `count` images. */
REFPR_API refpr_status refpr_loss(const refpr_grid* u, const refpr_dataset* dataset, size_t count,
                                  const refpr_solver_config* solver, double* loss);
/* Step size from the fixed candidate grid minimizing the loss. */
REFPR_API refpr_status refpr_autotune_alpha(const refpr_grid* u, const refpr_dataset* dataset,
                                            size_t count, const refpr_solver_config* solver,
                                            double* alpha);

#ifdef __cplusplus
}
#endif

#endif
