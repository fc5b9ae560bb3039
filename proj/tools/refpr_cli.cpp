// refpr command-line harness. Links only the C interface.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "refpr/refpr.h"

namespace fs = std::filesystem;

namespace {

enum ExitCode {
  kExitOk = 0,
  kExitOther = 1,
  kExitUsage = 2,
  kExitIo = 3,
  kExitDivergence = 4,
  kExitParse = 5,
};

struct CliError : std::runtime_error {
  CliError(int code, const std::string& message) : std::runtime_error(message), code(code) {}
  int code;
};

int exit_code_of(refpr_status s) {
  switch (s) {
    case REFPR_OK: return kExitOk;
    case REFPR_ERR_IO: return kExitIo;
    case REFPR_ERR_DIVERGENCE: return kExitDivergence;
    case REFPR_ERR_PARSE:
    case REFPR_ERR_FORMAT: return kExitParse;
    case REFPR_ERR_PARAMETER:
    case REFPR_ERR_DIMENSION: return kExitUsage;
    default: return kExitOther;
  }
}

void check(refpr_status s, const std::string& what) {
  if (s != REFPR_OK) throw CliError(exit_code_of(s), what + ": " + refpr_last_error());
}

struct GridFree {
  void operator()(refpr_grid* p) const { refpr_grid_destroy(p); }
};
struct DatasetFree {
  void operator()(refpr_dataset* p) const { refpr_dataset_destroy(p); }
};
struct ReferenceFree {
  void operator()(refpr_reference* p) const { refpr_reference_destroy(p); }
};
struct ReportFree {
  void operator()(refpr_train_report* p) const { refpr_train_report_destroy(p); }
};
using Grid = std::unique_ptr<refpr_grid, GridFree>;
using Dataset = std::unique_ptr<refpr_dataset, DatasetFree>;
using Reference = std::unique_ptr<refpr_reference, ReferenceFree>;
using Report = std::unique_ptr<refpr_train_report, ReportFree>;

// ---------------------------------------------------------------------------
// Configuration

const std::map<std::string, std::string> kDefaults = {
    {"seed", "0"},
    {"dataset", "glyphs"},
    {"test_dataset", ""},
    {"height", "32"},
    {"width", "32"},
    {"resize", "bilinear"},
    {"train_size", "32"},
    {"test_size", "100"},
    {"count", "100"},
    {"maxval", "65535"},
    {"layers", "50"},
    {"test_layers", "0"},
    {"alpha", "0.25"},
    {"alpha_autotune", "false"},
    {"mode", "amplitude"},
    {"epsilon_phase", "1e-12"},
    {"iterations", "300"},
    {"step", "0.01"},
    {"optimizer", "adam"},
    {"schedule", "constant"},
    {"init", "random"},
    {"lo", "0"},
    {"hi", "1"},
    {"mask", "none"},
    {"mask_size", "8"},
    {"mask_position", "top-left"},
    {"noise", "none"},
    {"noise_sigma", "0"},
    {"noise_lambda", "0"},
    {"reference", ""},
    {"warm_start", ""},
    {"reference_kind", "learned"},
    {"hio_iterations", "600"},
    {"hio_beta", "0.9"},
    {"hio_restarts", "10"},
    {"axis", "noise_sigma"},
    {"values", ""},
    {"write_images", "true"},
};

bool is_synthetic(const std::string& source) { return source == "glyphs" || source == "textures"; }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Config {
 public:
  Config() : values_(kDefaults) {}

  void set(const std::string& key, const std::string& value, const fs::path& base) {
    if (!kDefaults.count(key)) throw CliError(kExitUsage, "unknown configuration key '" + key + "'");
    std::string v = value;
    if (is_path_key(key, v) && !v.empty()) v = fs::absolute(base / v).lexically_normal().string();
    values_[key] = v;
  }

  void set_assignment(const std::string& assignment, const fs::path& base) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw CliError(kExitUsage, "expected key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), base);
  }

  void load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw CliError(kExitIo, "cannot open config file: " + path.string());
    const fs::path base = fs::absolute(path).parent_path();
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      if (t.find('=') == std::string::npos) {
        throw CliError(kExitParse, path.string() + ":" + std::to_string(number) + ": expected key = value");
      }
      set_assignment(t, base);
    }
  }

  void write_snapshot(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliError(kExitIo, "cannot write " + path.string());
    out << "# resolved configuration; rerun with --config " << path.filename().string() << "\n";
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
  }

  const std::string& str(const std::string& key) const { return values_.at(key); }

  double real(const std::string& key) const {
    const std::string& s = str(key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !std::isfinite(v)) bad(key, "a finite number");
    return v;
  }

  std::uint64_t u64(const std::string& key) const {
    const std::string& s = str(key);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || s[0] == '-') bad(key, "a nonnegative integer");
    return v;
  }

  std::size_t size(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

  bool flag(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    bad(key, "true or false");
    return false;
  }

 private:
  static bool is_path_key(const std::string& key, const std::string& value) {
    if (key == "reference" || key == "warm_start") return true;
    if (key == "dataset" || key == "test_dataset") return !is_synthetic(value) && value != "train";
    return false;
  }

  [[noreturn]] void bad(const std::string& key, const char* expected) const {
    throw CliError(kExitUsage, "configuration key '" + key + "' must be " + expected + ", got '" +
                                   str(key) + "'");
  }

  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Helpers

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double tabulated(double psnr) { return std::min(psnr, REFPR_PSNR_CAP_DB); }

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

Summary summarize(const std::vector<double>& v) {
  Summary s;
  s.n = v.size();
  if (v.empty()) return s;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(v.size()));
  return s;
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw CliError(kExitIo, "cannot write " + path.string());
    out_ << header << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
  fs::path path_;
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

// A view over a contiguous slice of a dataset.
struct ImageSet {
  std::shared_ptr<refpr_dataset> data;
  std::size_t begin = 0;
  std::size_t count = 0;
  const refpr_grid* image(std::size_t i) const { return refpr_dataset_image(data.get(), begin + i); }
  std::string source(std::size_t i) const {
    const std::string p = refpr_dataset_path(data.get(), begin + i);
    return p.empty() ? "synthetic:" + std::to_string(begin + i) : p;
  }
};

class Run {
 public:
  Run(Config cfg, fs::path out) : cfg_(std::move(cfg)), out_(std::move(out)) {
    h_ = cfg_.size("height");
    w_ = cfg_.size("width");
    seed_ = cfg_.u64("seed");
    if (h_ == 0 || w_ == 0) throw CliError(kExitUsage, "height and width must be positive");
  }

  const Config& cfg() const { return cfg_; }
  Config& cfg() { return cfg_; }
  const fs::path& out() const { return out_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t height() const { return h_; }
  std::size_t width() const { return w_; }

  void prepare_output() const {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) throw CliError(kExitIo, "cannot create output directory " + out_.string());
    cfg_.write_snapshot(out_ / "config.resolved.txt");
  }

  std::shared_ptr<refpr_dataset> load_source(const std::string& source, std::size_t count,
                                             const char* purpose) const {
    refpr_dataset* d = nullptr;
    if (is_synthetic(source)) {
      const auto kind = source == "glyphs" ? REFPR_SYNTH_GLYPHS : REFPR_SYNTH_TEXTURES;
      check(refpr_dataset_synthesize(kind, count, h_, w_, refpr_derive_seed(seed_, purpose, 0), &d),
            "synthesizing " + source);
    } else {
      check(refpr_dataset_load_manifest(source.c_str(), &d), "loading manifest");
      std::shared_ptr<refpr_dataset> owned(d, refpr_dataset_destroy);
      const refpr_grid* first = refpr_dataset_image(d, 0);
      if (first != nullptr && (refpr_grid_height(first) != h_ || refpr_grid_width(first) != w_)) {
        const auto method = cfg_.str("resize") == "nearest" ? REFPR_RESIZE_NEAREST : REFPR_RESIZE_BILINEAR;
        check(refpr_dataset_resize(d, h_, w_, method), "resizing dataset");
      }
      return owned;
    }
    return std::shared_ptr<refpr_dataset>(d, refpr_dataset_destroy);
  }

  ImageSet train_set() {
    if (!train_) {
      const std::string& source = cfg_.str("dataset");
      const std::size_t n = cfg_.size("train_size");
      if (n == 0) throw CliError(kExitUsage, "train_size must be positive");
      auto d = load_source(source, n, "train-set");
      if (refpr_dataset_size(d.get()) < n) {
        throw CliError(kExitUsage, "dataset has " + std::to_string(refpr_dataset_size(d.get())) +
                                       " images, train_size is " + std::to_string(n));
      }
      train_ = ImageSet{d, 0, n};
    }
    return *train_;
  }

  ImageSet test_set() {
    const std::string& dataset = cfg_.str("dataset");
    const std::string& test = cfg_.str("test_dataset");
    const std::size_t n = cfg_.size("test_size");
    if (n == 0) throw CliError(kExitUsage, "test_size must be positive");
    if (test == "train") return train_set();
    if (test.empty() && !is_synthetic(dataset)) {
      // Held-out images follow the training images in the same manifest.
      auto d = load_source(dataset, 0, "test-set");
      const std::size_t skip = cfg_.size("train_size");
      const std::size_t total = refpr_dataset_size(d.get());
      if (total <= skip) throw CliError(kExitUsage, "manifest has no images left after the training split");
      return ImageSet{d, skip, std::min(n, total - skip)};
    }
    const std::string source = test.empty() ? dataset : test;
    auto d = load_source(source, n, "test-set");
    return ImageSet{d, 0, std::min(n, refpr_dataset_size(d.get()))};
  }

  refpr_solver_config solver(bool testing) const {
    refpr_solver_config s;
    refpr_solver_config_init(&s);
    s.layers = cfg_.size("layers");
    if (testing && cfg_.size("test_layers") > 0) s.layers = cfg_.size("test_layers");
    s.alpha = cfg_.real("alpha");
    s.epsilon_phase = cfg_.real("epsilon_phase");
    const std::string& mode = cfg_.str("mode");
    if (mode == "amplitude") {
      s.mode = REFPR_MODE_AMPLITUDE;
    } else if (mode == "squared") {
      s.mode = REFPR_MODE_SQUARED;
    } else {
      throw CliError(kExitUsage, "mode must be amplitude or squared");
    }
    return s;
  }

  refpr_noise_config noise(std::size_t index) const {
    refpr_noise_config n;
    refpr_noise_config_init(&n);
    const std::string& kind = cfg_.str("noise");
    if (kind == "none") {
      n.kind = REFPR_NOISE_NONE;
    } else if (kind == "gaussian") {
      n.kind = REFPR_NOISE_GAUSSIAN;
    } else if (kind == "poisson") {
      n.kind = REFPR_NOISE_POISSON;
    } else {
      throw CliError(kExitUsage, "noise must be none, gaussian or poisson");
    }
    n.sigma = cfg_.real("noise_sigma");
    n.lambda = cfg_.real("noise_lambda");
    n.seed = refpr_derive_seed(seed_, "noise", index);
    return n;
  }

  std::vector<std::uint8_t> support_mask() const {
    const std::string& mask = cfg_.str("mask");
    if (mask == "none") return {};
    if (mask != "block") throw CliError(kExitUsage, "mask must be none or block");
    const std::size_t b = cfg_.size("mask_size");
    if (b == 0 || b > h_ || b > w_) throw CliError(kExitUsage, "mask_size must fit inside the image");
    const std::string& pos = cfg_.str("mask_position");
    std::size_t top = 0;
    std::size_t left = 0;
    if (pos == "top-left") {
    } else if (pos == "top-right") {
      left = w_ - b;
    } else if (pos == "bottom-left") {
      top = h_ - b;
    } else if (pos == "bottom-right") {
      top = h_ - b;
      left = w_ - b;
    } else if (pos == "center") {
      top = (h_ - b) / 2;
      left = (w_ - b) / 2;
    } else {
      throw CliError(kExitUsage, "mask_position must be top-left, top-right, bottom-left, bottom-right or center");
    }
    std::vector<std::uint8_t> m(h_ * w_, 0);
    for (std::size_t r = top; r < top + b; ++r) {
      for (std::size_t c = left; c < left + b; ++c) m[r * w_ + c] = 1;
    }
    return m;
  }

  // Applies alpha auto-tuning against the training set when enabled.
  void autotune(const refpr_grid* u) {
    if (!cfg_.flag("alpha_autotune") || tuned_) return;
    const ImageSet t = train_set();
    refpr_solver_config s = solver(false);
    double alpha = 0.0;
    check(refpr_autotune_alpha(u, t.data.get(), t.count, &s, &alpha), "alpha autotune");
    cfg_.set("alpha", num(alpha), fs::current_path());
    tuned_ = true;
  }

  Report train() {
    const ImageSet t = train_set();
    refpr_train_config tc;
    refpr_train_config_init(&tc);
    tc.iterations = cfg_.size("iterations");
    tc.step = cfg_.real("step");
    tc.train_size = t.count;
    const std::string& opt = cfg_.str("optimizer");
    if (opt == "adam") {
      tc.optimizer = REFPR_OPTIMIZER_ADAM;
    } else if (opt == "gd") {
      tc.optimizer = REFPR_OPTIMIZER_GD;
    } else {
      throw CliError(kExitUsage, "optimizer must be adam or gd");
    }
    const std::string& schedule = cfg_.str("schedule");
    if (schedule == "constant") {
      tc.schedule = REFPR_SCHEDULE_CONSTANT;
    } else if (schedule == "cosine") {
      tc.schedule = REFPR_SCHEDULE_COSINE;
    } else {
      throw CliError(kExitUsage, "schedule must be constant or cosine");
    }
    tc.seed = refpr_derive_seed(seed_, "train", 0);
    const std::string& init = cfg_.str("init");
    if (init == "random") {
      tc.init = REFPR_INIT_UNIFORM_RANDOM;
    } else if (init == "flat") {
      tc.init = REFPR_INIT_FLAT_HALF;
    } else if (init == "zero") {
      tc.init = REFPR_INIT_ZERO;
    } else {
      throw CliError(kExitUsage, "init must be random, flat or zero");
    }
    tc.lo = cfg_.real("lo");
    tc.hi = cfg_.real("hi");
    const auto mask = support_mask();
    tc.support = mask.empty() ? nullptr : mask.data();
    Reference warm;
    if (!cfg_.str("warm_start").empty()) {
      warm = load_reference_sized(cfg_.str("warm_start"));
      tc.warm_start = refpr_reference_values(warm.get());
    }
    if (cfg_.flag("alpha_autotune")) {
      refpr_reference* init_ref = nullptr;
      check(refpr_reference_make(REFPR_REFERENCE_RANDOM, h_, w_, tc.lo, tc.hi,
                                 refpr_derive_seed(seed_, "random-reference", 0), &init_ref),
            "reference");
      Reference owned(init_ref);
      autotune(refpr_reference_values(init_ref));
    }
    const refpr_solver_config s = solver(false);
    refpr_train_report* report = nullptr;
    check(refpr_train(t.data.get(), &tc, &s, &report), "training");
    return Report(report);
  }

  // A reference file, resized to the image size when needed.
  Reference load_reference_sized(const std::string& path) {
    refpr_reference* r = nullptr;
    check(refpr_reference_load(path.c_str(), &r), "loading reference");
    Reference loaded(r);
    const refpr_grid* v = refpr_reference_values(r);
    if (refpr_grid_height(v) != h_ || refpr_grid_width(v) != w_) {
      refpr_reference* resized = nullptr;
      check(refpr_reference_resize(r, h_, w_, &resized), "resizing reference");
      loaded.reset(resized);
    }
    return loaded;
  }

  // The reference selected by reference_kind; learned references come from
  // the `reference` file or are trained here.
  Reference reference(const std::string& kind) {
    refpr_reference* r = nullptr;
    const double lo = cfg_.real("lo");
    const double hi = cfg_.real("hi");
    if (kind == "learned") {
      const std::string& path = cfg_.str("reference");
      if (!path.empty()) return load_reference_sized(path);
      Report rep = train();
      refpr_reference* copy = nullptr;
      const refpr_reference* trained = refpr_train_report_reference(rep.get());
      check(refpr_reference_create(refpr_reference_values(trained), refpr_reference_lo(trained),
                                   refpr_reference_hi(trained), nullptr, &copy),
            "reference");
      return Reference(copy);
    }
    refpr_reference_kind k;
    if (kind == "random") {
      k = REFPR_REFERENCE_RANDOM;
    } else if (kind == "flat") {
      k = REFPR_REFERENCE_FLAT;
    } else if (kind == "zero") {
      k = REFPR_REFERENCE_ZERO;
    } else {
      throw CliError(kExitUsage, "reference_kind must be learned, random, flat or zero");
    }
    check(refpr_reference_make(k, h_, w_, lo, hi, refpr_derive_seed(seed_, "random-reference", 0), &r),
          "reference");
    return Reference(r);
  }

  struct Reconstruction {
    double psnr = 0.0;
    double snr_db = 0.0;
    Grid estimate;
  };

  Reconstruction reconstruct(const refpr_grid* x, const refpr_grid* u, std::size_t index,
                             const refpr_solver_config& s) const {
    const refpr_noise_config n = noise(index);
    refpr_grid* y = nullptr;
    Reconstruction out;
    check(refpr_measure(x, u, s.mode, &n, &y, &out.snr_db), "measuring");
    Grid owned_y(y);
    refpr_grid* est = nullptr;
    check(refpr_solve(y, u, &s, &est), "solving image " + std::to_string(index));
    out.estimate.reset(est);
    check(refpr_psnr(est, x, &out.psnr), "psnr");
    return out;
  }

  std::vector<double> evaluate(const ImageSet& set, const refpr_grid* u, const refpr_solver_config& s,
                               std::vector<double>* snrs = nullptr) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < set.count; ++i) {
      const Reconstruction r = reconstruct(set.image(i), u, i, s);
      out.push_back(tabulated(r.psnr));
      if (snrs) snrs->push_back(r.snr_db);
    }
    return out;
  }

 private:
  Config cfg_;
  fs::path out_;
  std::size_t h_ = 0;
  std::size_t w_ = 0;
  std::uint64_t seed_ = 0;
  bool tuned_ = false;
  std::optional<ImageSet> train_;
};

void save_reference_outputs(const refpr_reference* ref, const fs::path& dir, const std::string& stem) {
  check(refpr_reference_save(ref, (dir / (stem + ".rfu")).string().c_str()), "saving reference");
  // Visualization mapped from [lo, hi] onto the full gray range.
  const refpr_grid* v = refpr_reference_values(ref);
  const double lo = refpr_reference_lo(ref);
  const double hi = refpr_reference_hi(ref);
  refpr_grid* vis = nullptr;
  check(refpr_grid_clone(v, &vis), "reference image");
  Grid owned(vis);
  double* d = refpr_grid_data(vis);
  const std::size_t n = refpr_grid_height(vis) * refpr_grid_width(vis);
  for (std::size_t i = 0; i < n; ++i) d[i] = hi > lo ? (d[i] - lo) / (hi - lo) : 0.0;
  check(refpr_grid_save_pgm(vis, (dir / (stem + ".pgm")).string().c_str(), 255), "saving reference image");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError(kExitIo, "cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_train(Run& run) {
  run.prepare_output();
  Report rep = run.train();
  const refpr_reference* ref = refpr_train_report_reference(rep.get());
  save_reference_outputs(ref, run.out(), "reference");
  {
    CsvWriter csv(run.out() / "loss.csv", "iteration,loss");
    const std::size_t j = refpr_train_report_iterations(rep.get());
    for (std::size_t i = 0; i <= j; ++i) csv.row({std::to_string(i), num(refpr_train_report_loss(rep.get(), i))});
  }
  const ImageSet t = run.train_set();
  const refpr_grid* u = refpr_reference_values(ref);
  const refpr_solver_config s = run.solver(false);
  CsvWriter csv(run.out() / "train_psnr.csv", "index,source,psnr_db");
  std::vector<double> scores;
  for (std::size_t i = 0; i < t.count; ++i) {
    refpr_grid* y = nullptr;
    check(refpr_measure(t.image(i), u, s.mode, nullptr, &y, nullptr), "measuring");
    Grid owned_y(y);
    refpr_grid* est = nullptr;
    check(refpr_solve(y, u, &s, &est), "solving");
    Grid owned_est(est);
    double p = 0.0;
    check(refpr_psnr(est, t.image(i), &p), "psnr");
    scores.push_back(tabulated(p));
    csv.row({std::to_string(i), csv_field(t.source(i)), num(tabulated(p))});
  }
  const Summary sm = summarize(scores);
  const std::size_t j = refpr_train_report_iterations(rep.get());
  std::ostringstream text;
  text << "initial_loss = " << num(refpr_train_report_loss(rep.get(), 0)) << "\n"
       << "final_loss = " << num(refpr_train_report_loss(rep.get(), j)) << "\n"
       << "train_mean_psnr_db = " << num(sm.mean) << "\n"
       << "wall_seconds = " << num(refpr_train_report_seconds(rep.get())) << "\n";
  write_text(run.out() / "summary.txt", text.str());
  std::printf("trained %zu iterations: loss %s -> %s, train PSNR %.2f dB\n", j,
              num(refpr_train_report_loss(rep.get(), 0)).c_str(),
              num(refpr_train_report_loss(rep.get(), j)).c_str(), sm.mean);
  return kExitOk;
}

int cmd_reconstruct(Run& run) {
  run.prepare_output();
  Reference ref = run.reference(run.cfg().str("reference_kind"));
  const refpr_grid* u = refpr_reference_values(ref.get());
  run.autotune(u);
  const refpr_solver_config s = run.solver(true);
  const ImageSet set = run.test_set();
  const bool images = run.cfg().flag("write_images");
  if (images) fs::create_directories(run.out() / "images");
  CsvWriter csv(run.out() / "reconstruct.csv", "index,source,psnr_db,snr_db");
  std::vector<double> scores;
  for (std::size_t i = 0; i < set.count; ++i) {
    auto r = run.reconstruct(set.image(i), u, i, s);
    if (images) {
      char name[40];
      std::snprintf(name, sizeof name, "recon_%05zu.pgm", i);
      check(refpr_grid_save_pgm(r.estimate.get(), (run.out() / "images" / name).string().c_str(), 255),
            "writing reconstruction");
    }
    scores.push_back(tabulated(r.psnr));
    csv.row({std::to_string(i), csv_field(set.source(i)), num(tabulated(r.psnr)), num(r.snr_db)});
  }
  const Summary sm = summarize(scores);
  std::printf("reconstructed %zu images: mean PSNR %.2f dB (sd %.2f)\n", sm.n, sm.mean, sm.stddev);
  return kExitOk;
}

int cmd_eval(Run& run) {
  run.prepare_output();
  const std::string kind = run.cfg().str("reference_kind");
  Reference ref = run.reference(kind);
  const refpr_grid* u = refpr_reference_values(ref.get());
  run.autotune(u);
  const refpr_solver_config s = run.solver(true);
  const ImageSet set = run.test_set();
  const Summary sm = summarize(run.evaluate(set, u, s));
  CsvWriter csv(run.out() / "eval.csv", "reference,layers,n,mean_psnr,std_psnr,min_psnr,max_psnr");
  csv.row({kind, std::to_string(s.layers), std::to_string(sm.n), num(sm.mean), num(sm.stddev),
           num(sm.min), num(sm.max)});
  std::printf("%s reference, K=%zu: mean PSNR %.2f dB over %zu images\n", kind.c_str(), s.layers,
              sm.mean, sm.n);
  return kExitOk;
}

int cmd_baseline(Run& run) {
  run.prepare_output();
  const ImageSet set = run.test_set();
  const refpr_solver_config s = run.solver(true);
  Reference flat = run.reference("flat");
  Reference random = run.reference("random");
  Reference zero = run.reference("zero");
  refpr_hio_config hc;
  refpr_hio_config_init(&hc);
  hc.iterations = run.cfg().size("hio_iterations");
  hc.beta = run.cfg().real("hio_beta");
  hc.restarts = run.cfg().size("hio_restarts");
  std::vector<double> hio_plain;
  std::vector<double> hio_resolved;
  const std::vector<double> flat_scores = run.evaluate(set, refpr_reference_values(flat.get()), s);
  const std::vector<double> random_scores = run.evaluate(set, refpr_reference_values(random.get()), s);
  CsvWriter per(run.out() / "baseline_images.csv", "index,source,hio_plain,hio_resolved,flat,random");
  for (std::size_t i = 0; i < set.count; ++i) {
    const refpr_noise_config n = run.noise(i);
    refpr_grid* y = nullptr;
    check(refpr_measure(set.image(i), refpr_reference_values(zero.get()), REFPR_MODE_AMPLITUDE, &n, &y, nullptr),
          "measuring");
    Grid owned_y(y);
    hc.seed = refpr_derive_seed(run.seed(), "hio", i);
    refpr_grid* est = nullptr;
    check(refpr_solve_hio(y, run.height(), run.width(), &hc, &est), "hio");
    Grid owned_est(est);
    double plain = 0.0;
    double resolved = 0.0;
    check(refpr_psnr(est, set.image(i), &plain), "psnr");
    check(refpr_psnr_resolved(est, set.image(i), &resolved), "psnr");
    hio_plain.push_back(tabulated(plain));
    hio_resolved.push_back(tabulated(resolved));
    per.row({std::to_string(i), csv_field(set.source(i)), num(hio_plain.back()), num(hio_resolved.back()),
             num(flat_scores[i]), num(random_scores[i])});
  }
  CsvWriter csv(run.out() / "baseline.csv", "method,n,mean_psnr,std_psnr");
  const std::pair<const char*, const std::vector<double>*> rows[] = {
      {"hio_plain", &hio_plain}, {"hio_resolved", &hio_resolved}, {"flat", &flat_scores}, {"random", &random_scores}};
  for (const auto& [name, scores] : rows) {
    const Summary sm = summarize(*scores);
    csv.row({name, std::to_string(sm.n), num(sm.mean), num(sm.stddev)});
    std::printf("%-13s mean PSNR %.2f dB\n", name, sm.mean);
  }
  return kExitOk;
}

std::vector<std::string> split_values(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_sweep(Run& run) {
  const std::map<std::string, std::string> defaults = {
      {"noise_sigma", "0,0.01,0.02,0.05,0.1,0.2"},
      {"noise_lambda", "0,0.001,0.003,0.01,0.03,0.1"},
      {"K_test", "1,5,10,25,50,100"},
      {"train_size", "1,2,4,8,16,32"},
      {"block_position", "top-left,top-right,bottom-left,bottom-right,center"},
      {"reference_kind", "learned,random,flat,zero"},
  };
  const std::string axis = run.cfg().str("axis");
  if (!defaults.count(axis)) {
    throw CliError(kExitUsage, "axis must be one of noise_sigma, noise_lambda, K_test, train_size, "
                               "block_position, reference_kind");
  }
  const std::string value_list = run.cfg().str("values").empty() ? defaults.at(axis) : run.cfg().str("values");
  const std::vector<std::string> values = split_values(value_list);
  if (values.empty()) throw CliError(kExitUsage, "no sweep values");
  run.prepare_output();

  const bool per_value_training = axis == "train_size" || axis == "block_position";
  Reference shared;
  if (!per_value_training && axis != "reference_kind") shared = run.reference(run.cfg().str("reference_kind"));

  CsvWriter csv(run.out() / "sweep.csv", "axis,value,mean_psnr,std_psnr,n");
  std::ostringstream text;
  text << "axis = " << axis << "\n";
  for (const std::string& v : values) {
    Run point = run;
    Reference ref;
    if (axis == "noise_sigma") {
      point.cfg().set("noise", "gaussian", fs::current_path());
      point.cfg().set("noise_sigma", v, fs::current_path());
    } else if (axis == "noise_lambda") {
      point.cfg().set("noise", "poisson", fs::current_path());
      point.cfg().set("noise_lambda", v, fs::current_path());
    } else if (axis == "K_test") {
      point.cfg().set("test_layers", v, fs::current_path());
    } else if (axis == "train_size") {
      point = Run(run.cfg(), run.out());
      point.cfg().set("train_size", v, fs::current_path());
      point.cfg().set("reference", "", fs::current_path());
      ref = point.reference("learned");
    } else if (axis == "block_position") {
      point = Run(run.cfg(), run.out());
      point.cfg().set("mask", "block", fs::current_path());
      point.cfg().set("mask_position", v, fs::current_path());
      point.cfg().set("reference", "", fs::current_path());
      ref = point.reference("learned");
    } else {
      ref = point.reference(v);
    }
    if (axis == "noise_sigma" || axis == "noise_lambda") {
      if (point.cfg().real(axis) == 0.0) point.cfg().set("noise", "none", fs::current_path());
    }
    const refpr_grid* u = refpr_reference_values(ref ? ref.get() : shared.get());
    point.autotune(u);
    std::vector<double> snrs;
    const Summary sm = summarize(point.evaluate(point.test_set(), u, point.solver(true), &snrs));
    csv.row({axis, v, num(sm.mean), num(sm.stddev), std::to_string(sm.n)});
    double snr = 0.0;
    for (double x : snrs) snr += x;
    snr /= static_cast<double>(snrs.size());
    text << v << ": mean " << num(sm.mean) << " dB, sd " << num(sm.stddev) << ", n " << sm.n
         << ", mean SNR " << num(snr) << " dB\n";
    std::printf("%s=%s: mean PSNR %.2f dB (sd %.2f)\n", axis.c_str(), v.c_str(), sm.mean, sm.stddev);
    std::fflush(stdout);
  }
  write_text(run.out() / "summary.txt", text.str());
  return kExitOk;
}

int cmd_generate(Run& run) {
  const std::string& source = run.cfg().str("dataset");
  if (!is_synthetic(source)) throw CliError(kExitUsage, "generate needs dataset = glyphs or textures");
  run.prepare_output();
  auto d = run.load_source(source, run.cfg().size("count"), "generate");
  const std::uint64_t maxval = run.cfg().u64("maxval");
  if (maxval == 0 || maxval > 65535) throw CliError(kExitUsage, "maxval must be in 1..65535");
  check(refpr_dataset_save(d.get(), run.out().string().c_str(), "manifest.txt",
                           static_cast<std::uint32_t>(maxval)),
        "writing dataset");
  std::printf("wrote %zu images and manifest.txt to %s\n", refpr_dataset_size(d.get()), run.out().string().c_str());
  return kExitOk;
}

const char* kFooter = R"(Configuration is a flat file of `key = value` lines ('#' starts a comment).
Precedence: built-in defaults < --config file < --set / --seed / --out.
Every run writes config.resolved.txt into the output directory; rerunning
with --config on that file reproduces every CSV byte for byte.

Keys (defaults):
  seed (0)            root seed; noise, init, HIO and data seeds derive from it
  dataset (glyphs)    glyphs | textures | path to an image manifest
  test_dataset ()     empty: held-out images of `dataset`; train: the training
                      images; otherwise glyphs | textures | manifest path
  height, width (32)  image size; manifest images are resized to it (resize)
  train_size (32)  test_size (100)  count (100, generate)  maxval (65535)
  layers (50)  test_layers (0 = layers)  alpha (0.25)  alpha_autotune (false)
  mode (amplitude | squared)  epsilon_phase (1e-12)
  iterations (300)  step (0.01)  optimizer (adam | gd)
  schedule (constant | cosine)
  init (random | flat | zero)  lo (0)  hi (1)
  mask (none | block)  mask_size (8)
  mask_position (top-left | top-right | bottom-left | bottom-right | center)
  noise (none | gaussian | poisson)  noise_sigma (0)  noise_lambda (0)
  reference ()        learned reference file; empty trains one in-process
  warm_start ()       reference file whose values start training (overrides init)
  reference_kind (learned | random | flat | zero)
  hio_iterations (600)  hio_beta (0.9)  hio_restarts (10)
  axis, values        sweep axis and comma-separated values
  write_images (true)

Outputs (CSV: header row, comma separated, LF line endings):
  train        loss.csv        iteration,loss
               train_psnr.csv  index,source,psnr_db
               reference.rfu, reference.pgm, summary.txt
  reconstruct  reconstruct.csv index,source,psnr_db,snr_db
               images/recon_NNNNN.pgm
  eval         eval.csv        reference,layers,n,mean_psnr,std_psnr,min_psnr,max_psnr
  baseline     baseline.csv    method,n,mean_psnr,std_psnr
               baseline_images.csv index,source,hio_plain,hio_resolved,flat,random
  sweep        sweep.csv       axis,value,mean_psnr,std_psnr,n
               summary.txt (includes the mean measurement SNR per point)
  generate     image_NNNNN.pgm, manifest.txt

Sweep axes: noise_sigma, noise_lambda, K_test, train_size, block_position,
reference_kind. PSNR uses peak 1 on estimates clipped to [0, 1]; exact
reconstructions are tabulated as 160 dB. SNR = 20 log10(||clean|| / ||noise||).

Exit codes: 0 ok, 1 other failure, 2 usage or unknown key, 3 missing file or
I/O failure, 4 divergence, 5 parse or format error.)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourier phase retrieval with a learned reference"};
  app.footer(kFooter);
  app.require_subcommand(1);
  std::string config_path;
  std::string seed;
  std::string out = "out";
  std::vector<std::string> sets;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(Run&);
  };
  const Command commands[] = {
      {"train", "learn a reference on the training images", cmd_train},
      {"reconstruct", "measure and reconstruct every test image", cmd_reconstruct},
      {"eval", "mean reconstruction PSNR of a reference on the test images", cmd_eval},
      {"sweep", "evaluate over one experiment axis", cmd_sweep},
      {"baseline", "HIO, flat and random reference baselines", cmd_baseline},
      {"generate", "write a synthetic dataset as PGM files plus a manifest", cmd_generate},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--seed", seed, "root seed (overrides the config)");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--set", sets, "override one key: --set key=value (repeatable)");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    Config cfg;
    if (!config_path.empty()) cfg.load(config_path);
    for (const std::string& s : sets) cfg.set_assignment(s, fs::current_path());
    if (!seed.empty()) cfg.set("seed", seed, fs::current_path());
    Run run(cfg, fs::absolute(out));
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return commands[i].run(run);
    }
    return kExitUsage;
  } catch (const CliError& e) {
    std::fprintf(stderr, "refpr: error: %s\n", e.what());
    return e.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "refpr: error: %s\n", e.what());
    return kExitOther;
  }
}
