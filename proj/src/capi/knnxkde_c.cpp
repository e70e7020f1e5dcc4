#include "knnxkde/knnxkde.h"

#include "knnxkde/benchmark.hpp"
#include "knnxkde/dataset.hpp"
#include "knnxkde/errors.hpp"
#include "knnxkde/evaluation.hpp"
#include "knnxkde/knnxkde.hpp"
#include "knnxkde/missingness.hpp"
#include "knnxkde/parallel.hpp"
#include "knnxkde/synthetic.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <new>

#include <nlohmann/json.hpp>

struct kxk_matrix {
  knnxkde::DataMatrix m;
};

struct kxk_imputation {
  knnxkde::ImputeResult result;
  kxk_matrix imputed;
  std::vector<std::string> names;
  bool has_samples = false;
};

namespace {

thread_local std::string g_last_error;

kxk_status fail(kxk_status s, const char* what) {
  g_last_error = what;
  return s;
}

// Runs `fn`, translating exceptions into status codes.
template <class F>
kxk_status guarded(F&& fn) {
  try {
    g_last_error.clear();
    fn();
    return KXK_OK;
  } catch (const knnxkde::NotImplemented& e) {
    return fail(KXK_ERR_NOT_IMPLEMENTED, e.what());
  } catch (const knnxkde::EmptyDonors& e) {
    return fail(KXK_ERR_EMPTY_DONORS, e.what());
  } catch (const knnxkde::ParseError& e) {
    return fail(KXK_ERR_PARSE, e.what());
  } catch (const knnxkde::IoError& e) {
    return fail(KXK_ERR_IO, e.what());
  } catch (const knnxkde::DimensionError& e) {
    return fail(KXK_ERR_DIMENSION, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(KXK_ERR_PARSE, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(KXK_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(KXK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(KXK_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(KXK_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::size_t resolve_threads(std::size_t t) { return t ? t : knnxkde::default_thread_count(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw knnxkde::IoError("cannot write " + path);
  f << text;
  if (!f) throw knnxkde::IoError("failed writing " + path);
}

} // namespace

extern "C" {

const char* kxk_version(void) { return knnxkde::kLibraryVersion; }

const char* kxk_last_error(void) { return g_last_error.c_str(); }

const char* kxk_status_name(kxk_status status) {
  switch (status) {
  case KXK_OK: return "ok";
  case KXK_ERR_INVALID_ARGUMENT: return "invalid argument";
  case KXK_ERR_PARSE: return "parse error";
  case KXK_ERR_DIMENSION: return "dimension error";
  case KXK_ERR_IO: return "i/o error";
  case KXK_ERR_EMPTY_DONORS: return "empty donors";
  case KXK_ERR_NOT_IMPLEMENTED: return "not implemented";
  case KXK_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

size_t kxk_default_threads(void) { return knnxkde::default_thread_count(); }

void kxk_string_free(char* s) { std::free(s); }

kxk_status kxk_matrix_load_csv(const char* path, kxk_matrix** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new kxk_matrix{knnxkde::load_csv(path)};
  });
}

kxk_status kxk_matrix_save_csv(const kxk_matrix* m, const char* path) {
  return guarded([&] {
    require(m && path, "null argument");
    knnxkde::save_csv(m->m, path);
  });
}

kxk_status kxk_matrix_create(size_t rows, size_t cols, const double* values, const char* const* names,
                             kxk_matrix** out) {
  return guarded([&] {
    require(out && (values || rows * cols == 0), "null argument");
    std::vector<double> v(values, values + rows * cols);
    std::vector<std::string> n;
    if (names)
      for (size_t j = 0; j < cols; ++j) n.emplace_back(names[j] ? names[j] : "");
    *out = new kxk_matrix{knnxkde::DataMatrix(rows, cols, std::move(v), std::move(n))};
  });
}

void kxk_matrix_free(kxk_matrix* m) { delete m; }

size_t kxk_matrix_rows(const kxk_matrix* m) { return m ? m->m.rows() : 0; }

size_t kxk_matrix_cols(const kxk_matrix* m) { return m ? m->m.cols() : 0; }

double kxk_matrix_get(const kxk_matrix* m, size_t row, size_t col) {
  if (!m || row >= m->m.rows() || col >= m->m.cols()) return std::numeric_limits<double>::quiet_NaN();
  return m->m(row, col);
}

const char* kxk_matrix_column_name(const kxk_matrix* m, size_t col) {
  if (!m || col >= m->m.cols()) return nullptr;
  return m->m.column_names()[col].c_str();
}

size_t kxk_matrix_missing_count(const kxk_matrix* m) { return m ? m->m.missing_count() : 0; }

kxk_status kxk_generate(const char* name, size_t n, uint64_t seed, kxk_matrix** out, char** manifest_json) {
  return guarded([&] {
    require(name && out, "null argument");
    auto data = knnxkde::generate(name, n, seed);
    std::string manifest = knnxkde::generator_manifest(name, n, seed).dump(2);
    *out = new kxk_matrix{std::move(data)};
    if (manifest_json) *manifest_json = dup_string(manifest);
  });
}

kxk_status kxk_ampute(const kxk_matrix* complete, const kxk_scenario* scenario, uint64_t seed, kxk_matrix** amputed,
                      char** mask_csv) {
  return guarded([&] {
    require(complete && scenario && scenario->mechanism && amputed, "null argument");
    knnxkde::ScenarioSpec spec;
    spec.mechanism = knnxkde::parse_mechanism(scenario->mechanism);
    spec.rate = scenario->rate;
    const auto cols = complete->m.cols();
    spec.miss_col = scenario->miss_col < 0 ? cols - 1 : static_cast<std::size_t>(scenario->miss_col);
    if (scenario->cond_col >= 0) spec.cond_col = static_cast<std::size_t>(scenario->cond_col);
    spec.validate(cols);
    knnxkde::Rng rng(seed);
    const auto mask = knnxkde::ampute(complete->m, spec, rng);
    auto result = std::make_unique<kxk_matrix>(kxk_matrix{knnxkde::apply_mask(complete->m, mask)});
    if (mask_csv) *mask_csv = dup_string(knnxkde::mask_to_csv(mask, complete->m.column_names()));
    *amputed = result.release();
  });
}

void kxk_impute_options_init(kxk_impute_options* o) {
  if (!o) return;
  o->inverse_tau = 50.0;
  o->h = 0.03;
  o->n_draws = 10000;
  o->strategy = "mean";
  o->seed = 0;
  o->threads = 0;
  o->retain_samples = 0;
}

kxk_status kxk_impute(const kxk_matrix* x, const kxk_impute_options* options, kxk_imputation** out) {
  return guarded([&] {
    require(x && out, "null argument");
    kxk_impute_options o;
    kxk_impute_options_init(&o);
    if (options) o = *options;
    require(o.inverse_tau > 0.0, "inverse_tau must be positive");
    const auto config = knnxkde::KnnXKdeConfig::from_inverse_tau(o.inverse_tau, o.h, o.n_draws);
    knnxkde::ImputeOptions io;
    io.strategy = knnxkde::parse_point_strategy(o.strategy ? o.strategy : "mean");
    io.seed = o.seed;
    io.threads = resolve_threads(o.threads);
    io.retain_distributions = true;
    io.retain_samples = o.retain_samples != 0;
    auto imp = std::make_unique<kxk_imputation>();
    imp->result = knnxkde::impute(x->m, config, io);
    imp->imputed.m = imp->result.imputed;
    imp->names = x->m.column_names();
    imp->has_samples = io.retain_samples;
    *out = imp.release();
  });
}

const kxk_matrix* kxk_imputation_matrix(const kxk_imputation* imp) { return imp ? &imp->imputed : nullptr; }

size_t kxk_imputation_fallback_count(const kxk_imputation* imp) { return imp ? imp->result.fallback_count : 0; }

kxk_status kxk_imputation_distributions_json(const kxk_imputation* imp, char** out) {
  return guarded([&] {
    require(imp && out, "null argument");
    *out = dup_string(knnxkde::distributions_to_json(imp->result, imp->names).dump());
  });
}

kxk_status kxk_imputation_write_samples_csv(const kxk_imputation* imp, const char* path) {
  return guarded([&] {
    require(imp && path, "null argument");
    require(imp->has_samples, "samples were not retained (set retain_samples)");
    write_text(path, knnxkde::samples_to_csv(imp->result, imp->names));
  });
}

void kxk_imputation_free(kxk_imputation* imp) { delete imp; }

kxk_status kxk_impute_method(const kxk_matrix* x, const char* method, double hyperparameter, uint64_t seed,
                             size_t threads, kxk_matrix** out) {
  return guarded([&] {
    require(x && method && out, "null argument");
    const auto id = knnxkde::parse_method(method);
    auto [norm, params] = knnxkde::normalize(x->m);
    knnxkde::PreparedTrial trial{norm, norm, knnxkde::Mask{}, params};
    knnxkde::MethodSettings settings;
    settings.threads = resolve_threads(threads);
    const auto run = knnxkde::run_method(id, hyperparameter, trial, settings, seed, false);
    const auto back = knnxkde::denormalize(run.imputed, params);
    knnxkde::DataMatrix result = x->m;
    for (std::size_t i = 0; i < result.rows(); ++i)
      for (std::size_t j = 0; j < result.cols(); ++j)
        if (!x->m.observed(i, j)) result(i, j) = back(i, j);
    *out = new kxk_matrix{std::move(result)};
  });
}

kxk_status kxk_stats_json(const kxk_matrix* x, char** out) {
  return guarded([&] {
    require(x && out, "null argument");
    const auto& names = x->m.column_names();
    nlohmann::json j{{"rows", x->m.rows()},
                     {"cols", x->m.cols()},
                     {"missing_cells", x->m.missing_count()},
                     {"columns", knnxkde::to_json(knnxkde::column_stats(x->m), names)},
                     {"correlation", knnxkde::to_json(knnxkde::correlation_summary(x->m), names)}};
    *out = dup_string(j.dump(2));
  });
}

kxk_status kxk_benchmark_run(const char* config_json, const char* base_dir, const char* out_dir, size_t threads,
                             char** manifest_out) {
  return guarded([&] {
    require(config_json && out_dir, "null argument");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::exception& e) {
      throw knnxkde::ParseError(std::string("benchmark config is not valid JSON: ") + e.what());
    }
    const auto config = knnxkde::parse_benchmark_config(j, base_dir ? base_dir : "");
    const auto report = knnxkde::run_benchmark(config, resolve_threads(threads));
    knnxkde::write_report(report, out_dir, config.percent);
    if (manifest_out) *manifest_out = dup_string(report.manifest.dump(2));
  });
}

} // extern "C"
