#include "ddsde.h"

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "ddsde/config.hpp"
#include "ddsde/errors.hpp"
#include "ddsde/experiment.hpp"
#include "ddsde/grid.hpp"
#include "ddsde/parallel.hpp"

using namespace ddsde;

struct ddsde_config {
  ExperimentConfig cfg;
  std::string base_dir;
};

struct ddsde_grid {
  GridDensity density;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
ddsde_status wrap(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return DDSDE_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<ddsde_status>(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DDSDE_INTERNAL_ERROR;
  }
}

ddsde_status need(bool ok, const char* msg) {
  if (ok) return DDSDE_OK;
  g_last_error = msg;
  return DDSDE_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* ddsde_version(void) { return kToolVersion; }

const char* ddsde_last_error(void) { return g_last_error.c_str(); }

ddsde_status ddsde_set_threads(int count) {
  return wrap([&] {
    require(count >= 0, errc::invalid_argument,
            "thread count must be nonnegative");
    set_thread_count(count);
  });
}

ddsde_status ddsde_config_load(const char* path, ddsde_config** out) {
  if (auto s = need(path && out, "config_load needs path and out"); s) return s;
  *out = nullptr;
  return wrap([&] {
    auto* handle = new ddsde_config;
    try {
      handle->cfg = load_config(path);
      handle->base_dir =
          std::filesystem::path(path).parent_path().string();
      if (handle->base_dir.empty()) handle->base_dir = ".";
      validate_config(handle->cfg);
    } catch (...) {
      delete handle;
      throw;
    }
    *out = handle;
  });
}

ddsde_status ddsde_config_parse(const char* text, const char* base_dir,
                                ddsde_config** out) {
  if (auto s = need(text && out, "config_parse needs text and out"); s)
    return s;
  *out = nullptr;
  return wrap([&] {
    auto* handle = new ddsde_config;
    try {
      handle->cfg = parse_config(text);
      handle->base_dir = base_dir && *base_dir ? base_dir : ".";
      validate_config(handle->cfg);
    } catch (...) {
      delete handle;
      throw;
    }
    *out = handle;
  });
}

ddsde_status ddsde_config_validate(const ddsde_config* config) {
  if (auto s = need(config != nullptr, "null config"); s) return s;
  return wrap([&] { validate_config(config->cfg); });
}

const char* ddsde_config_name(const ddsde_config* config) {
  return config ? config->cfg.name.c_str() : "";
}

ddsde_status ddsde_config_set_out_dir(ddsde_config* config, const char* dir) {
  if (auto s = need(config && dir, "set_out_dir needs config and dir"); s)
    return s;
  return wrap([&] {
    ExperimentConfig trial = config->cfg;
    trial.out_dir = dir;
    validate_config(trial);
    config->cfg = std::move(trial);
  });
}

ddsde_status ddsde_config_set_seed(ddsde_config* config, uint64_t seed) {
  if (auto s = need(config != nullptr, "null config"); s) return s;
  return wrap([&] { config->cfg.particles.seed = seed; });
}

ddsde_status ddsde_config_set_density_source(ddsde_config* config,
                                             const char* mode) {
  if (auto s = need(config && mode, "set_density_source needs config and mode");
      s)
    return s;
  return wrap([&] {
    ExperimentConfig trial = config->cfg;
    trial.particles.mode = mode;
    validate_config(trial);
    config->cfg = std::move(trial);
  });
}

void ddsde_config_free(ddsde_config* config) { delete config; }

ddsde_status ddsde_run_experiment(const ddsde_config* config,
                                  int* claims_failed, char** summary) {
  if (auto s = need(config != nullptr, "null config"); s) return s;
  if (summary) *summary = nullptr;
  return wrap([&] {
    RunOutcome outcome = run_experiment(config->cfg, config->base_dir);
    if (claims_failed)
      *claims_failed = static_cast<int>(outcome.failed_claims.size());
    if (summary) {
      char* buf = new char[outcome.summary.size() + 1];
      std::memcpy(buf, outcome.summary.c_str(), outcome.summary.size() + 1);
      *summary = buf;
    }
  });
}

ddsde_status ddsde_compare(const char* run_dir_a, const char* run_dir_b,
                           const char* metric, double* value,
                           double* threshold, int* pass) {
  if (auto s = need(run_dir_a && run_dir_b && metric,
                    "compare needs two run dirs and a metric");
      s)
    return s;
  return wrap([&] {
    CompareOutcome outcome = compare_runs(run_dir_a, run_dir_b, metric);
    if (value) *value = outcome.value;
    if (threshold) *threshold = outcome.threshold;
    if (pass) *pass = outcome.pass ? 1 : 0;
  });
}

ddsde_status ddsde_report(const char* const* run_dirs, size_t count,
                          char** out) {
  if (auto s = need(run_dirs && out && count > 0,
                    "report needs run dirs and out");
      s)
    return s;
  *out = nullptr;
  return wrap([&] {
    std::vector<std::string> dirs;
    for (size_t i = 0; i < count; ++i) {
      require(run_dirs[i] != nullptr, errc::invalid_argument,
              "null run directory");
      dirs.emplace_back(run_dirs[i]);
    }
    std::string text = report_runs(dirs);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

void ddsde_string_free(char* text) { delete[] text; }

ddsde_status ddsde_grid_load(const char* path, ddsde_grid** out) {
  if (auto s = need(path && out, "grid_load needs path and out"); s) return s;
  *out = nullptr;
  return wrap([&] { *out = new ddsde_grid{load_grid(path)}; });
}

ddsde_status ddsde_grid_info(const ddsde_grid* grid, int* dim, uint64_t* cells,
                             double* lower, double* upper) {
  if (auto s = need(grid != nullptr, "null grid"); s) return s;
  const GridSpec& spec = grid->density.spec();
  if (dim) *dim = spec.dim;
  for (int i = 0; i < spec.dim; ++i) {
    if (cells) cells[i] = spec.cells[i];
    if (lower) lower[i] = spec.lower[i];
    if (upper) upper[i] = spec.upper[i];
  }
  return DDSDE_OK;
}

uint64_t ddsde_grid_size(const ddsde_grid* grid) {
  return grid ? grid->density.spec().size() : 0;
}

ddsde_status ddsde_grid_values(const ddsde_grid* grid, double* values,
                               uint64_t size) {
  if (auto s = need(grid && values, "grid_values needs grid and buffer"); s)
    return s;
  return wrap([&] {
    require(size >= grid->density.spec().size(), errc::invalid_argument,
            "value buffer smaller than the grid");
    for (std::uint64_t i = 0; i < grid->density.spec().size(); ++i)
      values[i] = grid->density.value(i);
  });
}

ddsde_status ddsde_grid_mass(const ddsde_grid* grid, double* mass) {
  if (auto s = need(grid && mass, "grid_mass needs grid and out"); s) return s;
  return wrap([&] { *mass = grid->density.mass(); });
}

ddsde_status ddsde_grid_l1(const ddsde_grid* a, const ddsde_grid* b,
                           double* distance) {
  if (auto s = need(a && b && distance, "grid_l1 needs two grids and out"); s)
    return s;
  return wrap([&] { *distance = l1_on_common_grid(a->density, b->density); });
}

void ddsde_grid_free(ddsde_grid* grid) { delete grid; }

}  // extern "C"
