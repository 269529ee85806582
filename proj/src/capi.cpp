#include "consflux.h"

#include <Eigen/Core>
#include <cstring>
#include <memory>
#include <string>

#include "consflux/commands.hpp"
#include "consflux/dataset_io.hpp"
#include "consflux/flux_model.hpp"
#include "consflux/presets.hpp"

namespace {

thread_local std::string t_last_error;
int g_threads = 1;

cf_status fail(cf_status code, const std::string& message) {
  t_last_error = message;
  return code;
}

cf_status from_kind(consflux::ErrorKind kind) {
  switch (kind) {
    case consflux::ErrorKind::Validation: return CF_ERROR_VALIDATION;
    case consflux::ErrorKind::Numeric: return CF_ERROR_NUMERIC;
    case consflux::ErrorKind::Io: return CF_ERROR_IO;
  }
  return CF_ERROR_VALIDATION;
}

template <typename Fn>
cf_status guarded(Fn&& fn) {
  try {
    fn();
    return CF_OK;
  } catch (const consflux::Error& e) {
    return fail(from_kind(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail(CF_ERROR_VALIDATION, e.what());
  }
}

cf_status copy_out(const std::string& text, char* buffer, size_t capacity, size_t* required) {
  if (required) *required = text.size();
  if (buffer && capacity > 0) {
    const size_t n = std::min(capacity - 1, text.size());
    std::memcpy(buffer, text.data(), n);
    buffer[n] = '\0';
  }
  return CF_OK;
}

void copy_field(char* dst, size_t cap, const std::string& src) {
  const size_t n = std::min(cap - 1, src.size());
  std::memcpy(dst, src.data(), n);
  dst[n] = '\0';
}

}  // namespace

struct cf_dataset {
  consflux::Dataset data;
};

struct cf_model {
  consflux::ModelSpec spec;
  consflux::CheckpointMeta meta;
};

extern "C" {

const char* cf_version(void) { return "1.0.0"; }

const char* cf_last_error(void) { return t_last_error.c_str(); }

cf_status cf_set_threads(int threads) {
  if (threads < 1) return fail(CF_ERROR_VALIDATION, "threads must be >= 1");
  g_threads = threads;
  Eigen::setNbThreads(threads);
  return CF_OK;
}

cf_status cf_generate(const char* config_json, const char* out_dir) {
  if (!config_json || !out_dir) return fail(CF_ERROR_VALIDATION, "null argument");
  return guarded([&] { consflux::cmd_generate(config_json, out_dir, g_threads); });
}

cf_status cf_train(const char* config_json, const char* out_dir) {
  if (!config_json || !out_dir) return fail(CF_ERROR_VALIDATION, "null argument");
  return guarded([&] { consflux::cmd_train(config_json, out_dir, g_threads); });
}

cf_status cf_predict(const char* config_json, const char* out_dir) {
  if (!config_json || !out_dir) return fail(CF_ERROR_VALIDATION, "null argument");
  return guarded([&] { consflux::cmd_predict(config_json, out_dir, g_threads); });
}

cf_status cf_evaluate(const char* config_json, const char* out_dir) {
  if (!config_json || !out_dir) return fail(CF_ERROR_VALIDATION, "null argument");
  return guarded([&] { consflux::cmd_evaluate(config_json, out_dir, g_threads); });
}

cf_status cf_preset_config(const char* name, char* buffer, size_t capacity, size_t* required) {
  if (!name) return fail(CF_ERROR_VALIDATION, "null preset name");
  return guarded([&] {
    const std::string text = consflux::run_config_to_json(consflux::preset_run_config(name));
    copy_out(text, buffer, capacity, required);
  });
}

cf_status cf_list_presets(char* buffer, size_t capacity, size_t* required) {
  return guarded([&] {
    std::string text;
    for (const auto& name : consflux::preset_names()) {
      text += name;
      text += '\n';
    }
    copy_out(text, buffer, capacity, required);
  });
}

cf_status cf_dataset_open(const char* manifest_path, cf_dataset** out) {
  if (!manifest_path || !out) return fail(CF_ERROR_VALIDATION, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new cf_dataset{consflux::read_dataset(manifest_path)}; });
}

void cf_dataset_close(cf_dataset* dataset) { delete dataset; }

cf_status cf_dataset_get_info(const cf_dataset* dataset, cf_dataset_info* info) {
  if (!dataset || !info) return fail(CF_ERROR_VALIDATION, "null argument");
  const auto& ds = dataset->data;
  info->n_traj = ds.n_traj();
  info->n_snapshots = ds.n_snapshots();
  info->n_comp = ds.n_comp();
  info->n_cells = ds.grid().n_cells;
  info->dt = ds.dt();
  info->domain_a = ds.grid().a;
  info->domain_b = ds.grid().b;
  info->noise_level = ds.noise_level;
  info->seed = ds.seed;
  copy_field(info->system, sizeof info->system, consflux::to_string(ds.system));
  copy_field(info->bc, sizeof info->bc, consflux::to_string(ds.bc));
  return CF_OK;
}

cf_status cf_dataset_get_values(const cf_dataset* dataset, int32_t trajectory, int32_t snapshot,
                                double* buffer, size_t count) {
  if (!dataset || !buffer) return fail(CF_ERROR_VALIDATION, "null argument");
  const auto& ds = dataset->data;
  if (trajectory < 0 || trajectory >= ds.n_traj())
    return fail(CF_ERROR_VALIDATION, "trajectory index out of range");
  if (snapshot < 0 || snapshot >= ds.n_snapshots())
    return fail(CF_ERROR_VALIDATION, "snapshot index out of range");
  const auto& values = ds.trajectories[trajectory].snapshots[snapshot].values;
  if (count != std::size_t(values.size()))
    return fail(CF_ERROR_VALIDATION, "buffer count must equal n_comp * n_cells");
  for (int c = 0; c < values.rows(); ++c)
    for (int j = 0; j < values.cols(); ++j) buffer[c * values.cols() + j] = values(c, j);
  return CF_OK;
}

cf_status cf_model_open(const char* checkpoint_path, cf_model** out) {
  if (!checkpoint_path || !out) return fail(CF_ERROR_VALIDATION, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<cf_model>();
    handle->spec = consflux::load_checkpoint(checkpoint_path, &handle->meta);
    *out = handle.release();
  });
}

void cf_model_close(cf_model* model) { delete model; }

cf_status cf_model_get_info(const cf_model* model, cf_model_info* info) {
  if (!model || !info) return fail(CF_ERROR_VALIDATION, "null argument");
  info->n_comp = model->spec.n_comp;
  info->n_cells = model->meta.grid.n_cells;
  info->stencil_left = model->spec.stencil_left;
  info->stencil_right = model->spec.stencil_right;
  info->dx = model->spec.dx;
  info->dt = model->meta.dt;
  info->lambda2 = model->spec.lambda2;
  info->epoch = model->meta.epoch;
  copy_field(info->form, sizeof info->form, consflux::to_string(model->spec.form));
  copy_field(info->bc, sizeof info->bc, consflux::to_string(model->spec.bc));
  copy_field(info->system, sizeof info->system, consflux::to_string(model->meta.system));
  return CF_OK;
}

cf_status cf_model_rollout(const cf_model* model, const double* u0, int32_t n_comp,
                           int32_t n_cells, int32_t steps, double dt, double* out) {
  if (!model || !u0 || !out) return fail(CF_ERROR_VALIDATION, "null argument");
  return guarded([&] {
    consflux::require(n_comp == model->spec.n_comp, "n_comp does not match the model");
    consflux::require(n_cells == model->meta.grid.n_cells,
                      "n_cells does not match the checkpoint grid");
    consflux::require(steps >= 1, "steps must be >= 1");
    consflux::Matrix values(n_comp, n_cells);
    for (int c = 0; c < n_comp; ++c)
      for (int j = 0; j < n_cells; ++j) values(c, j) = u0[c * n_cells + j];
    const consflux::StateField field(model->meta.grid, std::move(values), 0.0);
    const auto states = consflux::rollout(model->spec, field, steps, dt);
    for (int s = 0; s < steps; ++s)
      for (int c = 0; c < n_comp; ++c)
        for (int j = 0; j < n_cells; ++j)
          out[(std::size_t(s) * n_comp + c) * n_cells + j] = states[s].values(c, j);
  });
}

}  // extern "C"
