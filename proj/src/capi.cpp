// extern "C" surface of the shared library. Exceptions from the core are
// caught here and mapped to status codes plus a thread-local message.
#include "tinydsod/tinydsod.h"

#include <cstring>
#include <memory>
#include <optional>

#include "image.hpp"
#include "model.hpp"

struct td_model {
  td::Model model;
  std::optional<td::WeightStore> weights;
};

struct td_detections {
  std::vector<td::Detection> items;
};

namespace {

thread_local std::string g_last_error;

td_status status_from(td::Errc code) {
  switch (code) {
    case td::Errc::invalid_argument:
      return TD_ERR_INVALID_ARGUMENT;
    case td::Errc::config:
      return TD_ERR_CONFIG;
    case td::Errc::io:
      return TD_ERR_IO;
    case td::Errc::bad_magic:
      return TD_ERR_BAD_MAGIC;
    case td::Errc::bad_version:
      return TD_ERR_BAD_VERSION;
    case td::Errc::truncated:
      return TD_ERR_TRUNCATED;
    case td::Errc::corrupt:
      return TD_ERR_CORRUPT;
    case td::Errc::shape_mismatch:
      return TD_ERR_SHAPE_MISMATCH;
    case td::Errc::missing_weight:
      return TD_ERR_MISSING_WEIGHT;
    case td::Errc::invalid_params:
      return TD_ERR_INVALID_PARAMS;
    case td::Errc::image_format:
      return TD_ERR_IMAGE_FORMAT;
  }
  return TD_ERR_INTERNAL;
}

template <typename Fn>
td_status guarded(Fn&& fn) {
  try {
    fn();
    return TD_OK;
  } catch (const td::Error& e) {
    g_last_error = e.what();
    return status_from(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TD_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return TD_ERR_INTERNAL;
  }
}

td_status invalid(const char* msg) {
  g_last_error = msg;
  return TD_ERR_INVALID_ARGUMENT;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* td_version(void) { return "0.1.0"; }

const char* td_status_name(td_status status) {
  switch (status) {
    case TD_OK:
      return "ok";
    case TD_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case TD_ERR_CONFIG:
      return "config error";
    case TD_ERR_IO:
      return "io error";
    case TD_ERR_BAD_MAGIC:
      return "bad magic";
    case TD_ERR_BAD_VERSION:
      return "unsupported format version";
    case TD_ERR_TRUNCATED:
      return "truncated file";
    case TD_ERR_CORRUPT:
      return "corrupt file";
    case TD_ERR_SHAPE_MISMATCH:
      return "shape mismatch";
    case TD_ERR_MISSING_WEIGHT:
      return "missing weight";
    case TD_ERR_INVALID_PARAMS:
      return "invalid parameters";
    case TD_ERR_IMAGE_FORMAT:
      return "image format error";
    case TD_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* td_last_error(void) { return g_last_error.c_str(); }

td_status td_model_create(const char* config_text, td_model** out_model) {
  if (!out_model) return invalid("td_model_create: out_model is null");
  *out_model = nullptr;
  return guarded([&] {
    td::ArchConfig cfg = td::parse_config(config_text ? config_text : "");
    auto handle = std::make_unique<td_model>();
    handle->model = td::build_model(cfg);
    *out_model = handle.release();
  });
}

td_status td_model_create_from_file(const char* config_path, td_model** out_model) {
  if (!config_path || !out_model) return invalid("td_model_create_from_file: null argument");
  *out_model = nullptr;
  return guarded([&] {
    td::ArchConfig cfg = td::parse_config_file(config_path);
    auto handle = std::make_unique<td_model>();
    handle->model = td::build_model(cfg);
    *out_model = handle.release();
  });
}

void td_model_free(td_model* model) { delete model; }

td_status td_model_config_text(const td_model* model, char** out_text) {
  if (!model || !out_text) return invalid("td_model_config_text: null argument");
  return guarded([&] { *out_text = copy_string(td::config_to_text(model->model.cfg)); });
}

td_status td_model_input_size(const td_model* model, int32_t* out_h, int32_t* out_w) {
  if (!model || !out_h || !out_w) return invalid("td_model_input_size: null argument");
  *out_h = model->model.cfg.input.height;
  *out_w = model->model.cfg.input.width;
  return TD_OK;
}

td_status td_model_rand_init(td_model* model, uint64_t seed) {
  if (!model) return invalid("td_model_rand_init: model is null");
  return guarded([&] { model->weights = td::rand_init(model->model.graph, seed); });
}

td_status td_model_load_weights(td_model* model, const char* path) {
  if (!model || !path) return invalid("td_model_load_weights: null argument");
  return guarded([&] { model->weights = td::load_weights(path, model->model.graph); });
}

td_status td_model_save_weights(const td_model* model, const char* path) {
  if (!model || !path) return invalid("td_model_save_weights: null argument");
  return guarded([&] {
    if (!model->weights)
      td::fail(td::Errc::missing_weight, "model has no weights to save");
    model->weights->save_file(path);
  });
}

td_status td_model_weight_counts(const td_model* model, uint64_t* out_records,
                                 uint64_t* out_values) {
  if (!model) return invalid("td_model_weight_counts: model is null");
  return guarded([&] {
    if (!model->weights) td::fail(td::Errc::missing_weight, "model has no weights loaded");
    if (out_records) *out_records = model->weights->record_count();
    if (out_values) *out_values = model->weights->total_value_count();
  });
}

td_status td_model_report(const td_model* model, int32_t input_h, int32_t input_w,
                          int32_t as_csv, char** out_text) {
  if (!model || !out_text) return invalid("td_model_report: null argument");
  return guarded([&] {
    const int h = input_h > 0 ? input_h : model->model.cfg.input.height;
    const int w = input_w > 0 ? input_w : model->model.cfg.input.width;
    td::ModelReport rep = td::model_report(model->model, h, w);
    *out_text = copy_string(as_csv ? td::format_report_csv(rep) : td::format_report_text(rep));
  });
}

td_status td_model_totals(const td_model* model, int32_t input_h, int32_t input_w,
                          uint64_t* out_params, uint64_t* out_macs) {
  if (!model) return invalid("td_model_totals: model is null");
  return guarded([&] {
    const int h = input_h > 0 ? input_h : model->model.cfg.input.height;
    const int w = input_w > 0 ? input_w : model->model.cfg.input.width;
    td::ModelReport rep = td::model_report(model->model, h, w);
    if (out_params) *out_params = rep.total_params;
    if (out_macs) *out_macs = rep.total_macs;
  });
}

td_status td_model_prior_count(const td_model* model, uint64_t* out_count) {
  if (!model || !out_count) return invalid("td_model_prior_count: null argument");
  return guarded([&] {
    std::vector<td::LevelSize> sizes = td::model_level_sizes(
        model->model, model->model.cfg.input.height, model->model.cfg.input.width);
    *out_count = td::prior_count(model->model.cfg.head, sizes);
  });
}

td_status td_model_priors_text(const td_model* model, char** out_text) {
  if (!model || !out_text) return invalid("td_model_priors_text: null argument");
  return guarded([&] {
    std::string text;
    char line[96];
    for (const td::PriorBox& p : td::model_priors(model->model)) {
      std::snprintf(line, sizeof(line), "%.6f %.6f %.6f %.6f\n", p.cx, p.cy, p.w, p.h);
      text += line;
    }
    *out_text = copy_string(text);
  });
}

td_status td_model_detect_ppm(const td_model* model, const char* image_path, float conf_thresh,
                              td_detections** out_dets) {
  if (!model || !image_path || !out_dets)
    return invalid("td_model_detect_ppm: null argument");
  *out_dets = nullptr;
  return guarded([&] {
    if (!model->weights)
      td::fail(td::Errc::missing_weight,
               "model has no weights loaded; call td_model_load_weights or td_model_rand_init");
    td::Tensor img =
        td::load_image_ppm(image_path, model->model.cfg.input.height,
                           model->model.cfg.input.width, model->model.cfg.input.means);
    auto dets = std::make_unique<td_detections>();
    dets->items = td::detect(model->model, *model->weights, img, conf_thresh);
    *out_dets = dets.release();
  });
}

size_t td_detections_size(const td_detections* dets) { return dets ? dets->items.size() : 0; }

td_status td_detections_get(const td_detections* dets, size_t index, td_detection* out) {
  if (!dets || !out) return invalid("td_detections_get: null argument");
  if (index >= dets->items.size()) return invalid("td_detections_get: index out of range");
  const td::Detection& d = dets->items[index];
  *out = td_detection{d.category, d.score, d.xmin, d.ymin, d.xmax, d.ymax};
  return TD_OK;
}

td_status td_detections_text(const td_detections* dets, char** out_text) {
  if (!dets || !out_text) return invalid("td_detections_text: null argument");
  return guarded([&] { *out_text = copy_string(td::detections_to_text(dets->items)); });
}

void td_detections_free(td_detections* dets) { delete dets; }

td_status td_complexity_scan(const char* block, int32_t growth, int32_t expand, int32_t n0,
                             const int32_t* depths, size_t depth_count, uint64_t* out_macs,
                             double* out_exponent) {
  if (!block || !depths || !out_exponent) return invalid("td_complexity_scan: null argument");
  return guarded([&] {
    td::BlockKind kind = td::block_kind_from_name(block);
    std::vector<int> d(depths, depths + depth_count);
    td::ComplexityFit fit = td::complexity_scan(kind, growth, expand, n0, d);
    if (out_macs)
      for (size_t i = 0; i < fit.macs.size(); ++i) out_macs[i] = fit.macs[i];
    *out_exponent = fit.exponent;
  });
}

void td_string_free(char* text) { delete[] text; }

}  // extern "C"
