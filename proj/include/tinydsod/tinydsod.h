/* tinydsod - C API for the tinydsod detection inference / analysis engine.
 *
 * All entry points return a td_status; on failure td_last_error() holds a
 * message for the calling thread. Objects are opaque handles owned by the
 * library; free them with their matching *_free function. Strings returned
 * through char** out-parameters are owned by the caller and released with
 * td_string_free().
 */
#ifndef TINYDSOD_H
#define TINYDSOD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(TINYDSOD_BUILD)
#define TD_API __declspec(dllexport)
#else
#define TD_API __declspec(dllimport)
#endif
#else
#define TD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum td_status {
  TD_OK = 0,
  TD_ERR_INVALID_ARGUMENT = 1,
  TD_ERR_CONFIG = 2,
  TD_ERR_IO = 3,
  TD_ERR_BAD_MAGIC = 4,
  TD_ERR_BAD_VERSION = 5,
  TD_ERR_TRUNCATED = 6,
  TD_ERR_CORRUPT = 7,
  TD_ERR_SHAPE_MISMATCH = 8,
  TD_ERR_MISSING_WEIGHT = 9,
  TD_ERR_INVALID_PARAMS = 10,
  TD_ERR_IMAGE_FORMAT = 11,
  TD_ERR_INTERNAL = 99
} td_status;

typedef struct td_model td_model;
typedef struct td_detections td_detections;

typedef struct td_detection {
  int32_t category; /* 1..categories-1; background is never emitted */
  float score;      /* in (0, 1] */
  float xmin, ymin, xmax, ymax; /* normalized corners in [0, 1] */
} td_detection;

TD_API const char* td_version(void);
TD_API const char* td_status_name(td_status status);
TD_API const char* td_last_error(void);

/* Model lifecycle. The config text may be empty (all defaults). */
TD_API td_status td_model_create(const char* config_text, td_model** out_model);
TD_API td_status td_model_create_from_file(const char* config_path, td_model** out_model);
TD_API void td_model_free(td_model* model);

TD_API td_status td_model_config_text(const td_model* model, char** out_text);
TD_API td_status td_model_input_size(const td_model* model, int32_t* out_h, int32_t* out_w);

/* Weights. rand_init fills deterministic seeded values; load/save use the
 * TDSD binary container. */
TD_API td_status td_model_rand_init(td_model* model, uint64_t seed);
TD_API td_status td_model_load_weights(td_model* model, const char* path);
TD_API td_status td_model_save_weights(const td_model* model, const char* path);
TD_API td_status td_model_weight_counts(const td_model* model, uint64_t* out_records,
                                        uint64_t* out_values);

/* Static analysis. input_h/input_w <= 0 selects the configured input size;
 * as_csv nonzero emits CSV instead of the aligned text table. */
TD_API td_status td_model_report(const td_model* model, int32_t input_h, int32_t input_w,
                                 int32_t as_csv, char** out_text);
TD_API td_status td_model_totals(const td_model* model, int32_t input_h, int32_t input_w,
                                 uint64_t* out_params, uint64_t* out_macs);

/* Default boxes at the configured input size. Text form is one prior per
 * line: "cx cy w h" with six decimals. */
TD_API td_status td_model_prior_count(const td_model* model, uint64_t* out_count);
TD_API td_status td_model_priors_text(const td_model* model, char** out_text);

/* Full pipeline on a binary PPM (P6) image. conf_thresh < 0 selects the
 * configured threshold. Requires weights (loaded or rand-initialized). */
TD_API td_status td_model_detect_ppm(const td_model* model, const char* image_path,
                                     float conf_thresh, td_detections** out_dets);
TD_API size_t td_detections_size(const td_detections* dets);
TD_API td_status td_detections_get(const td_detections* dets, size_t index, td_detection* out);
/* One detection per line: "category score xmin ymin xmax ymax". */
TD_API td_status td_detections_text(const td_detections* dets, char** out_text);
TD_API void td_detections_free(td_detections* dets);

/* Stacks `depth_count` synthetic dense-block towers and fits the log-log
 * MACs-vs-depth slope. block is "ddb-a" or "ddb-b"; expand is required for
 * ddb-a and ignored otherwise. out_macs (optional) receives one value per
 * depth. */
TD_API td_status td_complexity_scan(const char* block, int32_t growth, int32_t expand,
                                    int32_t n0, const int32_t* depths, size_t depth_count,
                                    uint64_t* out_macs, double* out_exponent);

TD_API void td_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* TINYDSOD_H */
