#ifndef LIMEVIS_LIMEVIS_H
#define LIMEVIS_LIMEVIS_H

/*
 * limevis C API.
 *
 * Every fallible call returns an lv_status; on failure lv_last_error()
 * describes the problem for the calling thread. Handles are opaque and owned
 * by the caller, who releases them with the matching *_free function.
 * Strings and buffers returned through out-parameters are released with
 * lv_string_free / lv_buffer_free.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LIMEVIS_BUILDING)
#    define LV_API __declspec(dllexport)
#  else
#    define LV_API __declspec(dllimport)
#  endif
#else
#  define LV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lv_status {
  LV_OK = 0,
  LV_ERR_INVALID_ARGUMENT = 1,
  LV_ERR_UNSUPPORTED_FORMAT = 2,
  LV_ERR_TRUNCATED_DATA = 3,
  LV_ERR_MALFORMED_FILE = 4,
  LV_ERR_INDEX_OUT_OF_RANGE = 5,
  LV_ERR_LABEL_IMAGE_COUNT_MISMATCH = 6,
  LV_ERR_DIMENSION_MISMATCH = 7,
  LV_ERR_INVALID_PARAMS = 8,
  LV_ERR_SINGULAR_SYSTEM = 9,
  LV_ERR_EXTERNAL_PREDICTOR_FAILURE = 10,
  LV_ERR_EMPTY_DATASET = 11,
  LV_ERR_EMPTY_CATEGORY = 12,
  LV_ERR_UNKNOWN_IMAGE = 13,
  LV_ERR_SUPERPIXEL_OUT_OF_RANGE = 14,
  LV_ERR_OUT_OF_BOUNDS = 15,
  LV_ERR_TOO_FEW_POINTS = 16,
  LV_ERR_IO = 17,
  LV_ERR_NO_SESSION = 18,
  LV_ERR_INTERNAL = 99
} lv_status;

typedef enum lv_segmentation {
  LV_SEG_QUICKSHIFT = 0,
  LV_SEG_SLIC = 1,
  LV_SEG_FELZENSZWALB = 2
} lv_segmentation;

typedef struct lv_dataset lv_dataset;
typedef struct lv_model lv_model;
typedef struct lv_predictor lv_predictor;
typedef struct lv_session lv_session;

typedef struct lv_explain_config {
  lv_segmentation segmentation;
  int slic_n_segments;
  double slic_compactness;
  int slic_max_iter;
  double felzenszwalb_scale;
  double felzenszwalb_sigma;
  int felzenszwalb_min_size;
  double quickshift_ratio;
  double quickshift_kernel_size;
  double quickshift_max_dist;
  int num_samples;
  double kernel_width;
  double ridge_lambda;
  int positive_only;
  int num_features;
  int hide_rest;
  /* Nonzero: hidden superpixels take their mean color; else hide_rgb. */
  int hide_mean_fill;
  uint8_t hide_rgb[3];
  uint64_t seed;
} lv_explain_config;

typedef struct lv_execute_options {
  int workers;
  int shuffle;           /* nonzero: shuffle the category with shuffle_seed */
  uint64_t shuffle_seed;
  int n_neighbors;
  double mid_near_ratio;
  double far_pair_ratio;
  int iterations;
  double learning_rate;
} lv_execute_options;

LV_API const char* lv_status_name(lv_status status);
LV_API const char* lv_last_error(void);
LV_API void lv_string_free(char* s);
LV_API void lv_buffer_free(uint8_t* buffer);

LV_API void lv_explain_config_default(lv_explain_config* config);
LV_API void lv_execute_options_default(lv_execute_options* options);

/* format: "stl10" or "ppmdir". */
LV_API lv_status lv_dataset_load(const char* path, const char* format, lv_dataset** out);
LV_API void lv_dataset_free(lv_dataset* dataset);
LV_API size_t lv_dataset_size(const lv_dataset* dataset);
LV_API int lv_dataset_class_count(const lv_dataset* dataset);
LV_API const char* lv_dataset_category_name(const lv_dataset* dataset, int category);
/* -1 when absent. */
LV_API int lv_dataset_find_category(const lv_dataset* dataset, const char* name);
LV_API const char* lv_dataset_source(const lv_dataset* dataset);

LV_API lv_status lv_model_train(const lv_dataset* dataset, int epochs, double learning_rate, uint64_t seed,
                                lv_model** out);
/* Mean training loss per epoch; valid while the model lives. */
LV_API size_t lv_model_loss_trace(const lv_model* model, const double** trace);
LV_API lv_status lv_model_save(const lv_model* model, const char* path);
LV_API lv_status lv_model_load(const char* path, lv_model** out);
LV_API void lv_model_free(lv_model* model);

/* names_from may be NULL; otherwise its category names label the classes. */
LV_API lv_status lv_predictor_builtin(const lv_model* model, const lv_dataset* names_from, lv_predictor** out);
LV_API lv_status lv_predictor_external_command(const char* command, int timeout_ms, lv_predictor** out);
LV_API lv_status lv_predictor_external_url(const char* url, int timeout_ms, lv_predictor** out);
LV_API int lv_predictor_class_count(const lv_predictor* predictor);
/* rgb: width*height*3 row-major bytes. probs receives class_count values. */
LV_API lv_status lv_predictor_predict(lv_predictor* predictor, const uint8_t* rgb, int width, int height,
                                      double* probs, size_t capacity);
LV_API void lv_predictor_free(lv_predictor* predictor);

/* options may be NULL for defaults. The session keeps the predictor alive. */
LV_API lv_status lv_session_execute(const lv_dataset* dataset, int category, const lv_explain_config* config,
                                    const lv_execute_options* options, lv_predictor* predictor, lv_session** out);
LV_API void lv_session_free(lv_session* session);
LV_API size_t lv_session_size(const lv_session* session);
LV_API int lv_session_image_id(const lv_session* session, size_t index);
LV_API int lv_session_correct(const lv_session* session, size_t index);
LV_API size_t lv_session_incorrect_count(const lv_session* session);
LV_API lv_status lv_session_explanation_json(const lv_session* session, size_t index, char** out);
LV_API lv_status lv_session_lime_ppm(const lv_session* session, size_t index, uint8_t** out, size_t* length);
LV_API lv_status lv_session_embedding_csv(const lv_session* session, char** out);
LV_API lv_status lv_session_summary_json(const lv_session* session, const lv_dataset* dataset, char** out);
LV_API lv_status lv_session_pixel_to_superpixel(const lv_session* session, int image_id, int x, int y, int* out);
/* Flips one superpixel and re-predicts; probs may be NULL. */
LV_API lv_status lv_session_toggle(lv_session* session, int image_id, int superpixel_id, double* probs,
                                   size_t capacity);
LV_API lv_status lv_session_reset(lv_session* session, int image_id);

/* Runs the HTTP API until the process is stopped. */
LV_API lv_status lv_serve(const lv_dataset* dataset, lv_predictor* predictor, const char* host, int port,
                          int workers);

#ifdef __cplusplus
}
#endif

#endif /* LIMEVIS_LIMEVIS_H */
