/*
 * C interface to the cbbl library: box offsets, label quantization,
 * localization losses with analytic gradients, distortion sweeps, the
 * synthetic training harness and the verification suite.
 *
 * Every function returns a cbbl_status. On failure the message of the last
 * error on the calling thread is available from cbbl_last_error(). Objects
 * returned through `out` pointers are owned by the caller and released with
 * the matching *_destroy function; destroy functions accept NULL.
 */
#ifndef CBBL_H
#define CBBL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CBBL_BUILDING_LIBRARY)
#    define CBBL_API __declspec(dllexport)
#  else
#    define CBBL_API __declspec(dllimport)
#  endif
#else
#  define CBBL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cbbl_status {
    CBBL_OK = 0,
    CBBL_ERR_CONFIG = 1,        /* invalid parameters or configuration */
    CBBL_ERR_DOMAIN = 2,        /* input outside the operation's domain or range */
    CBBL_ERR_DIVERGED = 3,      /* training produced a non-finite value */
    CBBL_ERR_VERIFY = 4,        /* at least one verification check failed */
    CBBL_ERR_IO = 5,            /* file could not be written */
    CBBL_ERR_NULL_ARGUMENT = 6,
    CBBL_ERR_BUFFER_TOO_SMALL = 7,
    CBBL_ERR_INTERNAL = 8
} cbbl_status;

CBBL_API const char* cbbl_version(void);
CBBL_API const char* cbbl_status_string(cbbl_status status);
/* Message of the last failing call on this thread; "" if none. */
CBBL_API const char* cbbl_last_error(void);

/* ---- boxes -------------------------------------------------------------- */

typedef struct cbbl_box {
    double x, y, w, h; /* center, width, height in pixels */
} cbbl_box;

typedef struct cbbl_offsets {
    double tx, ty, tw, th;
} cbbl_offsets;

CBBL_API cbbl_status cbbl_encode_offsets(const cbbl_box* box, const cbbl_box* anchor,
                                         cbbl_offsets* out);
CBBL_API cbbl_status cbbl_decode_offsets(const cbbl_offsets* offsets, const cbbl_box* anchor,
                                         cbbl_box* out);
CBBL_API cbbl_status cbbl_iou(const cbbl_box* a, const cbbl_box* b, double* out);

/* ---- grid --------------------------------------------------------------- */

typedef struct cbbl_grid cbbl_grid;

typedef enum cbbl_grid_mode {
    CBBL_GRID_UNIFORM = 0,
    CBBL_GRID_INTERVAL_NON_UNIFORM = 1
} cbbl_grid_mode;

typedef enum cbbl_restore_mode {
    CBBL_RESTORE_FULL_BAND = 0,
    CBBL_RESTORE_TOP2 = 1
} cbbl_restore_mode;

typedef enum cbbl_input_kind {
    CBBL_INPUT_LOGITS = 0,
    CBBL_INPUT_PROBABILITIES = 1
} cbbl_input_kind;

typedef struct cbbl_two_hot {
    int32_t i_left, i_right;
    double p_left, p_right;
} cbbl_two_hot;

CBBL_API cbbl_status cbbl_grid_create(double alpha, int32_t n, cbbl_grid_mode mode, double in_beta,
                                      int paper_literal, cbbl_grid** out);
/* {"alpha": .., "n": .., "mode": "uniform"|"interval-non-uniform", "in_beta": ..} */
CBBL_API cbbl_status cbbl_grid_create_from_json(const char* json, cbbl_grid** out);
/* Writes NUL-terminated JSON. *required receives the buffer size needed,
 * including the terminator; a NULL or short buffer yields
 * CBBL_ERR_BUFFER_TOO_SMALL. */
CBBL_API cbbl_status cbbl_grid_to_json(const cbbl_grid* grid, char* buffer, size_t capacity,
                                       size_t* required);
CBBL_API void cbbl_grid_destroy(cbbl_grid* grid);

CBBL_API cbbl_status cbbl_grid_size(const cbbl_grid* grid, size_t* out);
CBBL_API cbbl_status cbbl_grid_value(const cbbl_grid* grid, int32_t index, double* out);
CBBL_API cbbl_status cbbl_grid_quantize(const cbbl_grid* grid, double target, cbbl_two_hot* out);
CBBL_API cbbl_status cbbl_grid_clamp(const cbbl_grid* grid, double target, double* out);
CBBL_API cbbl_status cbbl_grid_restore(const cbbl_grid* grid, const double* values, size_t length,
                                       cbbl_input_kind kind, cbbl_restore_mode mode, double* out);

/* ---- losses ------------------------------------------------------------- */
/* `grad` may be NULL. For the distribution losses it must hold `length`
 * entries (gradient w.r.t. logits); for l2 / smooth-l1 it holds 4 entries. */

CBBL_API cbbl_status cbbl_ce_loss(const cbbl_two_hot* label, const double* logits, size_t length,
                                  double* value, double* grad);
CBBL_API cbbl_status cbbl_um_loss(const cbbl_two_hot* label, const double* logits, size_t length,
                                  double* value, double* grad);
CBBL_API cbbl_status cbbl_cbbl_loss(const cbbl_two_hot* label, const double* logits, size_t length,
                                    double um_weight, double* value, double* grad);
CBBL_API cbbl_status cbbl_l2_loss(const cbbl_offsets* t, const cbbl_offsets* t_hat, double* value,
                                  double* grad);
CBBL_API cbbl_status cbbl_smooth_l1_loss(const cbbl_offsets* t, const cbbl_offsets* t_hat,
                                         double delta, double* value, double* grad);
/* Gradient w.r.t. the predicted center's x coordinate. */
CBBL_API cbbl_status cbbl_iou_loss(const cbbl_box* gt, const cbbl_box* pred, double* value,
                                   double* grad_x);

/* ---- distortion sweeps -------------------------------------------------- */

typedef struct cbbl_records cbbl_records;

typedef struct cbbl_sweep_config {
    double gt_side;
    const double* scale_ratios;
    size_t num_ratios;
    int32_t shift_samples;
    double shift_max_fraction;
} cbbl_sweep_config;

typedef struct cbbl_record {
    const char* loss_name; /* valid while the owning cbbl_records lives */
    double scale_ratio;
    double shift_px;
    double loss;
    double grad_mag;
} cbbl_record;

/* gt_side 64, ratios {1, 0.75, 0.5, 0.25}, 257 samples, fraction 0.9. */
CBBL_API void cbbl_sweep_config_default(cbbl_sweep_config* config);
CBBL_API cbbl_status cbbl_sweep_iou(const cbbl_sweep_config* config, cbbl_records** out);
CBBL_API cbbl_status cbbl_sweep_norm(const double* anchor_widths, size_t num_widths,
                                     const double* pixel_errors, size_t num_errors,
                                     cbbl_records** out);
/* Moves all records of `src` into `dst` and re-sorts; `src` is left empty. */
CBBL_API cbbl_status cbbl_records_merge(cbbl_records* dst, cbbl_records* src);
CBBL_API cbbl_status cbbl_records_size(const cbbl_records* records, size_t* out);
CBBL_API cbbl_status cbbl_records_get(const cbbl_records* records, size_t index, cbbl_record* out);
CBBL_API cbbl_status cbbl_records_write_csv(const cbbl_records* records, const char* path);
CBBL_API void cbbl_records_destroy(cbbl_records* records);

/* ---- synthetic training ------------------------------------------------- */

typedef struct cbbl_scene cbbl_scene;
typedef struct cbbl_train_run cbbl_train_run;

typedef enum cbbl_head {
    CBBL_HEAD_REGRESSION_L2 = 0,
    CBBL_HEAD_REGRESSION_SMOOTH_L1 = 1,
    CBBL_HEAD_CBBL = 2
} cbbl_head;

typedef enum cbbl_bucket {
    CBBL_BUCKET_SMALL = 0,
    CBBL_BUCKET_MEDIUM = 1,
    CBBL_BUCKET_LARGE = 2
} cbbl_bucket;

typedef struct cbbl_train_config {
    cbbl_head head;
    const cbbl_grid* grid; /* NULL: uniform, alpha 2, n 10 */
    double um_weight;
    double smooth_l1_delta;
    double learning_rate;  /* negative or NaN: the head's default */
    int32_t epochs;
    int32_t batch_size;
    uint64_t seed;
} cbbl_train_config;

typedef struct cbbl_epoch_report {
    int32_t epoch;
    double mean_grad_mag[3]; /* indexed by cbbl_bucket */
    double mean_iou[3];
    int32_t count[3];
    double loss;
    double max_ce_logit_grad;
} cbbl_epoch_report;

typedef struct cbbl_salience {
    int has_bucket_ratio[3];
    double bucket_ratio[3];
    int has_small_over_large;
    double small_over_large;
    int has_final_small_over_large;
    double final_small_over_large;
} cbbl_salience;

CBBL_API cbbl_status cbbl_scene_generate(uint64_t seed, int32_t count_per_bucket, double image_size,
                                         cbbl_scene** out);
CBBL_API cbbl_status cbbl_scene_size(const cbbl_scene* scene, size_t* out);
CBBL_API void cbbl_scene_destroy(cbbl_scene* scene);

CBBL_API void cbbl_train_config_default(cbbl_train_config* config, cbbl_head head);
CBBL_API double cbbl_default_learning_rate(cbbl_head head);
/* On CBBL_ERR_DIVERGED, *failed_epoch (if non-NULL) receives the epoch in
 * which the non-finite value appeared. */
CBBL_API cbbl_status cbbl_train(const cbbl_scene* scene, const cbbl_train_config* config,
                                cbbl_train_run** out, int32_t* failed_epoch);
CBBL_API cbbl_status cbbl_train_run_epochs(const cbbl_train_run* run, size_t* out);
CBBL_API cbbl_status cbbl_train_run_get(const cbbl_train_run* run, size_t epoch,
                                        cbbl_epoch_report* out);
CBBL_API cbbl_status cbbl_train_run_salience(const cbbl_train_run* run, cbbl_salience* out);
CBBL_API cbbl_status cbbl_train_run_write_csv(const cbbl_train_run* run, const char* path);
CBBL_API void cbbl_train_run_destroy(cbbl_train_run* run);

/* ---- verification ------------------------------------------------------- */

typedef struct cbbl_verify_report cbbl_verify_report;

typedef struct cbbl_check {
    const char* name; /* valid while the owning report lives */
    int passed;
    double max_error;
    double tolerance;
    int32_t evaluated;
} cbbl_check;

/* Returns CBBL_OK when every check passes and CBBL_ERR_VERIFY otherwise; the
 * report is produced in both cases. */
CBBL_API cbbl_status cbbl_verify_run(uint64_t seed, int32_t samples, int inject_fault,
                                     cbbl_verify_report** out);
CBBL_API cbbl_status cbbl_verify_report_size(const cbbl_verify_report* report, size_t* out);
CBBL_API cbbl_status cbbl_verify_report_get(const cbbl_verify_report* report, size_t index,
                                            cbbl_check* out);
CBBL_API void cbbl_verify_report_destroy(cbbl_verify_report* report);

#ifdef __cplusplus
}
#endif

#endif /* CBBL_H */
