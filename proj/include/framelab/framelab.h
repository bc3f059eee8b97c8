/* C interface to the framelab library. All handles are opaque; every call
 * that can fail returns an fl_status and leaves a message in fl_last_error().
 * Strings returned through char** out-parameters are heap allocated and must
 * be released with fl_string_free. */
#ifndef FRAMELAB_H
#define FRAMELAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(FRAMELAB_BUILDING_LIBRARY)
#define FL_API __attribute__((visibility("default")))
#else
#define FL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fl_status {
    FL_OK = 0,
    FL_ERR_INVALID_ARGUMENT = 1,
    FL_ERR_DOMAIN = 2,
    FL_ERR_MECHANISM = 3,
    FL_ERR_IO = 4,
    FL_ERR_PARSE = 5,
    FL_ERR_SCHEMA = 6,
    FL_ERR_VERSION = 7,
    FL_ERR_DIVERGED = 8,
    FL_ERR_INTERNAL = 9
} fl_status;

typedef struct fl_frame fl_frame;
typedef struct fl_dataset fl_dataset;
typedef struct fl_model fl_model;
typedef struct fl_curve fl_curve;

FL_API const char* fl_status_string(fl_status status);
/* Message of the last failed call on this thread ("" if none). */
FL_API const char* fl_last_error(void);
FL_API const char* fl_version(void);
FL_API void fl_string_free(char* s);

/* ---- frame ---- */

typedef struct fl_frame_config {
    double story_height;   /* m */
    double bay_width;      /* m */
    double phi_scwb;
    double column_area;    /* m^2 */
    double column_inertia; /* m^4 */
    double beam_area;
    double beam_inertia;
    double youngs_modulus; /* Pa */
    double yield_strength; /* Pa */
} fl_frame_config;

FL_API void fl_frame_config_default(fl_frame_config* config);
/* A null config builds the default frame. */
FL_API fl_status fl_frame_create_reference(const fl_frame_config* config, fl_frame** out);
FL_API fl_status fl_frame_load(const char* path, fl_frame** out);
FL_API fl_status fl_frame_save(const fl_frame* frame, const char* path);
FL_API void fl_frame_destroy(fl_frame* frame);
FL_API size_t fl_frame_node_count(const fl_frame* frame);
/* One finding per line; empty string when the frame is valid. */
FL_API fl_status fl_frame_validate(const fl_frame* frame, char** report);

/* ---- fem ---- */

typedef struct fl_node_response {
    double ux_mm;
    double uy_mm;
    double rz_deg;
} fl_node_response;

/* `out` must hold fl_frame_node_count() entries. */
FL_API fl_status fl_solve_linear(const fl_frame* frame, double f_mid, double f_top,
                                 fl_node_response* out, size_t capacity);
FL_API fl_status fl_pushover(const fl_frame* frame, double f_mid, double f_top, int n_steps,
                             double hardening_ratio, fl_curve** out);
FL_API void fl_curve_destroy(fl_curve* curve);
FL_API size_t fl_curve_hinge_count(const fl_curve* curve);
FL_API size_t fl_curve_point_count(const fl_curve* curve);
FL_API fl_status fl_curve_final_response(const fl_curve* curve, fl_node_response* out,
                                         size_t capacity);
FL_API fl_status fl_curve_csv(const fl_curve* curve, char** csv);
FL_API fl_status fl_curve_svg(const fl_curve* curve, char** svg);

/* ---- yield ---- */

typedef struct fl_yield_estimate {
    double yield_moment;  /* N m */
    double yield_shear;   /* N */
    double elastic_bound; /* N */
} fl_yield_estimate;

FL_API fl_status fl_portal_yield(const fl_frame* frame, double yield_strength,
                                 fl_yield_estimate* out);

typedef struct fl_scan_row {
    int step;
    double load_factor;
    double force;
    double ratio_story1;
    double ratio_story2;
    int first_yield;
} fl_scan_row;

/* `rows` must hold n_steps entries. */
FL_API fl_status fl_increment_scan(double f_max, int n_steps, const fl_yield_estimate* estimate,
                                   fl_scan_row* rows, size_t capacity);

/* ---- dataset ---- */

typedef struct fl_dataset_config {
    int n_cases;
    double linear_min, linear_max;       /* N */
    double nonlinear_min, nonlinear_max; /* N */
    double mix;
    double split;
    uint64_t seed;
    int n_steps;
    double hardening_ratio;
} fl_dataset_config;

FL_API void fl_dataset_config_default(fl_dataset_config* config);
FL_API fl_status fl_dataset_generate(const fl_frame* frame, const fl_dataset_config* config,
                                     fl_dataset** out);
FL_API fl_status fl_dataset_load(const char* path, fl_dataset** out);
FL_API fl_status fl_dataset_save(const fl_dataset* dataset, const char* path);
FL_API void fl_dataset_destroy(fl_dataset* dataset);
FL_API size_t fl_dataset_size(const fl_dataset* dataset);
FL_API size_t fl_dataset_linear_count(const fl_dataset* dataset);

/* ---- learner ---- */

typedef enum fl_model_kind { FL_MODEL_GNN = 0, FL_MODEL_NN = 1 } fl_model_kind;

typedef struct fl_train_config {
    fl_model_kind kind;
    double learning_rate;
    size_t batch_size;
    int max_epochs;
    double lambda;
    uint64_t seed;
    size_t hidden_dim;
    int self_term;
    double split_fraction;
    uint64_t split_seed;
} fl_train_config;

typedef void (*fl_epoch_callback)(int epoch, double train_loss, double test_loss,
                                  double test_accuracy, void* user);

FL_API void fl_train_config_default(fl_train_config* config);
/* Splits the dataset, fits normalisation statistics and trains. */
FL_API fl_status fl_train(const fl_frame* frame, const fl_dataset* dataset,
                          const fl_train_config* config, fl_epoch_callback on_epoch, void* user,
                          fl_model** out);
FL_API fl_status fl_model_save(const fl_model* model, const char* path);
FL_API fl_status fl_model_load(const char* path, fl_model** out);
FL_API void fl_model_destroy(fl_model* model);
FL_API size_t fl_model_parameter_count(const fl_model* model);
FL_API int fl_model_best_epoch(const fl_model* model);
FL_API fl_status fl_model_predict(const fl_model* model, const fl_frame* frame, double f_mid,
                                  double f_top, fl_node_response* out, size_t capacity);

/* ---- evaluator ---- */

/* Rebuilds the training/testing split recorded in the checkpoint and scores
 * both under the named profile ("strict" or "zone"). */
FL_API fl_status fl_evaluate(const fl_model* model, const fl_frame* frame,
                             const fl_dataset* dataset, const char* profile, char** csv,
                             char** text);
FL_API fl_status fl_case_table(const fl_model* model, const fl_frame* frame, double f_mid,
                               double f_top, char** table);

#ifdef __cplusplus
}
#endif

#endif /* FRAMELAB_H */
