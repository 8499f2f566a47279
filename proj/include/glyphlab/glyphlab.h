/* glyphlab C interface. All functions return a glx_status; on failure the
 * message is available from glx_last_error() on the calling thread. Handles
 * are opaque and must be released with the matching *_free function. */
#ifndef GLYPHLAB_H
#define GLYPHLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GLX_API __declspec(dllexport)
#else
#define GLX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum glx_status {
  GLX_OK = 0,
  GLX_ERR_ARGUMENT = 1,
  GLX_ERR_DIMENSION = 2,
  GLX_ERR_IO = 3,
  GLX_ERR_CORRUPT_FILE = 4,
  GLX_ERR_UNSUPPORTED_FORMAT = 5,
  GLX_ERR_UNSUPPORTED_DEPTH = 6,
  GLX_ERR_EMPTY_DATASET = 7,
  GLX_ERR_STRATIFICATION = 8,
  GLX_ERR_UNDEFINED_CURVE = 9,
  GLX_ERR_INTERNAL = 10
} glx_status;

typedef enum glx_model_kind { GLX_MODEL_MLR = 0, GLX_MODEL_CNN = 1 } glx_model_kind;

typedef struct glx_dataset glx_dataset;
typedef struct glx_model glx_model;
typedef struct glx_history glx_history;

GLX_API const char* glx_version(void);
GLX_API const char* glx_last_error(void);
GLX_API const char* glx_status_name(glx_status status);

/* datasets */
GLX_API glx_status glx_dataset_ingest_dir(const char* dir, size_t side, glx_dataset** out);
GLX_API glx_status glx_dataset_read(const char* path, glx_dataset** out);
GLX_API glx_status glx_dataset_write(const glx_dataset* ds, const char* path);
GLX_API glx_status glx_dataset_synth_shapes(size_t per_class, size_t side, double noise, uint64_t seed,
                                            glx_dataset** out);
GLX_API glx_status glx_dataset_select(const glx_dataset* ds, const char* const* names, size_t count,
                                      glx_dataset** out);
GLX_API glx_status glx_dataset_split(const glx_dataset* ds, double train_frac, double val_frac, double test_frac,
                                     uint64_t seed, glx_dataset** train, glx_dataset** val, glx_dataset** test);
GLX_API void glx_dataset_free(glx_dataset* ds);
GLX_API size_t glx_dataset_size(const glx_dataset* ds);
GLX_API void glx_dataset_shape(const glx_dataset* ds, size_t* height, size_t* width);
GLX_API size_t glx_dataset_class_count(const glx_dataset* ds);
GLX_API const char* glx_dataset_class_name(const glx_dataset* ds, size_t k);
/* Copies labels (n values) / pixels (n*h*w bytes) into caller buffers. */
GLX_API glx_status glx_dataset_labels(const glx_dataset* ds, uint32_t* out, size_t capacity);
GLX_API glx_status glx_dataset_pixels(const glx_dataset* ds, uint8_t* out, size_t capacity);

/* exploratory analysis */
typedef struct glx_tsne_options {
  size_t out_dims;
  double perplexity;
  size_t iters;
  double learning_rate;
  uint64_t seed;
} glx_tsne_options;

GLX_API void glx_tsne_options_default(glx_tsne_options* opts);
GLX_API glx_status glx_tsne_report(const glx_dataset* ds, const glx_tsne_options* opts, const char* csv_path,
                                   const char* svg_path, double* final_kl);
GLX_API glx_status glx_distmap_report(const glx_dataset* ds, const char* csv_path, const char* svg_path);

/* training */
typedef struct glx_train_options {
  size_t epochs;
  size_t batch_size; /* 0 = full batch */
  double learning_rate;
  double l2;
  uint64_t seed;
  const char* augment; /* none | lossless | lossy */
} glx_train_options;

GLX_API void glx_train_options_default(glx_model_kind kind, glx_train_options* opts);
GLX_API glx_status glx_train(glx_model_kind kind, const glx_dataset* train, const glx_dataset* val,
                             const glx_train_options* opts, glx_model** model, glx_history** history);

GLX_API void glx_history_free(glx_history* h);
GLX_API size_t glx_history_epochs(const glx_history* h);
/* row = {train_loss, train_acc, val_loss, val_acc} */
GLX_API glx_status glx_history_row(const glx_history* h, size_t epoch, double row[4]);
GLX_API glx_status glx_history_write_csv(const glx_history* h, const char* path);
/* Returns -1 when no overfitting is detected. */
GLX_API long glx_history_overfit_epoch(const glx_history* h, size_t patience);

/* models */
GLX_API glx_status glx_model_reference_cnn(size_t side, uint64_t seed, glx_model** out);
GLX_API glx_status glx_model_write(const glx_model* m, const char* path);
GLX_API glx_status glx_model_read(const char* path, glx_model** out);
GLX_API void glx_model_free(glx_model* m);
GLX_API glx_model_kind glx_model_kind_of(const glx_model* m);
GLX_API size_t glx_model_param_count(const glx_model* m);
/* Class probabilities, row-major [n, C]; a CNN yields C = 2 as (1-p, p). */
GLX_API glx_status glx_model_predict(const glx_model* m, const glx_dataset* ds, double* out, size_t capacity);

/* evaluation */
typedef struct glx_eval_summary {
  double macro_auc;
  double accuracy;
  double loss;
  size_t classes;
} glx_eval_summary;

GLX_API glx_status glx_evaluate_report(const glx_model* m, const glx_dataset* ds, const char* csv_path,
                                       const char* roc_svg_path, glx_eval_summary* summary);
GLX_API glx_status glx_auc(const double* scores, const uint8_t* labels, size_t n, double* out);

/* augmentation preview: writes <dir>/<index>_<k>.pgm for k < count */
GLX_API glx_status glx_augment_preview(const glx_dataset* ds, const char* policy, size_t count, uint64_t seed,
                                       const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
