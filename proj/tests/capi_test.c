/* Exercises the shared library through its C header only. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>

#include "glyphlab/glyphlab.h"

static int failures = 0;

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: CHECK failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

#define CHECK_OK(expr)                                                            \
  do {                                                                            \
    glx_status s_ = (expr);                                                       \
    if (s_ != GLX_OK) {                                                           \
      fprintf(stderr, "%s:%d: %s -> %s (%s)\n", __FILE__, __LINE__, #expr,        \
              glx_status_name(s_), glx_last_error());                             \
      ++failures;                                                                 \
    }                                                                             \
  } while (0)

static char dir[256];

static const char* path(const char* name) {
  static char buf[4][512];
  static int slot = 0;
  slot = (slot + 1) % 4;
  snprintf(buf[slot], sizeof buf[slot], "%s/%s", dir, name);
  return buf[slot];
}

static int same_file(const char* a, const char* b) {
  FILE* fa = fopen(a, "rb");
  FILE* fb = fopen(b, "rb");
  int same = fa && fb;
  while (same) {
    int ca = fgetc(fa), cb = fgetc(fb);
    if (ca != cb) same = 0;
    if (ca == EOF || cb == EOF) break;
  }
  if (fa) fclose(fa);
  if (fb) fclose(fb);
  return same;
}

static void test_errors(void) {
  glx_dataset* ds = NULL;
  CHECK(glx_dataset_read(path("missing.gly"), &ds) == GLX_ERR_IO);
  CHECK(ds == NULL);
  CHECK(strlen(glx_last_error()) > 0);

  FILE* f = fopen(path("bad.gly"), "wb");
  fputs("GLY1 but not really", f);
  fclose(f);
  CHECK(glx_dataset_read(path("bad.gly"), &ds) == GLX_ERR_CORRUPT_FILE);

  CHECK(glx_dataset_synth_shapes(0, 16, 0.1, 1, &ds) != GLX_OK);
  CHECK(strcmp(glx_status_name(GLX_ERR_UNDEFINED_CURVE), glx_status_name(GLX_OK)) != 0);

  double scores[3] = {0.1, 0.2, 0.3};
  uint8_t labels[3] = {1, 1, 1};
  double a = 0;
  CHECK(glx_auc(scores, labels, 3, &a) == GLX_ERR_UNDEFINED_CURVE);
  labels[0] = 0;
  CHECK_OK(glx_auc(scores, labels, 3, &a));
  CHECK(a == 1.0);
}

static void test_dataset(void) {
  glx_dataset* ds = NULL;
  CHECK_OK(glx_dataset_synth_shapes(10, 16, 0.2, 7, &ds));
  CHECK(glx_dataset_size(ds) == 20);
  size_t h = 0, w = 0;
  glx_dataset_shape(ds, &h, &w);
  CHECK(h == 16 && w == 16);
  CHECK(glx_dataset_class_count(ds) == 2);

  CHECK_OK(glx_dataset_write(ds, path("a.gly")));
  glx_dataset* back = NULL;
  CHECK_OK(glx_dataset_read(path("a.gly"), &back));
  CHECK_OK(glx_dataset_write(back, path("b.gly")));
  CHECK(same_file(path("a.gly"), path("b.gly")));

  uint32_t small[4];
  CHECK(glx_dataset_labels(ds, small, 4) == GLX_ERR_ARGUMENT);
  uint8_t* px = malloc(20 * 16 * 16);
  CHECK_OK(glx_dataset_pixels(ds, px, 20 * 16 * 16));
  free(px);

  const char* names[1] = {"no-such-class"};
  glx_dataset* sub = NULL;
  CHECK(glx_dataset_select(ds, names, 1, &sub) == GLX_ERR_ARGUMENT);
  names[0] = glx_dataset_class_name(ds, 0);
  CHECK_OK(glx_dataset_select(ds, names, 1, &sub));
  CHECK(glx_dataset_size(sub) == 10 && glx_dataset_class_count(sub) == 1);

  glx_tsne_options opts;
  glx_tsne_options_default(&opts);
  double kl = 0;
  CHECK(glx_tsne_report(sub, &opts, path("t.csv"), path("t.svg"), &kl) == GLX_ERR_ARGUMENT);

  glx_dataset *tr = NULL, *va = NULL, *te = NULL;
  CHECK_OK(glx_dataset_split(ds, 0.6, 0.2, 0.2, 3, &tr, &va, &te));
  CHECK(glx_dataset_size(tr) + glx_dataset_size(va) + glx_dataset_size(te) == 20);

  glx_dataset_free(sub);
  glx_dataset_free(tr);
  glx_dataset_free(va);
  glx_dataset_free(te);
  glx_dataset_free(back);
  glx_dataset_free(ds);
  glx_dataset_free(NULL);
}

static void test_reports(void) {
  glx_dataset* ds = NULL;
  CHECK_OK(glx_dataset_synth_shapes(8, 16, 0.2, 9, &ds));
  glx_tsne_options opts;
  glx_tsne_options_default(&opts);
  opts.iters = 200;
  double kl1 = 0, kl2 = 0;
  CHECK_OK(glx_tsne_report(ds, &opts, path("t1.csv"), path("t1.svg"), &kl1));
  CHECK_OK(glx_tsne_report(ds, &opts, path("t2.csv"), path("t2.svg"), &kl2));
  CHECK(kl1 == kl2 && isfinite(kl1));
  CHECK(same_file(path("t1.csv"), path("t2.csv")));
  CHECK(same_file(path("t1.svg"), path("t2.svg")));
  CHECK_OK(glx_distmap_report(ds, path("d.csv"), path("d.svg")));
  CHECK_OK(glx_augment_preview(ds, "lossy", 2, 1, path("")));
  CHECK(access(path("0_1.pgm"), R_OK) == 0);
  CHECK(glx_augment_preview(ds, "sideways", 1, 1, path("")) == GLX_ERR_ARGUMENT);
  glx_dataset_free(ds);
}

static void test_training(void) {
  glx_dataset *tr = NULL, *va = NULL;
  CHECK_OK(glx_dataset_synth_shapes(12, 16, 0.2, 1, &tr));
  CHECK_OK(glx_dataset_synth_shapes(6, 16, 0.2, 2, &va));

  glx_train_options o;
  glx_train_options_default(GLX_MODEL_MLR, &o);
  o.epochs = 20;
  glx_model* m = NULL;
  glx_history* h = NULL;
  CHECK_OK(glx_train(GLX_MODEL_MLR, tr, va, &o, &m, &h));
  CHECK(glx_model_kind_of(m) == GLX_MODEL_MLR);
  CHECK(glx_model_param_count(m) == 2 * 16 * 16 + 2);
  CHECK(glx_history_epochs(h) == 20);
  double row[4];
  CHECK_OK(glx_history_row(h, 0, row));
  CHECK(row[0] > 0 && row[1] >= 0 && row[1] <= 1);
  CHECK(glx_history_row(h, 20, row) == GLX_ERR_ARGUMENT);

  double* probs = malloc(sizeof(double) * 2 * glx_dataset_size(va));
  CHECK_OK(glx_model_predict(m, va, probs, 2 * glx_dataset_size(va)));
  for (size_t i = 0; i < glx_dataset_size(va); ++i) CHECK(fabs(probs[2 * i] + probs[2 * i + 1] - 1.0) < 1e-12);
  free(probs);

  glx_eval_summary s;
  CHECK_OK(glx_evaluate_report(m, va, path("e.csv"), path("e.svg"), &s));
  CHECK(s.classes == 2 && s.macro_auc >= 0 && s.macro_auc <= 1);

  CHECK_OK(glx_model_write(m, path("m.gmd")));
  glx_model* back = NULL;
  CHECK_OK(glx_model_read(path("m.gmd"), &back));
  CHECK_OK(glx_model_write(back, path("m2.gmd")));
  CHECK(same_file(path("m.gmd"), path("m2.gmd")));
  glx_model_free(back);
  glx_model_free(m);
  glx_history_free(h);

  o.augment = "lossy";
  CHECK(glx_train(GLX_MODEL_MLR, tr, va, &o, &m, &h) == GLX_ERR_ARGUMENT);

  glx_train_options_default(GLX_MODEL_CNN, &o);
  o.epochs = 1;
  CHECK(glx_train(GLX_MODEL_CNN, tr, va, &o, &m, &h) == GLX_ERR_ARGUMENT);
  glx_dataset_free(tr);
  glx_dataset_free(va);
  CHECK_OK(glx_dataset_synth_shapes(6, 32, 0.2, 1, &tr));
  CHECK_OK(glx_dataset_synth_shapes(3, 32, 0.2, 2, &va));
  o.batch_size = 8;
  CHECK_OK(glx_train(GLX_MODEL_CNN, tr, va, &o, &m, &h));
  CHECK(glx_model_kind_of(m) == GLX_MODEL_CNN);
  CHECK(glx_history_epochs(h) == 1);
  CHECK(glx_history_overfit_epoch(h, 1) == -1);
  glx_model_free(m);
  glx_history_free(h);

  glx_dataset_free(tr);
  glx_dataset_free(va);
}

static void test_reference_cnn(void) {
  glx_model* m = NULL;
  CHECK_OK(glx_model_reference_cnn(64, 0, &m));
  CHECK(glx_model_param_count(m) == 204641);
  glx_model_free(m);
  CHECK_OK(glx_model_reference_cnn(32, 0, &m));
  CHECK(glx_model_param_count(m) == 204641 - 3 * 128 * 128);
  glx_model_free(m);
}

int main(void) {
  snprintf(dir, sizeof dir, "/tmp/glx_capi_%d", (int)getpid());
  char cmd[300];
  snprintf(cmd, sizeof cmd, "mkdir -p %s", dir);
  if (system(cmd) != 0) return 1;

  CHECK(strlen(glx_version()) > 0);
  test_errors();
  test_dataset();
  test_reports();
  test_training();
  test_reference_cnn();

  snprintf(cmd, sizeof cmd, "rm -rf %s", dir);
  if (system(cmd) != 0) fprintf(stderr, "cleanup failed\n");
  printf("%s (%d failures)\n", failures ? "FAIL" : "OK", failures);
  return failures ? 1 : 0;
}
