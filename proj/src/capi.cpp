#include "glyphlab/glyphlab.h"

#include <cmath>
#include <fstream>
#include <new>
#include <string>

#include "glyphlab/augment.hpp"
#include "glyphlab/dataset.hpp"
#include "glyphlab/eda.hpp"
#include "glyphlab/error.hpp"
#include "glyphlab/metrics.hpp"
#include "glyphlab/models.hpp"
#include "glyphlab/report.hpp"
#include "glyphlab/synthetic.hpp"

struct glx_dataset {
  glyphlab::LabeledDataset ds;
};
struct glx_model {
  glyphlab::Model model;
};
struct glx_history {
  glyphlab::TrainHistory history;
};

namespace {

using namespace glyphlab;

thread_local std::string g_last_error;

template <class F>
glx_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return GLX_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<glx_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return GLX_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorCode::Argument, std::string(what) + " is null");
}

std::ofstream open_out(const char* path) {
  need(path, "output path");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, std::string("cannot write ") + path);
  return out;
}

void close_out(std::ofstream& out, const char* path) {
  out.flush();
  require(out.good(), ErrorCode::Io, std::string("write failed: ") + path);
}

Tensor flattened(const LabeledDataset& ds) {
  return ds.images.reshaped({ds.size(), ds.height() * ds.width()});
}

void require_two_classes(const LabeledDataset& ds) {
  require(ds.num_classes() >= 2, ErrorCode::Argument, "at least 2 classes are required");
}

}  // namespace

extern "C" {

const char* glx_version(void) { return "0.1.0"; }

const char* glx_last_error(void) { return g_last_error.c_str(); }

const char* glx_status_name(glx_status status) {
  if (status == GLX_OK) return "ok";
  if (status == GLX_ERR_INTERNAL) return "internal";
  if (status > GLX_OK && status < GLX_ERR_INTERNAL) return to_string(static_cast<ErrorCode>(status));
  return "unknown";
}

glx_status glx_dataset_ingest_dir(const char* dir, size_t side, glx_dataset** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new glx_dataset{ingest_dir(dir, side)};
  });
}

glx_status glx_dataset_read(const char* path, glx_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new glx_dataset{read_gly_file(path)};
  });
}

glx_status glx_dataset_write(const glx_dataset* ds, const char* path) {
  return guarded([&] {
    need(ds, "dataset");
    need(path, "path");
    write_gly_file(ds->ds, path);
  });
}

glx_status glx_dataset_synth_shapes(size_t per_class, size_t side, double noise, uint64_t seed,
                                    glx_dataset** out) {
  return guarded([&] {
    need(out, "out");
    ShapesConfig cfg;
    cfg.per_class = per_class;
    cfg.side = side;
    cfg.noise = noise;
    cfg.seed = seed;
    *out = new glx_dataset{make_shapes(cfg)};
  });
}

glx_status glx_dataset_select(const glx_dataset* ds, const char* const* names, size_t count, glx_dataset** out) {
  return guarded([&] {
    need(ds, "dataset");
    need(out, "out");
    std::vector<std::string> wanted;
    for (size_t i = 0; i < count; ++i) {
      need(names[i], "class name");
      wanted.emplace_back(names[i]);
    }
    *out = new glx_dataset{select_classes(ds->ds, wanted)};
  });
}

glx_status glx_dataset_split(const glx_dataset* ds, double train_frac, double val_frac, double test_frac,
                             uint64_t seed, glx_dataset** train, glx_dataset** val, glx_dataset** test) {
  return guarded([&] {
    need(ds, "dataset");
    need(train, "train");
    need(val, "val");
    need(test, "test");
    Split s = split_stratified(ds->ds, SplitSpec{train_frac, val_frac, test_frac, seed});
    auto* a = new glx_dataset{std::move(s.train)};
    auto* b = new (std::nothrow) glx_dataset{std::move(s.val)};
    auto* c = new (std::nothrow) glx_dataset{std::move(s.test)};
    if (!b || !c) {
      delete a;
      delete b;
      delete c;
      throw std::bad_alloc();
    }
    *train = a;
    *val = b;
    *test = c;
  });
}

void glx_dataset_free(glx_dataset* ds) { delete ds; }

size_t glx_dataset_size(const glx_dataset* ds) { return ds ? ds->ds.size() : 0; }

void glx_dataset_shape(const glx_dataset* ds, size_t* height, size_t* width) {
  if (height) *height = ds ? ds->ds.height() : 0;
  if (width) *width = ds ? ds->ds.width() : 0;
}

size_t glx_dataset_class_count(const glx_dataset* ds) { return ds ? ds->ds.num_classes() : 0; }

const char* glx_dataset_class_name(const glx_dataset* ds, size_t k) {
  if (!ds || k >= ds->ds.num_classes()) return nullptr;
  return ds->ds.class_names[k].c_str();
}

glx_status glx_dataset_labels(const glx_dataset* ds, uint32_t* out, size_t capacity) {
  return guarded([&] {
    need(ds, "dataset");
    require(capacity >= ds->ds.size(), ErrorCode::Argument, "label buffer too small");
    need(out, "out");
    std::copy(ds->ds.labels.begin(), ds->ds.labels.end(), out);
  });
}

glx_status glx_dataset_pixels(const glx_dataset* ds, uint8_t* out, size_t capacity) {
  return guarded([&] {
    need(ds, "dataset");
    const auto vals = ds->ds.images.values();
    require(capacity >= vals.size(), ErrorCode::Argument, "pixel buffer too small");
    need(out, "out");
    for (size_t i = 0; i < vals.size(); ++i) out[i] = to_byte(vals[i]);
  });
}

void glx_tsne_options_default(glx_tsne_options* opts) {
  if (!opts) return;
  const TsneConfig cfg;
  opts->out_dims = cfg.out_dims;
  opts->perplexity = cfg.perplexity;
  opts->iters = cfg.iters;
  opts->learning_rate = cfg.learning_rate;
  opts->seed = cfg.seed;
}

glx_status glx_tsne_report(const glx_dataset* ds, const glx_tsne_options* opts, const char* csv_path,
                           const char* svg_path, double* final_kl) {
  return guarded([&] {
    need(ds, "dataset");
    need(opts, "options");
    require_two_classes(ds->ds);
    TsneConfig cfg;
    cfg.out_dims = opts->out_dims;
    cfg.perplexity = opts->perplexity;
    cfg.iters = opts->iters;
    cfg.learning_rate = opts->learning_rate;
    cfg.seed = opts->seed;
    if (cfg.exaggeration_iters > cfg.iters) cfg.exaggeration_iters = cfg.iters;
    const Embedding e = tsne(flattened(ds->ds), cfg);
    if (csv_path) {
      auto out = open_out(csv_path);
      write_embedding_csv(e, ds->ds.labels, ds->ds.class_names, out);
      close_out(out, csv_path);
    }
    if (svg_path) {
      auto out = open_out(svg_path);
      write_scatter_svg(e, ds->ds.labels, ds->ds.class_names, out);
      close_out(out, svg_path);
    }
    if (final_kl) *final_kl = e.kl_history.back();
  });
}

glx_status glx_distmap_report(const glx_dataset* ds, const char* csv_path, const char* svg_path) {
  return guarded([&] {
    need(ds, "dataset");
    require_two_classes(ds->ds);
    const DistanceMatrix d = pairwise_euclidean(flattened(ds->ds));
    const ClusteredMap map = clustered_map(d, hcluster_average(d), ds->ds.labels);
    if (csv_path) {
      auto out = open_out(csv_path);
      write_distmap_csv(map, out);
      close_out(out, csv_path);
    }
    if (svg_path) {
      auto out = open_out(svg_path);
      write_distmap_svg(map, ds->ds.class_names, out);
      close_out(out, svg_path);
    }
  });
}

void glx_train_options_default(glx_model_kind kind, glx_train_options* opts) {
  if (!opts) return;
  const TrainConfig cfg = kind == GLX_MODEL_MLR ? TrainConfig::mlr_defaults() : TrainConfig::cnn_defaults();
  opts->epochs = cfg.epochs;
  opts->batch_size = cfg.batch_size;
  opts->learning_rate = cfg.learning_rate;
  opts->l2 = cfg.l2;
  opts->seed = cfg.seed;
  opts->augment = "none";
}

glx_status glx_train(glx_model_kind kind, const glx_dataset* train, const glx_dataset* val,
                     const glx_train_options* opts, glx_model** model, glx_history** history) {
  return guarded([&] {
    need(train, "train");
    need(val, "val");
    need(opts, "options");
    need(model, "model");
    TrainConfig cfg = kind == GLX_MODEL_MLR ? TrainConfig::mlr_defaults() : TrainConfig::cnn_defaults();
    cfg.epochs = opts->epochs;
    cfg.batch_size = opts->batch_size;
    cfg.learning_rate = opts->learning_rate;
    cfg.l2 = opts->l2;
    cfg.seed = opts->seed;
    cfg.augment = preset(opts->augment ? opts->augment : "none");
    cfg.validate();
    if (kind == GLX_MODEL_MLR) {
      require(cfg.augment.is_identity(), ErrorCode::Argument, "logistic regression trains without augmentation");
      MlrResult r = mlr_train(train->ds, val->ds, cfg);
      auto* m = new glx_model{std::move(r.model)};
      if (history) {
        try {
          *history = new glx_history{std::move(r.history)};
        } catch (...) {
          delete m;
          throw;
        }
      }
      *model = m;
    } else if (kind == GLX_MODEL_CNN) {
      CnnResult r = cnn_train(train->ds, val->ds, cfg);
      auto* m = new glx_model{std::move(r.model)};
      if (history) {
        try {
          *history = new glx_history{std::move(r.history)};
        } catch (...) {
          delete m;
          throw;
        }
      }
      *model = m;
    } else {
      fail(ErrorCode::Argument, "unknown model kind");
    }
  });
}

void glx_history_free(glx_history* h) { delete h; }

size_t glx_history_epochs(const glx_history* h) { return h ? h->history.epochs() : 0; }

glx_status glx_history_row(const glx_history* h, size_t epoch, double row[4]) {
  return guarded([&] {
    need(h, "history");
    need(row, "row");
    require(epoch < h->history.epochs(), ErrorCode::Argument, "epoch out of range");
    row[0] = h->history.train_loss[epoch];
    row[1] = h->history.train_acc[epoch];
    row[2] = h->history.val_loss[epoch];
    row[3] = h->history.val_acc[epoch];
  });
}

glx_status glx_history_write_csv(const glx_history* h, const char* path) {
  return guarded([&] {
    need(h, "history");
    auto out = open_out(path);
    write_history_csv(h->history, out);
    close_out(out, path);
  });
}

long glx_history_overfit_epoch(const glx_history* h, size_t patience) {
  if (!h) return -1;
  const auto e = overfit_epoch(h->history, patience);
  return e ? static_cast<long>(*e) : -1;
}

glx_status glx_model_reference_cnn(size_t side, uint64_t seed, glx_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = new glx_model{reference_cnn(side, seed)};
  });
}

glx_status glx_model_write(const glx_model* m, const char* path) {
  return guarded([&] {
    need(m, "model");
    need(path, "path");
    write_gmd_file(m->model, path);
  });
}

glx_status glx_model_read(const char* path, glx_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new glx_model{read_gmd_file(path)};
  });
}

void glx_model_free(glx_model* m) { delete m; }

glx_model_kind glx_model_kind_of(const glx_model* m) {
  return m && std::holds_alternative<CnnModel>(m->model) ? GLX_MODEL_CNN : GLX_MODEL_MLR;
}

size_t glx_model_param_count(const glx_model* m) {
  if (!m) return 0;
  if (const auto* cnn = std::get_if<CnnModel>(&m->model)) return param_count(*cnn);
  const auto& mlr = std::get<MlrModel>(m->model);
  return mlr.w.size() + mlr.b.size();
}

glx_status glx_model_predict(const glx_model* m, const glx_dataset* ds, double* out, size_t capacity) {
  return guarded([&] {
    need(m, "model");
    need(ds, "dataset");
    Tensor probs;
    if (const auto* mlr = std::get_if<MlrModel>(&m->model)) {
      probs = predict_proba(*mlr, ds->ds.images);
    } else {
      const Tensor p = predict_proba(std::get<CnnModel>(m->model), ds->ds.images);
      probs = Tensor({p.size(), 2});
      for (size_t i = 0; i < p.size(); ++i) {
        probs[2 * i] = 1.0 - p[i];
        probs[2 * i + 1] = p[i];
      }
    }
    require(capacity >= probs.size(), ErrorCode::Argument, "probability buffer too small");
    need(out, "out");
    const auto vals = probs.values();
    std::copy(vals.begin(), vals.end(), out);
  });
}

glx_status glx_evaluate_report(const glx_model* m, const glx_dataset* ds, const char* csv_path,
                               const char* roc_svg_path, glx_eval_summary* summary) {
  return guarded([&] {
    need(m, "model");
    need(ds, "dataset");
    const Evaluation ev = evaluate(m->model, ds->ds);
    if (csv_path) {
      auto out = open_out(csv_path);
      write_evaluation_csv(ev, out);
      close_out(out, csv_path);
    }
    if (roc_svg_path) {
      auto out = open_out(roc_svg_path);
      write_roc_svg(ev, out);
      close_out(out, roc_svg_path);
    }
    if (summary) {
      summary->macro_auc = ev.auc.macro;
      summary->accuracy = ev.accuracy;
      summary->loss = ev.loss;
      summary->classes = ev.class_names.size();
    }
  });
}

glx_status glx_auc(const double* scores, const uint8_t* labels, size_t n, double* out) {
  return guarded([&] {
    need(out, "out");
    require(n == 0 || (scores && labels), ErrorCode::Argument, "null input");
    *out = auc(roc_curve({scores, n}, {labels, n}));
  });
}

glx_status glx_augment_preview(const glx_dataset* ds, const char* policy, size_t count, uint64_t seed,
                               const char* out_dir) {
  return guarded([&] {
    need(ds, "dataset");
    need(policy, "policy");
    need(out_dir, "out_dir");
    const AugmentPolicy pol = preset(policy);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    require(!ec && std::filesystem::is_directory(out_dir), ErrorCode::Io,
            std::string("cannot create directory ") + out_dir);
    const auto& d = ds->ds;
    const size_t h = d.height(), w = d.width();
    for (size_t k = 0; k < count; ++k) {
      const Tensor batch = augment_batch(d.images, pol, seed, k);
      for (size_t i = 0; i < d.size(); ++i) {
        GrayImage img{w, h, std::vector<uint8_t>(h * w)};
        const auto src = batch.slab(i);
        for (size_t p = 0; p < h * w; ++p) img.pixels[p] = to_byte(src[p]);
        const auto bytes = encode_pgm(img);
        const std::string path =
            (std::filesystem::path(out_dir) / (std::to_string(i) + "_" + std::to_string(k) + ".pgm")).string();
        std::ofstream out(path, std::ios::binary);
        require(out.good(), ErrorCode::Io, "cannot write " + path);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        close_out(out, path.c_str());
      }
    }
  });
}

}  // extern "C"
