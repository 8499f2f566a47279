#include <algorithm>
#include <cmath>
#include <set>

#include "glyphlab/error.hpp"
#include "glyphlab/models.hpp"
#include "training_util.hpp"

namespace glyphlab {

TrainConfig TrainConfig::cnn_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::mlr_defaults() {
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.batch_size = 0;
  cfg.learning_rate = 0.1;
  cfg.l2 = 1e-4;
  return cfg;
}

void TrainConfig::validate() const {
  require(learning_rate > 0 && std::isfinite(learning_rate), ErrorCode::Argument, "learning rate must be positive");
  require(rmsprop_rho > 0 && rmsprop_rho < 1, ErrorCode::Argument, "rmsprop rho must be in (0, 1)");
  require(rmsprop_eps > 0, ErrorCode::Argument, "rmsprop eps must be positive");
  require(l2 >= 0, ErrorCode::Argument, "l2 must be >= 0");
  augment.validate();
}

MlrModel mlr_init(std::size_t classes, std::size_t features) {
  require(classes >= 2 && features >= 1, ErrorCode::Argument, "MLR needs >= 2 classes and >= 1 feature");
  return MlrModel{Tensor({classes, features}), Tensor({classes}), {}};
}

namespace {

struct MlrPass {
  double data_loss = 0.0;  // mean cross-entropy
  std::size_t correct = 0;
};

// One pass over [n, D]; fills gradients of the mean cross-entropy when asked.
MlrPass mlr_pass(const MlrModel& m, const Tensor& x, std::span<const std::uint32_t> labels, Tensor* gw, Tensor* gb) {
  const std::size_t n = labels.size(), c = m.num_classes(), d = m.num_features();
  require(x.rank() >= 1 && x.extent(0) == n, ErrorCode::Dimension, "MLR: sample count differs from label count");
  require(n == 0 || x.size() / n == d, ErrorCode::Dimension,
          "MLR expects " + std::to_string(d) + " features per sample, got " + std::to_string(n ? x.size() / n : 0));
  if (gw) *gw = Tensor(m.w.shape());
  if (gb) *gb = Tensor(m.b.shape());
  MlrPass out;
  std::vector<double> z(c);
  const double* px = x.data().data();
  const double* pw = m.w.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = px + i * d;
    const std::uint32_t y = labels[i];
    require(y < c, ErrorCode::Argument, "label out of range for MLR model");
    for (std::size_t k = 0; k < c; ++k) {
      double s = 0.0;
      const double* wk = pw + k * d;
      for (std::size_t f = 0; f < d; ++f) s += wk[f] * row[f];
      z[k] = s + m.b[k];
    }
    const auto argmax = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    if (argmax == y) ++out.correct;
    const auto sce = softmax_cross_entropy(Tensor({c}, z), y);
    out.data_loss += sce.loss;
    if (gw) {
      for (std::size_t k = 0; k < c; ++k) {
        const double r = sce.grad_z[k];
        double* g = gw->data().data() + k * d;
        for (std::size_t f = 0; f < d; ++f) g[f] += r * row[f];
        (*gb)[k] += r;
      }
    }
  }
  if (n > 0) {
    const double inv = 1.0 / static_cast<double>(n);
    out.data_loss *= inv;
    if (gw) {
      for (auto& v : gw->values()) v *= inv;
      for (auto& v : gb->values()) v *= inv;
    }
  }
  return out;
}

}  // namespace

MlrLossGrad mlr_loss_and_grad(const MlrModel& model, const Tensor& x, std::span<const std::uint32_t> labels,
                              double l2) {
  MlrLossGrad out{0.0, {}, {}};
  const MlrPass pass = mlr_pass(model, x, labels, &out.grad_w, &out.grad_b);
  double sq = 0.0;
  for (std::size_t k = 0; k < model.w.size(); ++k) {
    sq += model.w[k] * model.w[k];
    out.grad_w[k] += l2 * model.w[k];
  }
  out.loss = pass.data_loss + 0.5 * l2 * sq;
  return out;
}

MlrResult mlr_train(const LabeledDataset& train, const LabeledDataset& val, const TrainConfig& cfg) {
  cfg.validate();
  train.validate();
  val.validate();
  const std::set<std::uint32_t> present(train.labels.begin(), train.labels.end());
  require(present.size() >= 2, ErrorCode::Argument, "MLR training set must contain at least 2 classes");
  require(val.class_names == train.class_names, ErrorCode::Argument, "train and val class tables differ");
  require(val.size() > 0, ErrorCode::Argument, "validation set is empty");
  const std::size_t d = train.height() * train.width();
  require(val.height() * val.width() == d, ErrorCode::Dimension, "train and val image sizes differ");

  MlrResult result{mlr_init(train.num_classes(), d), {}};
  result.model.class_names = train.class_names;
  const LabeledDataset canon = subset(train, canonical_order(train));

  Tensor gw, gb;
  MlrPass now = mlr_pass(result.model, canon.images, canon.labels, &gw, &gb);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    MlrModel& m = result.model;
    for (std::size_t k = 0; k < m.w.size(); ++k) m.w[k] -= cfg.learning_rate * (gw[k] + cfg.l2 * m.w[k]);
    for (std::size_t k = 0; k < m.b.size(); ++k) m.b[k] -= cfg.learning_rate * gb[k];

    // Gradient for the next step doubles as the post-step training metrics.
    now = mlr_pass(m, canon.images, canon.labels, &gw, &gb);
    const MlrPass v = mlr_pass(m, val.images, val.labels, nullptr, nullptr);
    result.history.train_loss.push_back(now.data_loss);
    result.history.train_acc.push_back(fraction(now.correct, canon.size()));
    result.history.val_loss.push_back(v.data_loss);
    result.history.val_acc.push_back(fraction(v.correct, val.size()));
  }
  return result;
}

Tensor predict_proba(const MlrModel& model, const Tensor& images) {
  require(images.rank() >= 1, ErrorCode::Dimension, "predict expects [n, ...]");
  const std::size_t n = images.extent(0), c = model.num_classes(), d = model.num_features();
  require(n == 0 || images.size() / n == d, ErrorCode::Dimension,
          "model expects " + std::to_string(d) + " pixels per image, got " + std::to_string(n ? images.size() / n : 0));
  Tensor out({n, c});
  const double* px = images.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    Tensor z({c});
    for (std::size_t k = 0; k < c; ++k) {
      double s = 0.0;
      const double* wk = model.w.data().data() + k * d;
      for (std::size_t f = 0; f < d; ++f) s += wk[f] * px[i * d + f];
      z[k] = s + model.b[k];
    }
    const Tensor p = softmax(z);
    std::copy(p.values().begin(), p.values().end(), out.slab(i).begin());
  }
  return out;
}

std::vector<std::size_t> canonical_order(const LabeledDataset& ds) {
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (ds.labels[a] != ds.labels[b]) return ds.labels[a] < ds.labels[b];
    const auto sa = ds.images.slab(a), sb = ds.images.slab(b);
    return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(), sb.end());
  });
  return idx;
}

}  // namespace glyphlab
