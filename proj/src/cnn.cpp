#include <algorithm>
#include <cmath>
#include <limits>

#include "glyphlab/error.hpp"
#include "glyphlab/models.hpp"
#include "glyphlab/rng.hpp"
#include "training_util.hpp"

namespace glyphlab {

namespace {

constexpr std::size_t kBlockChannels[5] = {32, 32, 64, 64, 128};
constexpr std::size_t kHiddenUnits = 128;

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

CnnModel reference_cnn(std::size_t side, std::uint64_t seed) {
  require(side >= 32 && side % 32 == 0, ErrorCode::Argument,
          "reference CNN needs a side divisible by 32, got " + std::to_string(side));
  Rng rng(seed);
  CnnModel m;
  m.input_shape = {1, side, side};
  std::size_t in_ch = 1;
  for (std::size_t out_ch : kBlockChannels) {
    Conv2d conv = make_conv2d(in_ch, out_ch);
    conv.weight = glorot_init(rng, in_ch * 9, out_ch * 9, conv.weight.shape());
    m.layers.emplace_back(std::move(conv));
    m.layers.emplace_back(Relu{});
    m.layers.emplace_back(MaxPool2x2{});
    in_ch = out_ch;
  }
  const std::size_t final_side = side / 32;
  m.layers.emplace_back(Flatten{{in_ch, final_side, final_side}});
  const std::size_t flat = in_ch * final_side * final_side;
  Dense hidden = make_dense(flat, kHiddenUnits);
  hidden.weight = glorot_init(rng, flat, kHiddenUnits, hidden.weight.shape());
  m.layers.emplace_back(std::move(hidden));
  m.layers.emplace_back(Relu{});
  Dense head = make_dense(kHiddenUnits, 1);
  head.weight = glorot_init(rng, kHiddenUnits, 1, head.weight.shape());
  m.layers.emplace_back(std::move(head));
  m.layers.emplace_back(Sigmoid{});
  return m;
}

std::size_t param_count(const CnnModel& model) {
  std::size_t n = 0;
  for (const auto* p : parameters(model)) n += p->size();
  return n;
}

std::vector<Tensor*> parameters(CnnModel& model) {
  std::vector<Tensor*> out;
  for (auto& layer : model.layers) {
    if (auto* c = std::get_if<Conv2d>(&layer)) {
      out.push_back(&c->weight);
      out.push_back(&c->bias);
    } else if (auto* d = std::get_if<Dense>(&layer)) {
      out.push_back(&d->weight);
      out.push_back(&d->bias);
    }
  }
  return out;
}

std::vector<const Tensor*> parameters(const CnnModel& model) {
  std::vector<const Tensor*> out;
  for (const auto& layer : model.layers) {
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      out.push_back(&c->weight);
      out.push_back(&c->bias);
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      out.push_back(&d->weight);
      out.push_back(&d->bias);
    }
  }
  return out;
}

double cnn_forward(const CnnModel& model, const Tensor& x, CnnTrace* trace) {
  require(x.shape() == model.input_shape, ErrorCode::Dimension,
          "CNN expects input " + shape_string(model.input_shape) + ", got " + shape_string(x.shape()));
  if (trace) {
    trace->inputs.clear();
    trace->pools.clear();
  }
  Tensor cur = x;
  for (const auto& layer : model.layers) {
    if (trace) trace->inputs.push_back(cur);
    cur = std::visit(Overloaded{
                         [&](const Conv2d& l) { return conv2d_forward(cur, l); },
                         [&](const MaxPool2x2&) {
                           PoolResult r = maxpool2x2_forward(cur);
                           Tensor pooled = r.pooled;
                           if (trace) trace->pools.push_back(std::move(r));
                           return pooled;
                         },
                         [&](const Relu&) { return relu_forward(cur); },
                         [&](const Flatten&) { return cur.reshaped({cur.size()}); },
                         [&](const Dense& l) { return dense_forward(cur, l); },
                         [&](const Sigmoid&) { return sigmoid_forward(cur); },
                     },
                     layer);
  }
  require(cur.size() == 1, ErrorCode::Dimension, "CNN output is not a scalar");
  if (trace) trace->output = cur[0];
  return cur[0];
}

void cnn_backward(const CnnModel& model, const CnnTrace& trace, double dloss_dp, std::span<Tensor> grads) {
  require(trace.inputs.size() == model.layers.size(), ErrorCode::Argument, "trace does not match model");
  std::size_t param = grads.size();
  std::size_t pool = trace.pools.size();
  Tensor g({1}, {dloss_dp});
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const Tensor& in = trace.inputs[li];
    const bool need_gx = li > 0;
    std::visit(Overloaded{
                   [&](const Conv2d& l) {
                     param -= 2;
                     Tensor gx;
                     conv2d_backward_into(in, l, g, need_gx ? &gx : nullptr, grads[param], grads[param + 1]);
                     g = std::move(gx);
                   },
                   [&](const MaxPool2x2&) { g = maxpool2x2_backward(trace.pools[--pool], g); },
                   [&](const Relu&) { g = relu_backward(in, g); },
                   [&](const Flatten&) { g = g.reshaped(in.shape()); },
                   [&](const Dense& l) {
                     param -= 2;
                     Tensor gx;
                     dense_backward_into(in, l, g, need_gx ? &gx : nullptr, grads[param], grads[param + 1]);
                     g = std::move(gx);
                   },
                   [&](const Sigmoid&) { g = sigmoid_backward(sigmoid_forward(in), g); },
               },
               model.layers[li]);
  }
}

namespace {

Tensor sample_view(const Tensor& images, std::size_t i, const Shape& shape) {
  const auto slab = images.slab(i);
  return Tensor(shape, std::vector<double>(slab.begin(), slab.end()));
}

void check_images_for(const CnnModel& model, const Tensor& images) {
  require(images.rank() == 3 && model.input_shape.size() == 3 && images.extent(1) == model.input_shape[1] &&
              images.extent(2) == model.input_shape[2],
          ErrorCode::Dimension,
          "CNN expects images [n," + std::to_string(model.input_shape.at(1)) + "," +
              std::to_string(model.input_shape.at(2)) + "], got " + shape_string(images.shape()));
}

}  // namespace

Tensor predict_proba(const CnnModel& model, const Tensor& images) {
  check_images_for(model, images);
  const std::size_t n = images.extent(0);
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) out[i] = cnn_forward(model, sample_view(images, i, model.input_shape));
  return out;
}

CnnResult cnn_train(const LabeledDataset& train, const LabeledDataset& val, const TrainConfig& cfg) {
  cfg.validate();
  train.validate();
  val.validate();
  require(train.num_classes() == 2, ErrorCode::Argument,
          "CNN training needs exactly 2 classes, got " + std::to_string(train.num_classes()));
  require(val.class_names == train.class_names, ErrorCode::Argument, "train and val class tables differ");
  require(train.height() == train.width(), ErrorCode::Argument, "CNN images must be square");
  require(val.height() == train.height() && val.width() == train.width(), ErrorCode::Dimension,
          "train and val image sizes differ");
  require(val.size() > 0, ErrorCode::Argument, "validation set is empty");
  require(cfg.epochs == 0 || train.size() > 0, ErrorCode::Argument, "training set is empty");

  CnnResult result{reference_cnn(train.width(), derive_seed(cfg.seed, 1)), {}, std::nullopt};
  result.model.class_names = train.class_names;
  CnnModel& model = result.model;
  CnnModel best = model;

  const LabeledDataset canon = subset(train, canonical_order(train));
  const std::size_t n = canon.size();
  const std::size_t batch = cfg.batch_size == 0 ? std::max<std::size_t>(n, 1) : cfg.batch_size;
  Rng shuffle(derive_seed(cfg.seed, 2));
  const std::uint64_t augment_seed = derive_seed(cfg.seed, 3);

  auto params = parameters(model);
  std::vector<Tensor> grads;
  for (auto* p : params) grads.emplace_back(p->shape());
  std::vector<const Tensor*> grad_ptrs;
  for (auto& g : grads) grad_ptrs.push_back(&g);
  RmspropState state;
  const RmspropConfig opt{cfg.learning_rate, cfg.rmsprop_rho, cfg.rmsprop_eps};
  double best_loss = std::numeric_limits<double>::infinity();
  CnnTrace trace;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Tensor images = augment_batch(canon.images, cfg.augment, augment_seed, epoch);
    const auto perm = permutation(shuffle, n);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t m = std::min(batch, n - start);
      for (auto& g : grads) g.fill(0.0);
      for (std::size_t s = start; s < start + m; ++s) {
        const std::size_t idx = perm[s];
        const double y = static_cast<double>(canon.labels[idx]);
        const double p = cnn_forward(model, sample_view(images, idx, model.input_shape), &trace);
        loss_sum += bce_loss(p, y);
        if ((p > 0.5) == (y > 0.5)) ++correct;
        cnn_backward(model, trace, bce_grad(p, y) / static_cast<double>(m), grads);
      }
      if (cfg.l2 > 0) {
        for (std::size_t t = 0; t < params.size(); t += 2)  // weights only
          for (std::size_t k = 0; k < params[t]->size(); ++k) grads[t][k] += cfg.l2 * (*params[t])[k];
      }
      rmsprop_step(params, grad_ptrs, state, opt);
    }

    const Tensor probs = predict_proba(model, val.images);
    double vloss = 0.0;
    std::size_t vcorrect = 0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      const double y = static_cast<double>(val.labels[i]);
      vloss += bce_loss(probs[i], y);
      if ((probs[i] > 0.5) == (y > 0.5)) ++vcorrect;
    }
    vloss /= static_cast<double>(val.size());

    result.history.train_loss.push_back(loss_sum / static_cast<double>(n));
    result.history.train_acc.push_back(fraction(correct, n));
    result.history.val_loss.push_back(vloss);
    result.history.val_acc.push_back(fraction(vcorrect, val.size()));
    if (vloss < best_loss) {
      best_loss = vloss;
      best = model;
      result.best_epoch = epoch;
    }
  }
  if (result.best_epoch) model = std::move(best);
  return result;
}

}  // namespace glyphlab
