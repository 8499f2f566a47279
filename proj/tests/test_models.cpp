#include <doctest.h>

#include <cmath>
#include <sstream>

#include "glyphlab/error.hpp"
#include "glyphlab/models.hpp"
#include "glyphlab/synthetic.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace glyphlab;

namespace {

// Two Gaussian blobs in 2D stored as 1x2 "images".
LabeledDataset blobs(Rng& rng, std::size_t per_class, double gap) {
  LabeledDataset ds;
  ds.class_names = {"a", "b"};
  ds.images = Tensor({2 * per_class, 1, 2});
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const std::uint32_t c = i < per_class ? 0 : 1;
    ds.labels.push_back(c);
    ds.images[2 * i] = rng.normal() * 0.3 + (c ? gap : -gap);
    ds.images[2 * i + 1] = rng.normal() * 0.3;
  }
  return ds;
}

// Dark vs bright images: trivially separable for the CNN.
LabeledDataset brightness(Rng& rng, std::size_t per_class, std::size_t side) {
  LabeledDataset ds;
  ds.class_names = {"dark", "light"};
  ds.images = Tensor({2 * per_class, side, side});
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const std::uint32_t c = static_cast<std::uint32_t>(i % 2);
    ds.labels.push_back(c);
    for (auto& v : ds.images.slab(i)) v = (c ? 0.6 : 0.1) + 0.3 * rng.unit();
  }
  return ds;
}

std::string gmd_bytes(const Model& m) {
  std::stringstream s;
  write_gmd(m, s);
  return s.str();
}

}  // namespace

TEST_CASE("MLR zero model is uniform") {
  const MlrModel m = mlr_init(4, 6);
  Rng rng(1);
  Tensor x({3, 2, 3});
  for (auto& v : x.values()) v = rng.unit();
  const Tensor p = predict_proba(m, x);
  for (double v : p.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  const std::vector<std::uint32_t> labels{0, 1, 3};
  CHECK(mlr_loss_and_grad(m, x, labels, 0.0).loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("MLR gradient matches finite differences") {
  Rng rng(2);
  MlrModel m = mlr_init(3, 4);
  for (auto& v : m.w.values()) v = rng.uniform(-1, 1);
  for (auto& v : m.b.values()) v = rng.uniform(-1, 1);
  Tensor x({5, 4});
  for (auto& v : x.values()) v = rng.uniform(-2, 2);
  const std::vector<std::uint32_t> labels{0, 2, 1, 1, 0};
  const double l2 = 0.01;
  const MlrLossGrad g = mlr_loss_and_grad(m, x, labels, l2);
  auto loss = [&] { return mlr_loss_and_grad(m, x, labels, l2).loss; };
  for (std::size_t k = 0; k < m.w.size(); ++k)
    CHECK(oracle::rel_err(g.grad_w[k], oracle::central_diff(m.w[k], loss)) <= 1e-6);
  for (std::size_t k = 0; k < m.b.size(); ++k)
    CHECK(oracle::rel_err(g.grad_b[k], oracle::central_diff(m.b[k], loss)) <= 1e-6);
}

TEST_CASE("MLR separates blobs and zero epochs stay uniform") {
  Rng rng(3);
  const LabeledDataset train = blobs(rng, 30, 2.0), val = blobs(rng, 10, 2.0);
  const MlrResult r = mlr_train(train, val, TrainConfig::mlr_defaults());
  CHECK(r.history.epochs() == 500);
  CHECK(r.history.train_acc.back() == 1.0);
  CHECK(r.history.train_loss.back() < r.history.train_loss.front());
  CHECK(r.model.class_names == train.class_names);

  TrainConfig none = TrainConfig::mlr_defaults();
  none.epochs = 0;
  const MlrResult z = mlr_train(train, val, none);
  CHECK(z.history.epochs() == 0);
  const Tensor flat = predict_proba(z.model, val.images);
  for (double v : flat.values()) CHECK(v == 0.5);

  const MlrResult again = mlr_train(train, val, TrainConfig::mlr_defaults());
  CHECK(again.history.val_loss == r.history.val_loss);
  CHECK(again.model.w == r.model.w);
}

TEST_CASE("MLR rejects a single-class training set") {
  Rng rng(4);
  LabeledDataset train = blobs(rng, 5, 1.0);
  for (auto& l : train.labels) l = 0;
  CHECK_THROWS_AS(mlr_train(train, blobs(rng, 3, 1.0), TrainConfig::mlr_defaults()), Error);
}

TEST_CASE("reference CNN parameter count") {
  CHECK(param_count(reference_cnn(64)) == 204641);
  CHECK(param_count(CnnModel{}) == 0);
  CnnModel one;
  one.layers.push_back(make_dense(10, 1));
  CHECK(param_count(one) == 11);
  CHECK(param_count(reference_cnn(32)) == 204641 - 3 * 128 * 128);
  CHECK_THROWS_AS(reference_cnn(48), Error);
  CHECK(reference_cnn(64, 3).layers.size() == 20);
}

TEST_CASE("reference CNN forward is a probability") {
  const CnnModel m = reference_cnn(32, 5);
  Rng rng(5);
  for (int i = 0; i < 3; ++i) {
    Tensor x({1, 32, 32});
    for (auto& v : x.values()) v = rng.unit();
    const double p = cnn_forward(m, x);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
  CHECK_THROWS_AS(cnn_forward(m, Tensor({1, 64, 64})), Error);
}

TEST_CASE("full CNN gradient matches finite differences") {
  CnnModel m = reference_cnn(32, 11);
  Rng rng(6);
  for (Tensor* p : parameters(m))
    if (p->rank() == 1)
      for (auto& v : p->values()) v = rng.uniform(-0.05, 0.05);
  Tensor x({1, 32, 32});
  for (auto& v : x.values()) v = rng.uniform(0.05, 1.0);
  const double y = 1.0;

  CnnTrace trace;
  const double p = cnn_forward(m, x, &trace);
  std::vector<Tensor> grads;
  for (const Tensor* t : parameters(m)) grads.emplace_back(t->shape());
  cnn_backward(m, trace, bce_grad(p, y), grads);

  auto loss = [&] { return bce_loss(cnn_forward(m, x), y); };
  auto params = parameters(m);
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (int k = 0; k < 5; ++k) {
      const std::size_t idx = rng.below(params[t]->size());
      const double num = oracle::central_diff((*params[t])[idx], loss);
      CHECK_MESSAGE(oracle::rel_err(grads[t][idx], num) <= 1e-5, "tensor ", t, " index ", idx);
    }
  }
}

TEST_CASE("CNN training is deterministic and row-order invariant") {
  Rng rng(7);
  const LabeledDataset train = brightness(rng, 6, 32), val = brightness(rng, 3, 32);
  TrainConfig cfg = TrainConfig::cnn_defaults();
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 9;
  const CnnResult a = cnn_train(train, val, cfg);
  const CnnResult b = cnn_train(train, val, cfg);
  CHECK(a.history.val_loss == b.history.val_loss);
  CHECK(a.history.train_loss == b.history.train_loss);
  CHECK(gmd_bytes(a.model) == gmd_bytes(b.model));

  std::vector<std::size_t> rev(train.size());
  for (std::size_t i = 0; i < rev.size(); ++i) rev[i] = rev.size() - 1 - i;
  const CnnResult c = cnn_train(subset(train, rev), val, cfg);
  CHECK(c.history.train_loss == a.history.train_loss);
  CHECK(gmd_bytes(c.model) == gmd_bytes(a.model));

  cfg.epochs = 0;
  const CnnResult z = cnn_train(train, val, cfg);
  CHECK(z.history.epochs() == 0);
  CHECK(gmd_bytes(z.model) == gmd_bytes(reference_cnn(32, derive_seed(9, 1))));
}

TEST_CASE("CNN fits a separable toy") {
  Rng rng(8);
  const LabeledDataset train = brightness(rng, 8, 32), val = brightness(rng, 4, 32);
  TrainConfig cfg = TrainConfig::cnn_defaults();
  cfg.epochs = 15;
  cfg.batch_size = 4;
  cfg.learning_rate = 1e-3;
  const CnnResult r = cnn_train(train, val, cfg);
  const Tensor p = predict_proba(r.model, train.images);
  double loss = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i] >= 0.0);
    CHECK(p[i] <= 1.0);
    loss += bce_loss(p[i], train.labels[i]);
  }
  CHECK(loss / static_cast<double>(p.size()) < 0.1);
}

TEST_CASE("CNN training requires two classes") {
  Rng rng(9);
  LabeledDataset three = brightness(rng, 3, 32);
  three.class_names.push_back("zzz");
  CHECK_THROWS_AS(cnn_train(three, three, TrainConfig::cnn_defaults()), Error);
}

TEST_CASE("GMD1 round trips bitwise") {
  Rng rng(10);
  for (int trial = 0; trial < 6; ++trial) {
    CnnModel cnn = reference_cnn(32 * (1 + rng.below(2)), rng.next());
    for (Tensor* p : parameters(cnn))
      if (p->rank() == 1)
        for (auto& v : p->values()) v = rng.normal();
    const std::string bytes = gmd_bytes(cnn);
    std::stringstream in(bytes);
    const Model back = read_gmd(in);
    REQUIRE(std::holds_alternative<CnnModel>(back));
    CHECK(std::get<CnnModel>(back).input_shape == cnn.input_shape);
    CHECK(gmd_bytes(back) == bytes);

    MlrModel mlr = mlr_init(2 + rng.below(5), 1 + rng.below(30));
    for (auto& v : mlr.w.values()) v = rng.normal();
    for (auto& v : mlr.b.values()) v = rng.normal();
    const std::string mb = gmd_bytes(mlr);
    std::stringstream min(mb);
    const Model mback = read_gmd(min);
    REQUIRE(std::holds_alternative<MlrModel>(mback));
    CHECK(std::get<MlrModel>(mback).w == mlr.w);
    CHECK(std::get<MlrModel>(mback).b == mlr.b);
    CHECK(gmd_bytes(mback) == mb);
  }
}

TEST_CASE("GMD1 rejects damaged files") {
  const std::string bytes = gmd_bytes(mlr_init(3, 4));
  auto code = [](const std::string& s) {
    std::stringstream in(s);
    try {
      read_gmd(in);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Argument;
  };
  std::string magic = bytes;
  magic[1] = 'Z';
  CHECK(code(magic) == ErrorCode::CorruptFile);
  CHECK(code(bytes.substr(0, bytes.size() - 3)) == ErrorCode::CorruptFile);
  CHECK(code(bytes + '\0') == ErrorCode::CorruptFile);
  CHECK(code("") == ErrorCode::CorruptFile);
}

TEST_CASE("synthetic shapes") {
  ShapesConfig cfg;
  cfg.per_class = 5;
  cfg.seed = 3;
  const LabeledDataset a = make_shapes(cfg), b = make_shapes(cfg);
  CHECK(a == b);
  CHECK(a.size() == 10);
  CHECK(a.class_names == std::vector<std::string>{"circle", "square"});
  CHECK(a.height() == 32);
  for (double v : a.images.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(std::abs(v * 255.0 - std::round(v * 255.0)) < 1e-9);
  }
}
