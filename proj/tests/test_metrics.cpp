#include <doctest.h>

#include <cmath>
#include <sstream>

#include "glyphlab/error.hpp"
#include "glyphlab/metrics.hpp"
#include "glyphlab/report.hpp"
#include "glyphlab/rng.hpp"
#include "oracles.hpp"

using namespace glyphlab;

namespace {

bool has_point(const RocCurve& c, double f, double t) {
  for (const auto& p : c.points)
    if (p.fpr == f && p.tpr == t) return true;
  return false;
}

TrainHistory with_val(std::vector<double> v) {
  TrainHistory h;
  h.val_loss = v;
  h.train_loss = h.train_acc = h.val_acc = std::vector<double>(v.size(), 0.0);
  return h;
}

}  // namespace

TEST_CASE("roc hand cases") {
  const std::vector<double> s{0.9, 0.8, 0.3, 0.2};
  const std::vector<std::uint8_t> y{1, 1, 0, 0};
  const RocCurve perfect = roc_curve(s, y);
  CHECK(has_point(perfect, 0, 1));
  CHECK(auc(perfect) == 1.0);
  CHECK(std::isinf(perfect.thresholds.front()));

  const std::vector<double> tie(6, 0.4);
  const std::vector<std::uint8_t> ty{1, 0, 1, 0, 0, 1};
  const RocCurve flat = roc_curve(tie, ty);
  REQUIRE(flat.points.size() == 2);
  CHECK(has_point(flat, 0, 0));
  CHECK(has_point(flat, 1, 1));
  CHECK(auc(flat) == 0.5);

  const std::vector<double> s3{0.1, 0.4, 0.35, 0.8};
  const std::vector<std::uint8_t> y3{0, 0, 1, 1};
  CHECK(auc(roc_curve(s3, y3)) == 0.75);

  const std::vector<std::uint8_t> one{1, 1, 1, 1};
  CHECK_THROWS_AS(roc_curve(s, one), Error);
}

TEST_CASE("auc equals Mann-Whitney on random instances") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(10)) / 10.0;  // many ties
      y[i] = rng.coin();
    }
    y[0] = 1;
    y[1] = 0;
    const RocCurve c = roc_curve(s, y);
    CHECK(std::abs(auc(c) - oracle::mann_whitney(s, y)) <= 1e-12);
    for (std::size_t k = 1; k < c.points.size(); ++k) {
      CHECK(c.points[k].fpr >= c.points[k - 1].fpr);
      CHECK(c.points[k].tpr >= c.points[k - 1].tpr);
    }
    CHECK(c.points.back().fpr == 1.0);
    CHECK(c.points.back().tpr == 1.0);

    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3 * s[i]) - 7;
    CHECK(auc(roc_curve(t, y)) == auc(c));
  }
}

TEST_CASE("macro one-vs-rest AUC") {
  const Tensor onehot({4, 2}, std::vector<double>{1, 0, 0, 1, 1, 0, 0, 1});
  const std::vector<std::uint32_t> labels{0, 1, 0, 1};
  const OvrAuc a = macro_auc_ovr(onehot, labels);
  CHECK(a.macro == 1.0);
  CHECK(a.per_class == std::vector<double>{1.0, 1.0});

  const Tensor uniform({6, 3}, 1.0 / 3);
  const std::vector<std::uint32_t> l3{0, 1, 2, 0, 1, 2};
  const OvrAuc u = macro_auc_ovr(uniform, l3);
  for (double v : u.per_class) CHECK(v == 0.5);

  const std::vector<std::uint32_t> missing{0, 0, 0, 0, 1, 1};
  const std::vector<std::string> names{"A", "B", "C"};
  try {
    macro_auc_ovr(uniform, missing, names);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UndefinedCurve);
    CHECK(std::string(e.what()).find("C") != std::string::npos);
  }
}

TEST_CASE("confusion matrix and accuracy") {
  const std::vector<std::uint32_t> truth{0, 0, 1, 1}, pred{0, 1, 1, 1};
  const ConfusionMatrix cm = confusion_matrix(pred, truth, 2);
  CHECK(cm(0, 0) == 1);
  CHECK(cm(0, 1) == 1);
  CHECK(cm(1, 0) == 0);
  CHECK(cm(1, 1) == 2);
  CHECK(accuracy(cm) == 0.75);
  CHECK(accuracy(confusion_matrix(truth, truth, 2)) == 1.0);
  const std::vector<std::uint32_t> constant{1, 1, 1, 1};
  const ConfusionMatrix c2 = confusion_matrix(constant, truth, 2);
  CHECK(c2(0, 0) + c2(1, 0) == 0);
  const std::vector<std::uint32_t> bad{0, 0, 5, 1};
  CHECK_THROWS_AS(confusion_matrix(bad, truth, 2), Error);

  Rng rng(2);
  std::vector<std::uint32_t> t(40), p(40);
  for (std::size_t i = 0; i < 40; ++i) t[i] = static_cast<std::uint32_t>(rng.below(3)), p[i] = static_cast<std::uint32_t>(rng.below(3));
  const ConfusionMatrix base = confusion_matrix(p, t, 3);
  CHECK(base.total() == 40);
  const auto perm = permutation(rng, 40);
  std::vector<std::uint32_t> tp(40), pp(40);
  for (std::size_t i = 0; i < 40; ++i) tp[i] = t[perm[i]], pp[i] = p[perm[i]];
  CHECK(confusion_matrix(pp, tp, 3).m == base.m);
}

TEST_CASE("overfit_epoch") {
  CHECK(!overfit_epoch(with_val({1.0, 0.9, 0.8, 0.7})));
  CHECK(overfit_epoch(with_val({1.0, 0.5, 0.6, 0.7, 0.8})) == 1u);
  CHECK(!overfit_epoch(with_val({1.0, 0.5, 0.6, 0.7})));
  CHECK(overfit_epoch(with_val({1.0, 0.5, 0.6, 0.7}), 2) == 1u);
  CHECK(!overfit_epoch(with_val({})));
}

TEST_CASE("report formatting") {
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(1.0) == "1");
  CHECK(format_real(std::stod(format_real(1.0 / 3))) == format_real(1.0 / 3));
  CHECK(class_color(0, 10) == "#d90000");
  CHECK(class_color(9, 10) == "#0000d9");
  CHECK(class_color(3, 10) != class_color(4, 10));

  TrainHistory h = with_val({0.5, 0.25});
  std::stringstream out;
  write_history_csv(h, out);
  CHECK(out.str() == "epoch,train_loss,train_acc,val_loss,val_acc\n0,0,0,0.5,0\n1,0,0,0.25,0\n");
}

TEST_CASE("distance map CSV has an id header") {
  ClusteredMap map;
  map.order = {2, 0, 1};
  map.ribbon = {1, 0, 0};
  map.reordered = {0, 1, 2, 1, 0, 3, 2, 3, 0};
  std::stringstream out;
  write_distmap_csv(map, out);
  CHECK(out.str() == "id,2,0,1\n2,0,1,2\n0,1,0,3\n1,2,3,0\n");

  std::stringstream svg;
  const std::vector<std::string> names{"A", "H"};
  write_distmap_svg(map, names, svg);
  CHECK(svg.str().find("width=\"800\" height=\"600\"") != std::string::npos);
}
