#include "glyphlab/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "glyphlab/error.hpp"

namespace glyphlab {

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  require(scores.size() == labels.size(), ErrorCode::Argument, "roc_curve: scores and labels differ in length");
  std::size_t pos = 0;
  for (auto l : labels) {
    require(l <= 1, ErrorCode::Argument, "roc_curve: labels must be 0 or 1");
    pos += l;
  }
  const std::size_t neg = labels.size() - pos;
  require(pos > 0 && neg > 0, ErrorCode::UndefinedCurve, "roc_curve: both classes must be present");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve c;
  c.points.push_back({0.0, 0.0});
  c.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < idx.size();) {
    const double s = scores[idx[k]];
    while (k < idx.size() && scores[idx[k]] == s) {
      (labels[idx[k]] ? tp : fp) += 1;
      ++k;
    }
    c.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                        static_cast<double>(tp) / static_cast<double>(pos)});
    c.thresholds.push_back(s);
  }
  return c;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

OvrAuc macro_auc_ovr(const Tensor& probabilities, std::span<const std::uint32_t> labels,
                     std::span<const std::string> class_names) {
  require(probabilities.rank() == 2, ErrorCode::Dimension, "macro_auc_ovr expects [n, C]");
  const std::size_t n = probabilities.extent(0), c = probabilities.extent(1);
  require(c >= 2, ErrorCode::Argument, "macro_auc_ovr needs at least 2 classes");
  require(labels.size() == n, ErrorCode::Argument, "macro_auc_ovr: label count differs from rows");
  OvrAuc out;
  std::vector<double> col(n);
  std::vector<std::uint8_t> bin(n);
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t present = 0;
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = probabilities[i * c + k];
      bin[i] = labels[i] == k ? 1 : 0;
      present += bin[i];
    }
    const std::string name = k < class_names.size() ? class_names[k] : std::to_string(k);
    if (present == 0 || present == n)
      fail(ErrorCode::UndefinedCurve, "class '" + name + "' has no " + (present == 0 ? "positive" : "negative") +
                                          " samples for one-vs-rest AUC");
    out.per_class.push_back(auc(roc_curve(col, bin)));
  }
  double s = 0.0;
  for (double v : out.per_class) s += v;
  out.macro = s / static_cast<double>(c);
  return out;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (auto v : m) t += v;
  return t;
}

ConfusionMatrix confusion_matrix(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth,
                                 std::size_t classes) {
  require(predicted.size() == truth.size(), ErrorCode::Argument, "confusion_matrix: length mismatch");
  require(classes >= 1, ErrorCode::Argument, "confusion_matrix: need at least one class");
  ConfusionMatrix cm{classes, std::vector<std::size_t>(classes * classes, 0)};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(truth[i] < classes && predicted[i] < classes, ErrorCode::Argument,
            "confusion_matrix: label out of range at sample " + std::to_string(i));
    ++cm.m[truth[i] * classes + predicted[i]];
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) return 0.0;
  std::size_t diag = 0;
  for (std::size_t k = 0; k < cm.classes; ++k) diag += cm(k, k);
  return static_cast<double>(diag) / static_cast<double>(total);
}

std::optional<std::size_t> overfit_epoch(const TrainHistory& history, std::size_t patience) {
  const auto& v = history.val_loss;
  if (v.empty()) return std::nullopt;
  const auto best = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  if (v.size() - best - 1 < patience) return std::nullopt;
  for (std::size_t k = best + 1; k <= best + patience; ++k)
    if (!(v[k] > v[best])) return std::nullopt;
  return best;
}

}  // namespace glyphlab
