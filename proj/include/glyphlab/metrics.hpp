#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glyphlab/models.hpp"
#include "glyphlab/tensor.hpp"

namespace glyphlab {

struct RocPoint {
  double fpr;
  double tpr;
};

/// Starts at (0,0) and ends at (1,1). thresholds[k] is the score admitted at
/// point k (+inf for the origin).
struct RocCurve {
  std::vector<RocPoint> points;
  std::vector<double> thresholds;
};

/// One point per distinct score, so tied scores form diagonal segments.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);
/// Trapezoidal area.
double auc(const RocCurve& curve);

struct OvrAuc {
  std::vector<double> per_class;
  double macro = 0.0;
};

/// One-vs-rest AUC per column of [n, C] probabilities, unweighted mean.
OvrAuc macro_auc_ovr(const Tensor& probabilities, std::span<const std::uint32_t> labels,
                     std::span<const std::string> class_names = {});

struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> m;  // rows = true, columns = predicted

  std::size_t operator()(std::size_t t, std::size_t p) const { return m[t * classes + p]; }
  std::size_t total() const;
};

ConfusionMatrix confusion_matrix(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth,
                                 std::size_t classes);
double accuracy(const ConfusionMatrix& cm);

/// Epoch of minimum validation loss, if the next `patience` epochs all stay
/// above it.
std::optional<std::size_t> overfit_epoch(const TrainHistory& history, std::size_t patience = 3);

}  // namespace glyphlab
