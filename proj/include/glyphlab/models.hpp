#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "glyphlab/augment.hpp"
#include "glyphlab/dataset.hpp"
#include "glyphlab/layers.hpp"
#include "glyphlab/tensor.hpp"

namespace glyphlab {

struct MlrModel {
  Tensor w;  // [C, D]
  Tensor b;  // [C]
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return w.extent(0); }
  std::size_t num_features() const { return w.extent(1); }
};

struct CnnModel {
  std::vector<Layer> layers;
  Shape input_shape;  // [1, side, side]
  std::vector<std::string> class_names;
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;  // 0 means full batch
  double learning_rate = 1e-4;
  double rmsprop_rho = 0.9;
  double rmsprop_eps = 1e-8;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  AugmentPolicy augment;

  static TrainConfig cnn_defaults();
  static TrainConfig mlr_defaults();
  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> train_acc;
  std::vector<double> val_loss;
  std::vector<double> val_acc;

  std::size_t epochs() const noexcept { return val_loss.size(); }
};

// Multinomial logistic regression.

MlrModel mlr_init(std::size_t classes, std::size_t features);

struct MlrLossGrad {
  double loss;  // mean cross-entropy + (l2 / 2) |W|^2
  Tensor grad_w;
  Tensor grad_b;
};

/// x is [n, ...] flattened per row to the model's feature count.
MlrLossGrad mlr_loss_and_grad(const MlrModel& model, const Tensor& x, std::span<const std::uint32_t> labels,
                              double l2);

struct MlrResult {
  MlrModel model;
  TrainHistory history;
};

/// Full-batch gradient descent from a zero model.
MlrResult mlr_train(const LabeledDataset& train, const LabeledDataset& val, const TrainConfig& cfg);

/// [n, C] class probabilities.
Tensor predict_proba(const MlrModel& model, const Tensor& images);

// Binary convolutional network.

/// Five [conv3x3 -> relu -> maxpool] blocks (1-32-32-64-64-128 channels),
/// flatten, dense 128, relu, dense 1, sigmoid. Glorot weights, zero biases.
CnnModel reference_cnn(std::size_t side, std::uint64_t seed = 0);
std::size_t param_count(const CnnModel& model);

std::vector<Tensor*> parameters(CnnModel& model);
std::vector<const Tensor*> parameters(const CnnModel& model);

/// Activations kept for the backward pass of one sample.
struct CnnTrace {
  std::vector<Tensor> inputs;  // input of each layer
  std::vector<PoolResult> pools;
  double output = 0.0;
};

/// Probability for a single [1, side, side] sample.
double cnn_forward(const CnnModel& model, const Tensor& x, CnnTrace* trace = nullptr);
/// Accumulates d loss / d params into `grads` (aligned with parameters()).
void cnn_backward(const CnnModel& model, const CnnTrace& trace, double dloss_dp, std::span<Tensor> grads);

/// [n] probabilities of class index 1.
Tensor predict_proba(const CnnModel& model, const Tensor& images);

struct CnnResult {
  CnnModel model;  // parameters at the epoch of minimum validation loss
  TrainHistory history;
  std::optional<std::size_t> best_epoch;
};

CnnResult cnn_train(const LabeledDataset& train, const LabeledDataset& val, const TrainConfig& cfg);

/// Sample order used by training: by label, then by pixel content. Makes
/// training independent of row order in the input file.
std::vector<std::size_t> canonical_order(const LabeledDataset& ds);

// GMD1 model container.

using Model = std::variant<MlrModel, CnnModel>;

std::size_t write_gmd(const Model& model, std::ostream& out);
Model read_gmd(std::istream& in);
std::size_t write_gmd_file(const Model& model, const std::filesystem::path& path);
Model read_gmd_file(const std::filesystem::path& path);

}  // namespace glyphlab
