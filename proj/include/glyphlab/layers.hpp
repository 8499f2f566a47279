#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "glyphlab/tensor.hpp"

namespace glyphlab {

/// 3x3 cross-correlation with a one-pixel zero border ("same" padding).
struct Conv2d {
  std::size_t in_ch = 0;
  std::size_t out_ch = 0;
  Tensor weight;  // [out_ch, in_ch, 3, 3]
  Tensor bias;    // [out_ch]
};

struct MaxPool2x2 {};
struct Relu {};

/// Records the [c, h, w] shape it flattens so the input size is recoverable.
struct Flatten {
  Shape input;
};

struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]
};

struct Sigmoid {};

using Layer = std::variant<Conv2d, MaxPool2x2, Relu, Flatten, Dense, Sigmoid>;

Conv2d make_conv2d(std::size_t in_ch, std::size_t out_ch);
Dense make_dense(std::size_t in, std::size_t out);

Tensor conv2d_forward(const Tensor& x, const Conv2d& layer);

struct ConvGrads {
  Tensor grad_x;
  Tensor grad_w;
  Tensor grad_b;
};

ConvGrads conv2d_backward(const Tensor& x, const Conv2d& layer, const Tensor& grad_out);
/// Adds the weight/bias gradients into grad_w/grad_b; writes grad_x when non-null.
void conv2d_backward_into(const Tensor& x, const Conv2d& layer, const Tensor& grad_out, Tensor* grad_x,
                          Tensor& grad_w, Tensor& grad_b);

struct PoolResult {
  Tensor pooled;
  std::vector<std::uint32_t> argmax;  // flat input offset per pooled element
  Shape input_shape;
};

/// Non-overlapping 2x2 max; ties go to the first element in row-major order.
PoolResult maxpool2x2_forward(const Tensor& x);
Tensor maxpool2x2_backward(const PoolResult& mask, const Tensor& grad_out);

/// y = W x + b with x flattened to [in].
Tensor dense_forward(const Tensor& x, const Dense& layer);

struct DenseGrads {
  Tensor grad_x;
  Tensor grad_w;
  Tensor grad_b;
};

DenseGrads dense_backward(const Tensor& x, const Dense& layer, const Tensor& grad_out);
void dense_backward_into(const Tensor& x, const Dense& layer, const Tensor& grad_out, Tensor* grad_x,
                         Tensor& grad_w, Tensor& grad_b);

Tensor relu_forward(const Tensor& x);
/// Subgradient 0 at x == 0.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

double sigmoid(double z) noexcept;
Tensor sigmoid_forward(const Tensor& z);
/// Takes the forward output y.
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out);

/// Binary cross-entropy with p clamped to [1e-12, 1 - 1e-12].
double bce_loss(double p, double y) noexcept;
/// d bce / d p (zero where the clamp is active).
double bce_grad(double p, double y) noexcept;

/// Max-shifted softmax over a [C] vector.
Tensor softmax(const Tensor& z);

struct SoftmaxCe {
  double loss;
  Tensor grad_z;  // softmax(z) - onehot(label)
};

SoftmaxCe softmax_cross_entropy(const Tensor& z, std::size_t label);

struct RmspropConfig {
  double learning_rate = 1e-4;
  double rho = 0.9;
  double eps = 1e-8;
};

/// Per-parameter moving average of squared gradients.
struct RmspropState {
  std::vector<Tensor> cache;
};

/// cache <- rho cache + (1 - rho) g^2;  p <- p - lr g / (sqrt(cache) + eps).
void rmsprop_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, RmspropState& state,
                  const RmspropConfig& cfg);

}  // namespace glyphlab
