#include "glyphlab/layers.hpp"

#include <algorithm>
#include <cmath>

#include "glyphlab/error.hpp"

namespace glyphlab {

Conv2d make_conv2d(std::size_t in_ch, std::size_t out_ch) {
  return Conv2d{in_ch, out_ch, Tensor({out_ch, in_ch, 3, 3}), Tensor({out_ch})};
}

Dense make_dense(std::size_t in, std::size_t out) { return Dense{in, out, Tensor({out, in}), Tensor({out})}; }

namespace {

void check_conv_input(const Tensor& x, const Conv2d& layer) {
  require(x.rank() == 3, ErrorCode::Dimension, "conv2d expects [c, h, w], got " + shape_string(x.shape()));
  require(x.extent(0) == layer.in_ch, ErrorCode::Dimension,
          "conv2d channel mismatch: input has " + std::to_string(x.extent(0)) + ", layer expects " +
              std::to_string(layer.in_ch));
  require(layer.weight.shape() == Shape{layer.out_ch, layer.in_ch, 3, 3} && layer.bias.shape() == Shape{layer.out_ch},
          ErrorCode::Dimension, "conv2d parameter shapes are inconsistent");
}

// Copies [c, h, w] into [c, h + 2, w + 2] with a zero border.
std::vector<double> pad_planes(const double* src, std::size_t c, std::size_t h, std::size_t w) {
  const std::size_t pw = w + 2;
  std::vector<double> out(c * (h + 2) * pw, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h; ++i)
      std::copy_n(src + (ch * h + i) * w, w, out.data() + (ch * (h + 2) + i + 1) * pw + 1);
  return out;
}

}  // namespace

// Every output accumulates bias, then taps in (c, di, dj) order. Border taps
// read the zero padding, which adds exact zeros.
Tensor conv2d_forward(const Tensor& x, const Conv2d& layer) {
  check_conv_input(x, layer);
  const std::size_t cin = layer.in_ch, cout = layer.out_ch, h = x.extent(1), w = x.extent(2);
  const std::size_t pw = w + 2, plane = (h + 2) * pw;
  const std::vector<double> xp = pad_planes(x.data().data(), cin, h, w);
  Tensor out({cout, h, w});
  const double* wt = layer.weight.data().data();
  double* po = out.data().data();
  for (std::size_t o = 0; o < cout; ++o) {
    double* oplane = po + o * h * w;
    std::fill(oplane, oplane + h * w, layer.bias[o]);
    for (std::size_t c = 0; c < cin; ++c) {
      const double* k = wt + (o * cin + c) * 9;
      const double* xc = xp.data() + c * plane;
      for (std::size_t i = 0; i < h; ++i) {
        double* orow = oplane + i * w;
        const double* r0 = xc + i * pw;
        const double* r1 = r0 + pw;
        const double* r2 = r1 + pw;
        for (std::size_t j = 0; j < w; ++j) {
          double v = orow[j];
          v += k[0] * r0[j];
          v += k[1] * r0[j + 1];
          v += k[2] * r0[j + 2];
          v += k[3] * r1[j];
          v += k[4] * r1[j + 1];
          v += k[5] * r1[j + 2];
          v += k[6] * r2[j];
          v += k[7] * r2[j + 1];
          v += k[8] * r2[j + 2];
          orow[j] = v;
        }
      }
    }
  }
  return out;
}

void conv2d_backward_into(const Tensor& x, const Conv2d& layer, const Tensor& grad_out, Tensor* grad_x,
                          Tensor& grad_w, Tensor& grad_b) {
  check_conv_input(x, layer);
  const std::size_t cin = layer.in_ch, cout = layer.out_ch, h = x.extent(1), w = x.extent(2);
  require(grad_out.shape() == Shape{cout, h, w}, ErrorCode::Dimension,
          "conv2d grad_out shape " + shape_string(grad_out.shape()) + " does not match output");
  require(grad_w.shape() == layer.weight.shape() && grad_b.shape() == layer.bias.shape(), ErrorCode::Dimension,
          "conv2d gradient buffers have the wrong shape");
  const std::size_t pw = w + 2, plane = (h + 2) * pw;
  const std::vector<double> xp = pad_planes(x.data().data(), cin, h, w);
  const std::vector<double> gp = pad_planes(grad_out.data().data(), cout, h, w);
  const double* wt = layer.weight.data().data();
  const double* pg = grad_out.data().data();
  double* pgw = grad_w.data().data();

  for (std::size_t o = 0; o < cout; ++o) {
    const double* gplane = pg + o * h * w;
    double sb = 0.0;
    for (std::size_t k = 0; k < h * w; ++k) sb += gplane[k];
    grad_b[o] += sb;

    // Nine independent accumulators, each summed in ascending (i, j).
    for (std::size_t c = 0; c < cin; ++c) {
      const double* xc = xp.data() + c * plane;
      double a[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
      for (std::size_t i = 0; i < h; ++i) {
        const double* grow = gplane + i * w;
        const double* r0 = xc + i * pw;
        const double* r1 = r0 + pw;
        const double* r2 = r1 + pw;
        for (std::size_t j = 0; j < w; ++j) {
          const double g = grow[j];
          a[0] += g * r0[j];
          a[1] += g * r0[j + 1];
          a[2] += g * r0[j + 2];
          a[3] += g * r1[j];
          a[4] += g * r1[j + 1];
          a[5] += g * r1[j + 2];
          a[6] += g * r2[j];
          a[7] += g * r2[j + 1];
          a[8] += g * r2[j + 2];
        }
      }
      double* gw = pgw + (o * cin + c) * 9;
      for (int t = 0; t < 9; ++t) gw[t] += a[t];
    }
  }

  if (!grad_x) return;
  // grad_x[c, y, x] = sum over (o, di, dj) of w[o, c, di, dj] * grad_out[o, y + 1 - di, x + 1 - dj].
  *grad_x = Tensor(x.shape());
  double* pgx = grad_x->data().data();
  for (std::size_t c = 0; c < cin; ++c) {
    double* gxplane = pgx + c * h * w;
    for (std::size_t o = 0; o < cout; ++o) {
      const double* k = wt + (o * cin + c) * 9;
      const double* gc = gp.data() + o * plane;
      for (std::size_t y = 0; y < h; ++y) {
        double* gxrow = gxplane + y * w;
        const double* r2 = gc + y * pw;  // grad_out row y - 1
        const double* r1 = r2 + pw;      // row y
        const double* r0 = r1 + pw;      // row y + 1
        for (std::size_t j = 0; j < w; ++j) {
          double v = gxrow[j];
          v += k[0] * r0[j + 2];
          v += k[1] * r0[j + 1];
          v += k[2] * r0[j];
          v += k[3] * r1[j + 2];
          v += k[4] * r1[j + 1];
          v += k[5] * r1[j];
          v += k[6] * r2[j + 2];
          v += k[7] * r2[j + 1];
          v += k[8] * r2[j];
          gxrow[j] = v;
        }
      }
    }
  }
}

ConvGrads conv2d_backward(const Tensor& x, const Conv2d& layer, const Tensor& grad_out) {
  ConvGrads g{Tensor(x.shape()), Tensor(layer.weight.shape()), Tensor(layer.bias.shape())};
  conv2d_backward_into(x, layer, grad_out, &g.grad_x, g.grad_w, g.grad_b);
  return g;
}

PoolResult maxpool2x2_forward(const Tensor& x) {
  require(x.rank() == 3, ErrorCode::Dimension, "maxpool expects [c, h, w]");
  const std::size_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
  require(h % 2 == 0 && w % 2 == 0, ErrorCode::Dimension,
          "maxpool needs even extents, got " + shape_string(x.shape()));
  const std::size_t oh = h / 2, ow = w / 2;
  PoolResult r{Tensor({c, oh, ow}), std::vector<std::uint32_t>(c * oh * ow), x.shape()};
  const double* px = x.data().data();
  std::size_t k = 0;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j, ++k) {
        const std::size_t base = (ch * h + 2 * i) * w + 2 * j;
        const std::size_t cand[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = cand[0];
        for (int t = 1; t < 4; ++t)
          if (px[cand[t]] > px[best]) best = cand[t];
        r.pooled[k] = px[best];
        r.argmax[k] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

Tensor maxpool2x2_backward(const PoolResult& mask, const Tensor& grad_out) {
  require(grad_out.shape() == mask.pooled.shape(), ErrorCode::Dimension, "maxpool grad_out shape mismatch");
  Tensor gx(mask.input_shape);
  for (std::size_t k = 0; k < grad_out.size(); ++k) gx[mask.argmax[k]] += grad_out[k];
  return gx;
}

namespace {

void check_dense(const Tensor& x, const Dense& layer) {
  require(x.size() == layer.in, ErrorCode::Dimension,
          "dense expects " + std::to_string(layer.in) + " inputs, got " + std::to_string(x.size()));
  require(layer.weight.shape() == Shape{layer.out, layer.in} && layer.bias.shape() == Shape{layer.out},
          ErrorCode::Dimension, "dense parameter shapes are inconsistent");
}

}  // namespace

Tensor dense_forward(const Tensor& x, const Dense& layer) {
  check_dense(x, layer);
  Tensor y({layer.out});
  const double* px = x.data().data();
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double* row = layer.weight.data().data() + o * layer.in;
    double s = 0.0;
    for (std::size_t i = 0; i < layer.in; ++i) s += row[i] * px[i];
    y[o] = s + layer.bias[o];
  }
  return y;
}

void dense_backward_into(const Tensor& x, const Dense& layer, const Tensor& grad_out, Tensor* grad_x,
                         Tensor& grad_w, Tensor& grad_b) {
  check_dense(x, layer);
  require(grad_out.size() == layer.out, ErrorCode::Dimension, "dense grad_out size mismatch");
  require(grad_w.shape() == layer.weight.shape() && grad_b.shape() == layer.bias.shape(), ErrorCode::Dimension,
          "dense gradient buffers have the wrong shape");
  const double* px = x.data().data();
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double g = grad_out[o];
    double* gw = grad_w.data().data() + o * layer.in;
    for (std::size_t i = 0; i < layer.in; ++i) gw[i] += g * px[i];
    grad_b[o] += g;
  }
  if (grad_x) {
    *grad_x = Tensor(x.shape());
    double* gx = grad_x->data().data();
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double g = grad_out[o];
      const double* row = layer.weight.data().data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) gx[i] += row[i] * g;
    }
  }
}

DenseGrads dense_backward(const Tensor& x, const Dense& layer, const Tensor& grad_out) {
  DenseGrads g{Tensor(x.shape()), Tensor(layer.weight.shape()), Tensor(layer.bias.shape())};
  dense_backward_into(x, layer, grad_out, &g.grad_x, g.grad_w, g.grad_b);
  return g;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] > 0.0 ? x[k] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  require(x.shape() == grad_out.shape(), ErrorCode::Dimension, "relu grad_out shape mismatch");
  Tensor g(x.shape());
  for (std::size_t k = 0; k < x.size(); ++k) g[k] = x[k] > 0.0 ? grad_out[k] : 0.0;
  return g;
}

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Tensor sigmoid_forward(const Tensor& z) {
  Tensor y(z.shape());
  for (std::size_t k = 0; k < z.size(); ++k) y[k] = sigmoid(z[k]);
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out) {
  require(y.shape() == grad_out.shape(), ErrorCode::Dimension, "sigmoid grad_out shape mismatch");
  Tensor g(y.shape());
  for (std::size_t k = 0; k < y.size(); ++k) g[k] = grad_out[k] * y[k] * (1.0 - y[k]);
  return g;
}

namespace {
constexpr double kProbFloor = 1e-12;
}

double bce_loss(double p, double y) noexcept {
  const double pc = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
  return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

double bce_grad(double p, double y) noexcept {
  if (p < kProbFloor || p > 1.0 - kProbFloor) return 0.0;
  return -y / p + (1.0 - y) / (1.0 - p);
}

Tensor softmax(const Tensor& z) {
  require(z.rank() == 1 && z.size() >= 1, ErrorCode::Dimension, "softmax expects a non-empty [C] vector");
  double mx = z[0];
  for (std::size_t k = 1; k < z.size(); ++k) mx = std::max(mx, z[k]);
  Tensor p(z.shape());
  double s = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    p[k] = std::exp(z[k] - mx);
    s += p[k];
  }
  for (std::size_t k = 0; k < z.size(); ++k) p[k] /= s;
  return p;
}

SoftmaxCe softmax_cross_entropy(const Tensor& z, std::size_t label) {
  require(label < z.size(), ErrorCode::Argument, "label out of range");
  double mx = z[0];
  for (std::size_t k = 1; k < z.size(); ++k) mx = std::max(mx, z[k]);
  double s = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) s += std::exp(z[k] - mx);
  SoftmaxCe out{std::log(s) - (z[label] - mx), softmax(z)};
  out.grad_z[label] -= 1.0;
  return out;
}

void rmsprop_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, RmspropState& state,
                  const RmspropConfig& cfg) {
  require(params.size() == grads.size(), ErrorCode::Dimension, "rmsprop: parameter/gradient count mismatch");
  require(cfg.learning_rate > 0 && cfg.rho > 0 && cfg.rho < 1, ErrorCode::Argument,
          "rmsprop: need lr > 0 and 0 < rho < 1");
  if (state.cache.empty()) {
    for (auto* p : params) state.cache.emplace_back(p->shape());
  }
  require(state.cache.size() == params.size(), ErrorCode::Dimension, "rmsprop: state does not match parameters");
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& p = *params[t];
    const Tensor& g = *grads[t];
    Tensor& cache = state.cache[t];
    require(p.shape() == g.shape() && p.shape() == cache.shape(), ErrorCode::Dimension,
            "rmsprop: shape mismatch at parameter " + std::to_string(t));
    for (std::size_t k = 0; k < p.size(); ++k) {
      cache[k] = cfg.rho * cache[k] + (1.0 - cfg.rho) * g[k] * g[k];
      p[k] -= cfg.learning_rate * g[k] / (std::sqrt(cache[k]) + cfg.eps);
    }
  }
}

}  // namespace glyphlab
