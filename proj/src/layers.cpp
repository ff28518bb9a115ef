#include "psim/layers.hpp"

#include <cmath>

namespace psim::nn {

namespace {

using RowMatrix = Tensor::RowMatrix;

struct Window {
  Eigen::Index channels, height, width, kernel;
  int stride, padding;
  Eigen::Index out_height, out_width;
};

// col is (channels * K * K, out_h * out_w); row = (c * K + ky) * K + kx.
void im2col(const double* x, const Window& w, RowMatrix& col) {
  col.resize(w.channels * w.kernel * w.kernel, w.out_height * w.out_width);
  for (Eigen::Index c = 0; c < w.channels; ++c) {
    for (Eigen::Index ky = 0; ky < w.kernel; ++ky) {
      for (Eigen::Index kx = 0; kx < w.kernel; ++kx) {
        double* row = col.row((c * w.kernel + ky) * w.kernel + kx).data();
        for (Eigen::Index oy = 0; oy < w.out_height; ++oy) {
          const Eigen::Index iy = oy * w.stride - w.padding + ky;
          double* dst = row + oy * w.out_width;
          if (iy < 0 || iy >= w.height) {
            std::fill(dst, dst + w.out_width, 0.0);
            continue;
          }
          const double* src = x + (c * w.height + iy) * w.width;
          for (Eigen::Index ox = 0; ox < w.out_width; ++ox) {
            const Eigen::Index ix = ox * w.stride - w.padding + kx;
            dst[ox] = (ix >= 0 && ix < w.width) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates col entries back onto the image grid.
void col2im(const RowMatrix& col, const Window& w, double* x) {
  for (Eigen::Index c = 0; c < w.channels; ++c) {
    for (Eigen::Index ky = 0; ky < w.kernel; ++ky) {
      for (Eigen::Index kx = 0; kx < w.kernel; ++kx) {
        const double* row = col.row((c * w.kernel + ky) * w.kernel + kx).data();
        for (Eigen::Index oy = 0; oy < w.out_height; ++oy) {
          const Eigen::Index iy = oy * w.stride - w.padding + ky;
          if (iy < 0 || iy >= w.height) continue;
          double* dst = x + (c * w.height + iy) * w.width;
          const double* src = row + oy * w.out_width;
          for (Eigen::Index ox = 0; ox < w.out_width; ++ox) {
            const Eigen::Index ix = ox * w.stride - w.padding + kx;
            if (ix >= 0 && ix < w.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void check_geometry(ConvGeometry g, const char* what) {
  if (g.stride < 1) throw ShapeError(std::string(what) + ": stride must be >= 1");
  if (g.padding < 0) throw ShapeError(std::string(what) + ": padding must be >= 0");
}

void check_weight(const Tensor& weight, const char* what) {
  weight.require_rank4(what);
  if (weight.dim(2) != weight.dim(3)) throw ShapeError(std::string(what) + ": kernel must be square");
}

void check_bias(const Tensor* bias, Eigen::Index channels, const char* what) {
  if (bias != nullptr && (bias->rank() != 1 || bias->dim(0) != channels)) {
    throw ShapeError(std::string(what) + ": bias shape " + psim::to_string(bias->shape()) + " does not match " +
                     std::to_string(channels) + " output channels");
  }
}

Eigen::Map<const RowMatrix> weight_matrix(const Tensor& weight) {
  return {weight.data(), weight.dim(0), weight.dim(1) * weight.dim(2) * weight.dim(3)};
}

Eigen::Map<RowMatrix> weight_matrix(Tensor& weight) {
  return {weight.data(), weight.dim(0), weight.dim(1) * weight.dim(2) * weight.dim(3)};
}

template <typename F>
Tensor map_unary(const Tensor& x, F f) {
  Tensor y(x.shape());
  y.array() = x.array().unaryExpr(f);
  return y;
}

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": " + psim::to_string(a.shape()) + " vs " + psim::to_string(b.shape()));
  }
}

}  // namespace

Eigen::Index conv_output_size(Eigen::Index in, Eigen::Index kernel, ConvGeometry g) {
  const Eigen::Index span = in + 2 * g.padding - kernel;
  if (span < 0) return 0;
  return span / g.stride + 1;
}

Eigen::Index conv_transpose_output_size(Eigen::Index in, Eigen::Index kernel, ConvGeometry g) {
  return (in - 1) * g.stride - 2 * g.padding + kernel;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias, ConvGeometry g) {
  input.require_rank4("conv2d input");
  check_weight(weight, "conv2d weight");
  check_geometry(g, "conv2d");
  if (weight.dim(1) != input.c()) {
    throw ShapeError("conv2d: weight expects " + std::to_string(weight.dim(1)) + " input channels, got " +
                     std::to_string(input.c()));
  }
  check_bias(bias, weight.dim(0), "conv2d");
  const Eigen::Index k = weight.dim(2);
  Window w{input.c(), input.h(), input.w(), k, g.stride, g.padding,
           conv_output_size(input.h(), k, g), conv_output_size(input.w(), k, g)};
  if (w.out_height < 1 || w.out_width < 1) throw ShapeError("conv2d: kernel larger than padded input");

  Tensor out({input.n(), weight.dim(0), w.out_height, w.out_width});
  const auto wm = weight_matrix(weight);
  RowMatrix col;
  for (Eigen::Index n = 0; n < input.n(); ++n) {
    im2col(input.sample_matrix(n).data(), w, col);
    auto y = out.sample_matrix(n);
    y.noalias() = wm * col;
    if (bias != nullptr) y.colwise() += Eigen::Map<const Eigen::VectorXd>(bias->data(), bias->size());
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weight, bool has_bias, const Tensor& grad_out,
                          ConvGeometry g) {
  input.require_rank4("conv2d_backward input");
  grad_out.require_rank4("conv2d_backward grad");
  const Eigen::Index k = weight.dim(2);
  Window w{input.c(), input.h(), input.w(), k, g.stride, g.padding,
           conv_output_size(input.h(), k, g), conv_output_size(input.w(), k, g)};
  if (grad_out.n() != input.n() || grad_out.c() != weight.dim(0) || grad_out.h() != w.out_height ||
      grad_out.w() != w.out_width) {
    throw ShapeError("conv2d_backward: gradient shape " + psim::to_string(grad_out.shape()) + " does not match output");
  }
  ConvGrads grads{Tensor(input.shape()), Tensor(weight.shape()), has_bias ? Tensor({weight.dim(0)}) : Tensor()};
  const auto wm = weight_matrix(weight);
  auto gw = weight_matrix(grads.weight);
  RowMatrix col, gcol;
  for (Eigen::Index n = 0; n < input.n(); ++n) {
    const auto gy = grad_out.sample_matrix(n);
    im2col(input.sample_matrix(n).data(), w, col);
    gw.noalias() += gy * col.transpose();
    if (has_bias) Eigen::Map<Eigen::VectorXd>(grads.bias.data(), grads.bias.size()) += gy.rowwise().sum();
    gcol.noalias() = wm.transpose() * gy;
    col2im(gcol, w, grads.input.sample_matrix(n).data());
  }
  return grads;
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor* bias, ConvGeometry g) {
  input.require_rank4("conv_transpose2d input");
  check_weight(weight, "conv_transpose2d weight");
  check_geometry(g, "conv_transpose2d");
  if (weight.dim(0) != input.c()) {
    throw ShapeError("conv_transpose2d: weight expects " + std::to_string(weight.dim(0)) +
                     " input channels, got " + std::to_string(input.c()));
  }
  check_bias(bias, weight.dim(1), "conv_transpose2d");
  const Eigen::Index k = weight.dim(2);
  const Eigen::Index out_h = conv_transpose_output_size(input.h(), k, g);
  const Eigen::Index out_w = conv_transpose_output_size(input.w(), k, g);
  if (out_h < 1 || out_w < 1) throw ShapeError("conv_transpose2d: empty output");
  // The forward pass is col2im of the transposed product, on the grid the
  // matching conv2d would have read from.
  Window w{weight.dim(1), out_h, out_w, k, g.stride, g.padding, input.h(), input.w()};
  if (conv_output_size(out_h, k, g) != input.h() || conv_output_size(out_w, k, g) != input.w()) {
    throw ShapeError("conv_transpose2d: inconsistent geometry");
  }
  Tensor out({input.n(), weight.dim(1), out_h, out_w});
  const auto wm = weight_matrix(weight);
  RowMatrix col;
  for (Eigen::Index n = 0; n < input.n(); ++n) {
    col.noalias() = wm.transpose() * input.sample_matrix(n);
    col2im(col, w, out.sample_matrix(n).data());
    if (bias != nullptr) {
      out.sample_matrix(n).colwise() += Eigen::Map<const Eigen::VectorXd>(bias->data(), bias->size());
    }
  }
  return out;
}

ConvGrads conv_transpose2d_backward(const Tensor& input, const Tensor& weight, bool has_bias,
                                    const Tensor& grad_out, ConvGeometry g) {
  input.require_rank4("conv_transpose2d_backward input");
  grad_out.require_rank4("conv_transpose2d_backward grad");
  const Eigen::Index k = weight.dim(2);
  const Eigen::Index out_h = conv_transpose_output_size(input.h(), k, g);
  const Eigen::Index out_w = conv_transpose_output_size(input.w(), k, g);
  if (grad_out.n() != input.n() || grad_out.c() != weight.dim(1) || grad_out.h() != out_h ||
      grad_out.w() != out_w) {
    throw ShapeError("conv_transpose2d_backward: gradient shape " + psim::to_string(grad_out.shape()) +
                     " does not match output");
  }
  Window w{weight.dim(1), out_h, out_w, k, g.stride, g.padding, input.h(), input.w()};
  ConvGrads grads{Tensor(input.shape()), Tensor(weight.shape()), has_bias ? Tensor({weight.dim(1)}) : Tensor()};
  const auto wm = weight_matrix(weight);
  auto gw = weight_matrix(grads.weight);
  RowMatrix gcol;
  for (Eigen::Index n = 0; n < input.n(); ++n) {
    im2col(grad_out.sample_matrix(n).data(), w, gcol);
    const auto x = input.sample_matrix(n);
    grads.input.sample_matrix(n).noalias() = wm * gcol;
    gw.noalias() += x * gcol.transpose();
    if (has_bias) {
      Eigen::Map<Eigen::VectorXd>(grads.bias.data(), grads.bias.size()) +=
          grad_out.sample_matrix(n).rowwise().sum();
    }
  }
  return grads;
}

Tensor leaky_relu(const Tensor& x, double alpha) {
  return map_unary(x, [alpha](double v) { return v > 0 ? v : alpha * v; });
}

Tensor leaky_relu_backward(const Tensor& x, const Tensor& grad_out, double alpha) {
  require_same(x, grad_out, "leaky_relu_backward");
  Tensor g(x.shape());
  g.array() = (x.array() > 0).select(grad_out.array(), alpha * grad_out.array());
  return g;
}

Tensor relu(const Tensor& x) {
  return map_unary(x, [](double v) { return v > 0 ? v : 0.0; });
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  require_same(x, grad_out, "relu_backward");
  Tensor g(x.shape());
  g.array() = (x.array() > 0).select(grad_out.array(), 0.0);
  return g;
}

Tensor tanh(const Tensor& x) {
  return map_unary(x, [](double v) { return std::tanh(v); });
}

Tensor tanh_backward(const Tensor& y, const Tensor& grad_out) {
  require_same(y, grad_out, "tanh_backward");
  Tensor g(y.shape());
  g.array() = grad_out.array() * (1.0 - y.array().square());
  return g;
}

Tensor sigmoid(const Tensor& x) {
  return map_unary(x, [](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Tensor sigmoid_backward(const Tensor& s, const Tensor& grad_out) {
  require_same(s, grad_out, "sigmoid_backward");
  Tensor g(s.shape());
  g.array() = grad_out.array() * s.array() * (1.0 - s.array());
  return g;
}

Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, NormCache* cache, double eps) {
  x.require_rank4("instance_norm");
  if (x.h() * x.w() < 2) throw ShapeError("instance_norm: spatial size must be >= 2, got 1x1");
  if (gamma.size() != x.c() || beta.size() != x.c()) throw ShapeError("instance_norm: affine size mismatch");
  const Eigen::Index plane = x.h() * x.w();
  Tensor y(x.shape());
  Tensor xhat(x.shape());
  Eigen::ArrayXd inv_std(x.n() * x.c());
  for (Eigen::Index n = 0; n < x.n(); ++n) {
    for (Eigen::Index c = 0; c < x.c(); ++c) {
      const Eigen::Index off = (n * x.c() + c) * plane;
      const auto v = x.array().segment(off, plane);
      const double mean = v.mean();
      const double var = (v - mean).square().mean();
      const double inv = 1.0 / std::sqrt(var + eps);
      xhat.array().segment(off, plane) = (v - mean) * inv;
      y.array().segment(off, plane) = gamma[c] * xhat.array().segment(off, plane) + beta[c];
      inv_std(n * x.c() + c) = inv;
    }
  }
  if (cache != nullptr) {
    cache->normalized = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

NormGrads instance_norm_backward(const Tensor& grad_out, const Tensor& gamma, const NormCache& cache) {
  const Tensor& xhat = cache.normalized;
  require_same(xhat, grad_out, "instance_norm_backward");
  const Eigen::Index plane = xhat.h() * xhat.w();
  NormGrads g{Tensor(xhat.shape()), Tensor({xhat.c()}), Tensor({xhat.c()})};
  for (Eigen::Index n = 0; n < xhat.n(); ++n) {
    for (Eigen::Index c = 0; c < xhat.c(); ++c) {
      const Eigen::Index off = (n * xhat.c() + c) * plane;
      const auto gy = grad_out.array().segment(off, plane);
      const auto xh = xhat.array().segment(off, plane);
      g.gamma[c] += (gy * xh).sum();
      g.beta[c] += gy.sum();
      const Eigen::ArrayXd gxh = gamma[c] * gy;
      g.input.array().segment(off, plane) =
          cache.inv_std(n * xhat.c() + c) * (gxh - gxh.mean() - xh * (gxh * xh).mean());
    }
  }
  return g;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  a.require_rank4("concat_channels");
  b.require_rank4("concat_channels");
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw ShapeError("concat_channels: " + psim::to_string(a.shape()) + " vs " + psim::to_string(b.shape()));
  }
  Tensor out({a.n(), a.c() + b.c(), a.h(), a.w()});
  const Eigen::Index sa = a.c() * a.h() * a.w(), sb = b.c() * b.h() * b.w();
  for (Eigen::Index n = 0; n < a.n(); ++n) {
    out.array().segment(n * (sa + sb), sa) = a.array().segment(n * sa, sa);
    out.array().segment(n * (sa + sb) + sa, sb) = b.array().segment(n * sb, sb);
  }
  return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& t, Eigen::Index channels_first) {
  t.require_rank4("split_channels");
  if (channels_first < 0 || channels_first > t.c()) throw ShapeError("split_channels: bad split point");
  Tensor a({t.n(), channels_first, t.h(), t.w()});
  Tensor b({t.n(), t.c() - channels_first, t.h(), t.w()});
  const Eigen::Index sa = a.c() * t.h() * t.w(), sb = b.c() * t.h() * t.w();
  for (Eigen::Index n = 0; n < t.n(); ++n) {
    a.array().segment(n * sa, sa) = t.array().segment(n * (sa + sb), sa);
    b.array().segment(n * sb, sb) = t.array().segment(n * (sa + sb) + sa, sb);
  }
  return {std::move(a), std::move(b)};
}

double bce_with_logits(const Tensor& logits, double label, Tensor* grad) {
  const auto& z = logits.array();
  const double n = static_cast<double>(z.size());
  const double loss =
      (z.max(0.0) - z * label + (-z.abs()).exp().log1p()).sum() / n;
  if (grad != nullptr) {
    *grad = sigmoid(logits);
    grad->array() = (grad->array() - label) / n;
  }
  return loss;
}

double l1_loss(const Tensor& a, const Tensor& b, Tensor* grad_a) {
  require_same(a, b, "l1_loss");
  const Eigen::ArrayXd d = a.array() - b.array();
  const double n = static_cast<double>(d.size());
  if (grad_a != nullptr) {
    *grad_a = Tensor(a.shape());
    grad_a->array() = d.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }) / n;
  }
  return d.abs().sum() / n;
}

double l2_loss(const Tensor& a, const Tensor& b, Tensor* grad_a) {
  require_same(a, b, "l2_loss");
  const Eigen::ArrayXd d = a.array() - b.array();
  const double n = static_cast<double>(d.size());
  if (grad_a != nullptr) {
    *grad_a = Tensor(a.shape());
    grad_a->array() = 2.0 * d / n;
  }
  return d.square().sum() / n;
}

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::conv_transpose: return "conv_transpose";
    case LayerKind::instance_norm: return "instance_norm";
    case LayerKind::leaky_relu: return "leaky_relu";
    case LayerKind::relu: return "relu";
    case LayerKind::tanh: return "tanh";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::concat_skip: return "concat_skip";
  }
  return "?";
}

Conv2d::Conv2d(std::string layer_name, Eigen::Index in_channels, Eigen::Index out_channels, int kernel,
               ConvGeometry g, bool bias)
    : weight(layer_name + ".weight", {out_channels, in_channels, kernel, kernel}),
      has_bias(bias),
      geometry(g),
      name(std::move(layer_name)) {
  if (has_bias) this->bias = Param(name + ".bias", {out_channels});
}

Tensor Conv2d::forward(const Tensor& x) {
  input_ = x;
  return conv2d(x, weight.value, has_bias ? &bias.value : nullptr, geometry);
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  ConvGrads g = conv2d_backward(input_, weight.value, has_bias, grad_out, geometry);
  weight.grad += g.weight;
  if (has_bias) bias.grad += g.bias;
  return std::move(g.input);
}

void Conv2d::parameters(std::vector<Param*>& out) {
  out.push_back(&weight);
  if (has_bias) out.push_back(&bias);
}

LayerInfo Conv2d::info() const {
  LayerInfo i{name, LayerKind::conv, {&weight}};
  if (has_bias) i.params.push_back(&bias);
  return i;
}

void Conv2d::init_normal(Rng& rng, double sigma) {
  for (Eigen::Index i = 0; i < weight.value.size(); ++i) weight.value[i] = rng.normal(0.0, sigma);
  if (has_bias) bias.value.fill(0.0);
}

ConvTranspose2d::ConvTranspose2d(std::string layer_name, Eigen::Index in_channels, Eigen::Index out_channels,
                                 int kernel, ConvGeometry g, bool bias)
    : weight(layer_name + ".weight", {in_channels, out_channels, kernel, kernel}),
      has_bias(bias),
      geometry(g),
      name(std::move(layer_name)) {
  if (has_bias) this->bias = Param(name + ".bias", {out_channels});
}

Tensor ConvTranspose2d::forward(const Tensor& x) {
  input_ = x;
  return conv_transpose2d(x, weight.value, has_bias ? &bias.value : nullptr, geometry);
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out) {
  ConvGrads g = conv_transpose2d_backward(input_, weight.value, has_bias, grad_out, geometry);
  weight.grad += g.weight;
  if (has_bias) bias.grad += g.bias;
  return std::move(g.input);
}

void ConvTranspose2d::parameters(std::vector<Param*>& out) {
  out.push_back(&weight);
  if (has_bias) out.push_back(&bias);
}

LayerInfo ConvTranspose2d::info() const {
  LayerInfo i{name, LayerKind::conv_transpose, {&weight}};
  if (has_bias) i.params.push_back(&bias);
  return i;
}

void ConvTranspose2d::init_normal(Rng& rng, double sigma) {
  for (Eigen::Index i = 0; i < weight.value.size(); ++i) weight.value[i] = rng.normal(0.0, sigma);
  if (has_bias) bias.value.fill(0.0);
}

InstanceNorm2d::InstanceNorm2d(std::string layer_name, Eigen::Index channels)
    : gamma(layer_name + ".gamma", {channels}), beta(layer_name + ".beta", {channels}), name(std::move(layer_name)) {
  gamma.value.fill(1.0);
}

Tensor InstanceNorm2d::forward(const Tensor& x) { return instance_norm(x, gamma.value, beta.value, &cache_); }

Tensor InstanceNorm2d::backward(const Tensor& grad_out) {
  NormGrads g = instance_norm_backward(grad_out, gamma.value, cache_);
  gamma.grad += g.gamma;
  beta.grad += g.beta;
  return std::move(g.input);
}

void InstanceNorm2d::parameters(std::vector<Param*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

LayerInfo InstanceNorm2d::info() const { return {name, LayerKind::instance_norm, {&gamma, &beta}}; }

}  // namespace psim::nn
