#pragma once

#include <string>
#include <utility>
#include <vector>

#include "psim/rng.hpp"
#include "psim/tensor.hpp"

namespace psim::nn {

/// Zero padding throughout.
struct ConvGeometry {
  int stride = 1;
  int padding = 0;
};

Eigen::Index conv_output_size(Eigen::Index in, Eigen::Index kernel, ConvGeometry g);
Eigen::Index conv_transpose_output_size(Eigen::Index in, Eigen::Index kernel, ConvGeometry g);

struct ConvGrads {
  Tensor input;
  Tensor weight;
  Tensor bias;  // empty when the layer has no bias
};

/// Cross-correlation. weight is (out, in, K, K), bias (out) or nullptr.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias, ConvGeometry g);
ConvGrads conv2d_backward(const Tensor& input, const Tensor& weight, bool has_bias, const Tensor& grad_out,
                          ConvGeometry g);

/// Adjoint of conv2d in its input. weight is (in, out, K, K).
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor* bias, ConvGeometry g);
ConvGrads conv_transpose2d_backward(const Tensor& input, const Tensor& weight, bool has_bias,
                                    const Tensor& grad_out, ConvGeometry g);

Tensor leaky_relu(const Tensor& x, double alpha = 0.2);
Tensor leaky_relu_backward(const Tensor& x, const Tensor& grad_out, double alpha = 0.2);
Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);
Tensor tanh(const Tensor& x);
/// Takes the forward output y; dy/dx = 1 - y^2.
Tensor tanh_backward(const Tensor& y, const Tensor& grad_out);
Tensor sigmoid(const Tensor& x);
/// Takes the forward output s; ds/dx = s (1 - s).
Tensor sigmoid_backward(const Tensor& s, const Tensor& grad_out);

inline constexpr double kInstanceNormEps = 1e-5;

struct NormCache {
  Tensor normalized;  // x-hat
  Eigen::ArrayXd inv_std;  // one per (sample, channel)
};

struct NormGrads {
  Tensor input;
  Tensor gamma;
  Tensor beta;
};

/// Per-(sample, channel) standardisation followed by gamma * x-hat + beta.
Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, NormCache* cache = nullptr,
                     double eps = kInstanceNormEps);
NormGrads instance_norm_backward(const Tensor& grad_out, const Tensor& gamma, const NormCache& cache);

Tensor concat_channels(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> split_channels(const Tensor& t, Eigen::Index channels_first);

/// Mean binary cross-entropy on logits against a constant label, in the
/// stable form max(z, 0) - z y + log(1 + exp(-|z|)).
double bce_with_logits(const Tensor& logits, double label, Tensor* grad = nullptr);
/// mean |a - b|; the subgradient at a == b is 0.
double l1_loss(const Tensor& a, const Tensor& b, Tensor* grad_a = nullptr);
/// mean (a - b)^2
double l2_loss(const Tensor& a, const Tensor& b, Tensor* grad_a = nullptr);

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(shape) {}
  void zero_grad() { grad.fill(0.0); }
};

enum class LayerKind { conv, conv_transpose, instance_norm, leaky_relu, relu, tanh, sigmoid, concat_skip };
const char* to_string(LayerKind kind);

/// Layer description used in checkpoint headers.
struct LayerInfo {
  std::string name;
  LayerKind kind;
  std::vector<const Param*> params;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, Eigen::Index in_channels, Eigen::Index out_channels, int kernel, ConvGeometry g,
         bool bias);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void parameters(std::vector<Param*>& out);
  LayerInfo info() const;
  /// Weights N(0, sigma); bias zero.
  void init_normal(Rng& rng, double sigma);

  Param weight;
  Param bias;
  bool has_bias = false;
  ConvGeometry geometry;
  std::string name;

 private:
  Tensor input_;
};

class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(std::string name, Eigen::Index in_channels, Eigen::Index out_channels, int kernel,
                  ConvGeometry g, bool bias);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void parameters(std::vector<Param*>& out);
  LayerInfo info() const;
  void init_normal(Rng& rng, double sigma);

  Param weight;
  Param bias;
  bool has_bias = false;
  ConvGeometry geometry;
  std::string name;

 private:
  Tensor input_;
};

class InstanceNorm2d {
 public:
  InstanceNorm2d() = default;
  InstanceNorm2d(std::string name, Eigen::Index channels);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void parameters(std::vector<Param*>& out);
  LayerInfo info() const;

  Param gamma;  // initialised to 1
  Param beta;   // initialised to 0
  std::string name;

 private:
  NormCache cache_;
};

}  // namespace psim::nn
