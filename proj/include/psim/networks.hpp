#pragma once

#include <vector>

#include "psim/layers.hpp"

namespace psim::nn {

struct GeneratorSpec {
  int in_channels = 1;
  int out_channels = 1;
  int depth = 4;
  int base_channels = 16;
  bool skip = true;

  void validate() const;
};

/// U-Net generator.
///
///   down i = 1..depth : conv 4x4 s2 p1 -> instance norm -> leaky relu(0.2)
///   up   j = depth..1 : conv-transpose 4x4 s2 p1 -> instance norm -> relu
///                       -> concat with the encoder activation at that scale
///   head              : conv 3x3 s1 p1 (+bias) -> tanh
///
/// Encoder level i has base * 2^(i-1) channels. Convolutions feeding an
/// instance norm carry no bias since the norm removes it.
class Generator {
 public:
  Generator() = default;
  explicit Generator(const GeneratorSpec& spec);

  const GeneratorSpec& spec() const { return spec_; }

  Tensor forward(const Tensor& x);
  /// Backpropagates d(loss)/d(output); accumulates parameter grads and
  /// returns d(loss)/d(input).
  Tensor backward(const Tensor& grad_out);

  std::vector<Param*> parameters();
  std::vector<LayerInfo> layers() const;
  void init_normal(Rng& rng, double sigma = 0.02);
  void zero_grad();
  /// Side length must be a multiple of 2^depth with at least 2x2 at the bottleneck.
  void check_input(const Tensor& x) const;

 private:
  GeneratorSpec spec_;
  std::vector<Conv2d> down_conv_;
  std::vector<InstanceNorm2d> down_norm_;
  std::vector<ConvTranspose2d> up_conv_;  // index 0 is the deepest level
  std::vector<InstanceNorm2d> up_norm_;
  Conv2d head_;

  // forward caches
  std::vector<Tensor> down_pre_;   // pre-activation after norm
  std::vector<Tensor> up_pre_;
  std::vector<Eigen::Index> skip_channels_;
  Tensor output_;
};

struct DiscriminatorSpec {
  int in_channels = 2;  // condition + candidate
  int layers = 3;
  int base_channels = 16;

  void validate() const;
};

/// Patch discriminator on the channel-concatenated (condition, candidate) pair.
///
///   block i = 1..layers : conv 4x4 s2 p1 -> [instance norm for i >= 2] -> leaky relu(0.2)
///   head                : conv 3x3 s1 p1 -> 1 channel of logits
class Discriminator {
 public:
  Discriminator() = default;
  explicit Discriminator(const DiscriminatorSpec& spec);

  const DiscriminatorSpec& spec() const { return spec_; }

  Tensor forward(const Tensor& condition, const Tensor& candidate);
  /// Returns d(loss)/d(candidate); parameter grads accumulate.
  Tensor backward(const Tensor& grad_logits);

  std::vector<Param*> parameters();
  std::vector<LayerInfo> layers() const;
  void init_normal(Rng& rng, double sigma = 0.02);
  void zero_grad();

 private:
  DiscriminatorSpec spec_;
  std::vector<Conv2d> conv_;
  std::vector<InstanceNorm2d> norm_;  // norm_[i - 1] belongs to block i (i >= 1)
  Conv2d head_;

  std::vector<Tensor> pre_;
  Eigen::Index condition_channels_ = 0;
};

}  // namespace psim::nn
