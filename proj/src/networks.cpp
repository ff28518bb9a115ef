#include "psim/networks.hpp"

#include <string>

namespace psim::nn {

namespace {

constexpr ConvGeometry kDown{2, 1};
constexpr ConvGeometry kSame{1, 1};
constexpr double kSlope = 0.2;

Eigen::Index level_channels(int base, int level) { return static_cast<Eigen::Index>(base) << (level - 1); }

}  // namespace

void GeneratorSpec::validate() const {
  if (depth < 1) throw ConfigError("generator depth must be >= 1");
  if (base_channels < 1) throw ConfigError("generator base_channels must be >= 1");
  if (in_channels < 1 || out_channels < 1) throw ConfigError("generator channel counts must be >= 1");
}

Generator::Generator(const GeneratorSpec& spec) : spec_(spec) {
  spec_.validate();
  const int d = spec_.depth, b = spec_.base_channels;
  for (int i = 1; i <= d; ++i) {
    const Eigen::Index in = i == 1 ? spec_.in_channels : level_channels(b, i - 1);
    const Eigen::Index out = level_channels(b, i);
    down_conv_.emplace_back("g.down" + std::to_string(i) + ".conv", in, out, 4, kDown, false);
    down_norm_.emplace_back("g.down" + std::to_string(i) + ".norm", out);
  }
  for (int j = d; j >= 1; --j) {
    Eigen::Index in;
    if (j == d) {
      in = level_channels(b, d);
    } else {
      in = spec_.skip ? 2 * level_channels(b, j) : level_channels(b, j);
    }
    const Eigen::Index out = j >= 2 ? level_channels(b, j - 1) : b;
    up_conv_.emplace_back("g.up" + std::to_string(j) + ".deconv", in, out, 4, kDown, false);
    up_norm_.emplace_back("g.up" + std::to_string(j) + ".norm", out);
  }
  const Eigen::Index head_in = spec_.skip ? b + spec_.in_channels : b;
  head_ = Conv2d("g.head", head_in, spec_.out_channels, 3, kSame, true);
}

void Generator::check_input(const Tensor& x) const {
  x.require_rank4("generator input");
  if (x.c() != spec_.in_channels) {
    throw ShapeError("generator: expected " + std::to_string(spec_.in_channels) + " input channels, got " +
                     std::to_string(x.c()));
  }
  const Eigen::Index factor = Eigen::Index{1} << spec_.depth;
  if (x.h() % factor != 0 || x.w() % factor != 0 || x.h() / factor * (x.w() / factor) < 2) {
    throw ShapeError("generator: input " + std::to_string(x.w()) + "x" + std::to_string(x.h()) +
                     " must be divisible by 2^depth = " + std::to_string(factor) +
                     " and leave at least 2 pixels at the bottleneck");
  }
}

Tensor Generator::forward(const Tensor& x) {
  check_input(x);
  const int d = spec_.depth;
  down_pre_.assign(static_cast<std::size_t>(d), Tensor());
  up_pre_.assign(static_cast<std::size_t>(d), Tensor());
  skip_channels_.assign(static_cast<std::size_t>(d), 0);

  int layer = 0;
  std::vector<Tensor> encoded;  // encoded[i] is the activation at level i (0 = input)
  encoded.push_back(x);
  for (int i = 0; i < d; ++i) {
    Tensor t = down_conv_[i].forward(encoded.back());
    require_finite(t, layer++, down_conv_[i].name);
    down_pre_[i] = down_norm_[i].forward(t);
    require_finite(down_pre_[i], layer++, down_norm_[i].name);
    encoded.push_back(leaky_relu(down_pre_[i], kSlope));
  }
  Tensor u = encoded.back();
  for (int k = 0; k < d; ++k) {
    const int level = d - k;  // 1-based level being decoded
    Tensor t = up_conv_[k].forward(u);
    require_finite(t, layer++, up_conv_[k].name);
    up_pre_[k] = up_norm_[k].forward(t);
    require_finite(up_pre_[k], layer++, up_norm_[k].name);
    Tensor a = relu(up_pre_[k]);
    if (spec_.skip) {
      skip_channels_[k] = a.c();
      u = concat_channels(a, encoded[level - 1]);
    } else {
      u = std::move(a);
    }
  }
  Tensor head = head_.forward(u);
  require_finite(head, layer++, head_.name);
  output_ = tanh(head);
  return output_;
}

Tensor Generator::backward(const Tensor& grad_out) {
  const int d = spec_.depth;
  Tensor g = head_.backward(tanh_backward(output_, grad_out));
  // Gradients reaching each encoder activation through skip connections.
  std::vector<Tensor> skip_grad(static_cast<std::size_t>(d + 1));
  for (int k = d - 1; k >= 0; --k) {
    const int level = d - k;
    Tensor ga;
    if (spec_.skip) {
      auto [from_up, from_skip] = split_channels(g, skip_channels_[k]);
      skip_grad[level - 1] = std::move(from_skip);
      ga = std::move(from_up);
    } else {
      ga = std::move(g);
    }
    g = up_conv_[k].backward(up_norm_[k].backward(relu_backward(up_pre_[k], ga)));
  }
  // g now holds the gradient at the bottleneck activation (level d).
  for (int i = d - 1; i >= 0; --i) {
    // level i + 1 activation gradient = from the level above + from its skip.
    if (i + 1 < d && spec_.skip) g += skip_grad[i + 1];
    g = down_conv_[i].backward(down_norm_[i].backward(leaky_relu_backward(down_pre_[i], g, kSlope)));
  }
  if (spec_.skip) g += skip_grad[0];
  return g;
}

std::vector<Param*> Generator::parameters() {
  std::vector<Param*> out;
  for (std::size_t i = 0; i < down_conv_.size(); ++i) {
    down_conv_[i].parameters(out);
    down_norm_[i].parameters(out);
  }
  for (std::size_t k = 0; k < up_conv_.size(); ++k) {
    up_conv_[k].parameters(out);
    up_norm_[k].parameters(out);
  }
  head_.parameters(out);
  return out;
}

std::vector<LayerInfo> Generator::layers() const {
  std::vector<LayerInfo> out;
  for (std::size_t i = 0; i < down_conv_.size(); ++i) {
    out.push_back(down_conv_[i].info());
    out.push_back(down_norm_[i].info());
    out.push_back({"g.down" + std::to_string(i + 1) + ".act", LayerKind::leaky_relu, {}});
  }
  for (std::size_t k = 0; k < up_conv_.size(); ++k) {
    const std::string prefix = "g.up" + std::to_string(up_conv_.size() - k);
    out.push_back(up_conv_[k].info());
    out.push_back(up_norm_[k].info());
    out.push_back({prefix + ".act", LayerKind::relu, {}});
    if (spec_.skip) out.push_back({prefix + ".skip", LayerKind::concat_skip, {}});
  }
  out.push_back(head_.info());
  out.push_back({"g.head.act", LayerKind::tanh, {}});
  return out;
}

void Generator::init_normal(Rng& rng, double sigma) {
  for (auto& c : down_conv_) c.init_normal(rng, sigma);
  for (auto& c : up_conv_) c.init_normal(rng, sigma);
  head_.init_normal(rng, sigma);
}

void Generator::zero_grad() {
  for (Param* p : parameters()) p->zero_grad();
}

void DiscriminatorSpec::validate() const {
  if (layers < 1) throw ConfigError("discriminator layers must be >= 1");
  if (base_channels < 1) throw ConfigError("discriminator base_channels must be >= 1");
  if (in_channels < 2) throw ConfigError("discriminator needs condition and candidate channels");
}

Discriminator::Discriminator(const DiscriminatorSpec& spec) : spec_(spec) {
  spec_.validate();
  for (int i = 1; i <= spec_.layers; ++i) {
    const Eigen::Index in = i == 1 ? spec_.in_channels : level_channels(spec_.base_channels, i - 1);
    const Eigen::Index out = level_channels(spec_.base_channels, i);
    conv_.emplace_back("d.block" + std::to_string(i) + ".conv", in, out, 4, kDown, i == 1);
    if (i >= 2) norm_.emplace_back("d.block" + std::to_string(i) + ".norm", out);
  }
  head_ = Conv2d("d.head", level_channels(spec_.base_channels, spec_.layers), 1, 3, kSame, true);
}

Tensor Discriminator::forward(const Tensor& condition, const Tensor& candidate) {
  condition.require_rank4("discriminator condition");
  candidate.require_rank4("discriminator candidate");
  if (condition.h() != candidate.h() || condition.w() != candidate.w() || condition.n() != candidate.n()) {
    throw ShapeError("discriminator: condition " + psim::to_string(condition.shape()) + " and candidate " +
                     psim::to_string(candidate.shape()) + " differ");
  }
  if (condition.c() + candidate.c() != spec_.in_channels) {
    throw ShapeError("discriminator: expected " + std::to_string(spec_.in_channels) + " channels in total");
  }
  condition_channels_ = condition.c();
  pre_.assign(conv_.size(), Tensor());
  int layer = 0;
  Tensor t = concat_channels(condition, candidate);
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    t = conv_[i].forward(t);
    require_finite(t, layer++, conv_[i].name);
    if (i >= 1) {
      t = norm_[i - 1].forward(t);
      require_finite(t, layer++, norm_[i - 1].name);
    }
    pre_[i] = t;
    t = leaky_relu(t, kSlope);
  }
  Tensor logits = head_.forward(t);
  require_finite(logits, layer, head_.name);
  return logits;
}

Tensor Discriminator::backward(const Tensor& grad_logits) {
  Tensor g = head_.backward(grad_logits);
  for (std::size_t i = conv_.size(); i-- > 0;) {
    g = leaky_relu_backward(pre_[i], g, kSlope);
    if (i >= 1) g = norm_[i - 1].backward(g);
    g = conv_[i].backward(g);
  }
  return split_channels(g, condition_channels_).second;
}

std::vector<Param*> Discriminator::parameters() {
  std::vector<Param*> out;
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    conv_[i].parameters(out);
    if (i >= 1) norm_[i - 1].parameters(out);
  }
  head_.parameters(out);
  return out;
}

std::vector<LayerInfo> Discriminator::layers() const {
  std::vector<LayerInfo> out;
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    out.push_back(conv_[i].info());
    if (i >= 1) out.push_back(norm_[i - 1].info());
    out.push_back({"d.block" + std::to_string(i + 1) + ".act", LayerKind::leaky_relu, {}});
  }
  out.push_back(head_.info());
  return out;
}

void Discriminator::init_normal(Rng& rng, double sigma) {
  for (auto& c : conv_) c.init_normal(rng, sigma);
  head_.init_normal(rng, sigma);
}

void Discriminator::zero_grad() {
  for (Param* p : parameters()) p->zero_grad();
}

}  // namespace psim::nn
