#include "psim/gan.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "psim/checkpoint.hpp"
#include "psim/io.hpp"
#include "psim/serialize.hpp"

namespace psim {

void GanSpec::validate() const {
  generator.validate();
  discriminator.validate();
  if (lambda_l1 < 0) throw ConfigError("lambda_l1 must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  const int factor = 1 << generator.depth;
  if (image_side < 1 || image_side % factor != 0) {
    throw ConfigError("image_side " + std::to_string(image_side) + " must be divisible by 2^depth = " +
                      std::to_string(factor));
  }
  if (generator.in_channels + generator.out_channels != discriminator.in_channels) {
    throw ConfigError("discriminator channels must equal generator input + output channels");
  }
  if (lr_constant_steps < 0 || lr_decay_steps < 0) throw ConfigError("learning-rate schedule steps must be >= 0");
}

double GanSpec::lr_at(long step) const {
  if (lr_decay_steps == 0 || step < lr_constant_steps) return adam.lr;
  const double done = static_cast<double>(step - lr_constant_steps) / static_cast<double>(lr_decay_steps);
  return adam.lr * std::max(0.0, 1.0 - done);
}

GanState make_gan_state(const GanSpec& spec, std::uint64_t seed, const Normalization& norm) {
  spec.validate();
  GanState s;
  s.spec = spec;
  s.seed = seed;
  s.norm = norm;
  s.generator = nn::Generator(spec.generator);
  s.discriminator = nn::Discriminator(spec.discriminator);
  Rng g_rng(derive_seed(seed, 0));
  Rng d_rng(derive_seed(seed, 1));
  s.generator.init_normal(g_rng);
  s.discriminator.init_normal(d_rng);
  const auto gp = s.generator.parameters();
  const auto dp = s.discriminator.parameters();
  s.adam_g = nn::make_adam_state(gp, spec.adam);
  s.adam_d = nn::make_adam_state(dp, spec.adam);
  return s;
}

GanLosses gan_losses(const Tensor& real_logits, const Tensor& fake_logits, const Tensor& g_out,
                     const Tensor& target, double lambda_l1) {
  GanLosses l;
  l.d = 0.5 * (nn::bce_with_logits(real_logits, 1.0) + nn::bce_with_logits(fake_logits, 0.0));
  l.g_adv = nn::bce_with_logits(fake_logits, 1.0);
  l.g_l1 = nn::l1_loss(g_out, target);
  l.g = l.g_adv + lambda_l1 * l.g_l1;
  return l;
}

Tensor image_to_tensor(const Image& img) {
  Tensor t({1, 1, img.rows(), img.cols()});
  Eigen::Map<Image>(t.data(), img.rows(), img.cols()) = img;
  return t;
}

Image tensor_to_image(const Tensor& t, Eigen::Index sample) {
  t.require_rank4("tensor_to_image");
  return Eigen::Map<const Image>(t.data() + sample * t.c() * t.h() * t.w(), t.h(), t.w());
}

namespace {

Tensor stack_batch(const std::vector<const Image*>& images) {
  const Eigen::Index h = images[0]->rows(), w = images[0]->cols();
  Tensor t({static_cast<Eigen::Index>(images.size()), 1, h, w});
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i]->rows() != h || images[i]->cols() != w) throw ShapeError("batch images differ in size");
    Eigen::Map<Image>(t.data() + static_cast<Eigen::Index>(i) * h * w, h, w) = *images[i];
  }
  return t;
}

Tensor concat_batch(const Tensor& a, const Tensor& b) {
  Tensor out({a.n() + b.n(), a.c(), a.h(), a.w()});
  out.array().head(a.size()) = a.array();
  out.array().tail(b.size()) = b.array();
  return out;
}

Tensor batch_slice(const Tensor& t, Eigen::Index first, Eigen::Index count) {
  Tensor out({count, t.c(), t.h(), t.w()});
  const Eigen::Index per = t.c() * t.h() * t.w();
  out.array() = t.array().segment(first * per, count * per);
  return out;
}

void require_finite_loss(double v, const char* what, long step) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("non-finite ") + what + " at step " + std::to_string(step));
  }
}

}  // namespace

StepStats train_step(GanState& state, const std::vector<const PairedSample*>& batch) {
  if (batch.empty()) throw ConfigError("train_step: empty batch");
  std::vector<const Image*> inputs, targets;
  for (const auto* s : batch) {
    inputs.push_back(&s->input);
    targets.push_back(&s->target);
  }
  const Tensor x = stack_batch(inputs);
  const Tensor y = stack_batch(targets);
  const Eigen::Index n = x.n();
  auto& G = state.generator;
  auto& D = state.discriminator;
  state.adam_g.config.lr = state.adam_d.config.lr = state.spec.lr_at(state.step);

  const Tensor fake = G.forward(x);

  // Discriminator step on [real; fake] with the generator frozen.
  D.zero_grad();
  const Tensor logits = D.forward(concat_batch(x, x), concat_batch(y, fake));
  const Tensor real_logits = batch_slice(logits, 0, n);
  const Tensor fake_logits = batch_slice(logits, n, n);
  Tensor g_real, g_fake;
  const double loss_real = nn::bce_with_logits(real_logits, 1.0, &g_real);
  const double loss_fake = nn::bce_with_logits(fake_logits, 0.0, &g_fake);
  const double loss_d = 0.5 * (loss_real + loss_fake);
  require_finite_loss(loss_d, "discriminator loss", state.step);
  D.backward(0.5 * concat_batch(g_real, g_fake));
  const auto dp = D.parameters();
  nn::adam_step(dp, state.adam_d);

  StepStats stats;
  stats.fake_probability = nn::sigmoid(fake_logits).array().mean();

  // Generator step through the updated discriminator.
  D.zero_grad();
  const Tensor fake_logits_g = D.forward(x, fake);
  Tensor g_adv;
  const double loss_adv = nn::bce_with_logits(fake_logits_g, 1.0, &g_adv);
  Tensor grad_fake = D.backward(g_adv);
  Tensor g_l1;
  const double loss_l1 = nn::l1_loss(fake, y, &g_l1);
  require_finite_loss(loss_adv, "generator adversarial loss", state.step);
  require_finite_loss(loss_l1, "generator L1 loss", state.step);
  grad_fake += state.spec.lambda_l1 * g_l1;
  G.zero_grad();
  G.backward(grad_fake);
  const auto gp = G.parameters();
  nn::adam_step(gp, state.adam_g);
  D.zero_grad();

  stats.losses = {loss_d, loss_adv, loss_l1};
  state.history.push_back(stats.losses);
  ++state.step;
  return stats;
}

std::vector<std::size_t> batch_indices(std::uint64_t seed, long step, int batch_size, std::size_t n) {
  const std::uint64_t order_seed = derive_seed(seed, 2);
  std::vector<std::size_t> out;
  std::uint64_t cached_epoch = ~0ULL;
  std::vector<std::size_t> perm;
  for (int b = 0; b < batch_size; ++b) {
    const std::uint64_t pos = static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(batch_size) +
                              static_cast<std::uint64_t>(b);
    const std::uint64_t epoch = pos / n;
    if (epoch != cached_epoch) {
      perm = shuffled_indices(n, derive_seed(order_seed, epoch));
      cached_epoch = epoch;
    }
    out.push_back(perm[pos % n]);
  }
  return out;
}

void train(GanState& state, const std::vector<PairedSample>& pairs, long steps,
           const std::function<void(long, const StepStats&)>& on_step) {
  if (pairs.empty()) throw ConfigError("train: no training pairs");
  for (long i = 0; i < steps; ++i) {
    const auto idx = batch_indices(state.seed, state.step, state.spec.batch_size, pairs.size());
    std::vector<const PairedSample*> batch;
    for (std::size_t k : idx) batch.push_back(&pairs[k]);
    const long step = state.step;
    const StepStats stats = train_step(state, batch);
    if (on_step) on_step(step, stats);
  }
}

Image generate(GanState& state, const Image& normalized_input) {
  return tensor_to_image(state.generator.forward(image_to_tensor(normalized_input)));
}

std::array<Image, 4> chain_frames(const FrameAdvance& advance, const Image& i1) {
  std::array<Image, 4> out;
  const Image* current = &i1;
  for (int hop = 1; hop <= 4; ++hop) {
    out[hop - 1] = advance(*current, hop);
    current = &out[hop - 1];
  }
  return out;
}

std::array<Image, 4> chain_infer_frames(GanState& state, const Image& i1) {
  if (state.spec.mode != GanMode::frames) throw ModeError("chain_infer_frames needs a frames-mode model");
  const AffineNorm& norm = state.norm.intensity;
  auto advance = [&](const Image& frame, int) { return norm.denormalize(generate(state, norm.normalize(frame))); };
  return chain_frames(advance, i1);
}

InterferogramStack assemble_stack(const Image& i1, const std::array<Image, 4>& predicted,
                                  const ForwardModelSpec& model) {
  InterferogramStack stack;
  stack.model = model;
  stack.frames[0] = i1;
  for (int k = 0; k < 4; ++k) stack.frames[k + 1] = predicted[k];
  for (int k = 0; k < 5; ++k) stack.realized_shifts[k] = model.shift_schedule[k];
  stack.validate();
  return stack;
}

PhaseMap infer_phase(GanState& state, const Image& i1) {
  if (state.spec.mode != GanMode::phase) throw ModeError("infer_phase needs a phase-mode model");
  const Image out = generate(state, state.norm.intensity.normalize(i1));
  return PhaseMap{state.norm.phase.denormalize(out), false};
}

nlohmann::json to_json(const GanSpec& s) {
  return {{"mode", to_string(s.mode)},
          {"generator",
           {{"in_channels", s.generator.in_channels},
            {"out_channels", s.generator.out_channels},
            {"depth", s.generator.depth},
            {"base_channels", s.generator.base_channels},
            {"skip", s.generator.skip}}},
          {"discriminator",
           {{"in_channels", s.discriminator.in_channels},
            {"layers", s.discriminator.layers},
            {"base_channels", s.discriminator.base_channels}}},
          {"lambda_l1", s.lambda_l1},
          {"image_side", s.image_side},
          {"batch_size", s.batch_size},
          {"lr_constant_steps", s.lr_constant_steps},
          {"lr_decay_steps", s.lr_decay_steps},
          {"adam", {{"lr", s.adam.lr}, {"beta1", s.adam.beta1}, {"beta2", s.adam.beta2}, {"eps", s.adam.eps}}}};
}

GanSpec gan_spec_from_json(const nlohmann::json& j) {
  using detail::field_or;
  GanSpec s;
  const std::string path = "gan";
  s.mode = gan_mode_from_string(field_or<std::string>(j, "mode", path, to_string(s.mode)));
  if (j.contains("generator")) {
    const auto& g = j["generator"];
    const std::string gp = path + ".generator";
    s.generator.in_channels = field_or<int>(g, "in_channels", gp, s.generator.in_channels);
    s.generator.out_channels = field_or<int>(g, "out_channels", gp, s.generator.out_channels);
    s.generator.depth = field_or<int>(g, "depth", gp, s.generator.depth);
    s.generator.base_channels = field_or<int>(g, "base_channels", gp, s.generator.base_channels);
    s.generator.skip = field_or<bool>(g, "skip", gp, s.generator.skip);
  }
  if (j.contains("discriminator")) {
    const auto& d = j["discriminator"];
    const std::string dp = path + ".discriminator";
    s.discriminator.in_channels = field_or<int>(d, "in_channels", dp, s.discriminator.in_channels);
    s.discriminator.layers = field_or<int>(d, "layers", dp, s.discriminator.layers);
    s.discriminator.base_channels = field_or<int>(d, "base_channels", dp, s.discriminator.base_channels);
  }
  s.lambda_l1 = field_or<double>(j, "lambda_l1", path, s.lambda_l1);
  s.image_side = field_or<int>(j, "image_side", path, s.image_side);
  s.batch_size = field_or<int>(j, "batch_size", path, s.batch_size);
  s.lr_constant_steps = field_or<long>(j, "lr_constant_steps", path, s.lr_constant_steps);
  s.lr_decay_steps = field_or<long>(j, "lr_decay_steps", path, s.lr_decay_steps);
  if (j.contains("adam")) {
    const auto& a = j["adam"];
    const std::string ap = path + ".adam";
    s.adam.lr = field_or<double>(a, "lr", ap, s.adam.lr);
    s.adam.beta1 = field_or<double>(a, "beta1", ap, s.adam.beta1);
    s.adam.beta2 = field_or<double>(a, "beta2", ap, s.adam.beta2);
    s.adam.eps = field_or<double>(a, "eps", ap, s.adam.eps);
  }
  s.validate();
  return s;
}

namespace {

nlohmann::json layer_json(const std::vector<nn::LayerInfo>& layers) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& l : layers) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto* p : l.params) params.push_back({{"name", p->name}, {"shape", p->value.shape()}});
    out.push_back({{"name", l.name}, {"kind", nn::to_string(l.kind)}, {"params", params}});
  }
  return out;
}

nlohmann::json norm_json(const AffineNorm& n) { return {{"offset", n.offset}, {"scale", n.scale}}; }

AffineNorm norm_from_json(const nlohmann::json& j) { return {j.at("offset").get<double>(), j.at("scale").get<double>()}; }

void append(std::vector<double>& blob, const Tensor& t) { blob.insert(blob.end(), t.data(), t.data() + t.size()); }

class BlobReader {
 public:
  explicit BlobReader(const std::vector<double>& blob) : blob_(blob) {}
  void read(Tensor& t) {
    if (pos_ + static_cast<std::size_t>(t.size()) > blob_.size()) throw IntegrityError("checkpoint: blob too short");
    std::copy(blob_.begin() + static_cast<std::ptrdiff_t>(pos_),
              blob_.begin() + static_cast<std::ptrdiff_t>(pos_) + t.size(), t.data());
    pos_ += static_cast<std::size_t>(t.size());
  }
  double next() {
    if (pos_ >= blob_.size()) throw IntegrityError("checkpoint: blob too short");
    return blob_[pos_++];
  }
  bool exhausted() const { return pos_ == blob_.size(); }

 private:
  const std::vector<double>& blob_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const GanState& state) {
  auto& s = const_cast<GanState&>(state);  // parameters() hands out mutable pointers only
  const auto gp = s.generator.parameters();
  const auto dp = s.discriminator.parameters();
  nlohmann::json header{
      {"format", "psim-gan-checkpoint"},
      {"version", 1},
      {"spec", to_json(state.spec)},
      {"seed", state.seed},
      {"step", state.step},
      {"normalization", {{"intensity", norm_json(state.norm.intensity)}, {"phase", norm_json(state.norm.phase)}}},
      {"adam", {{"generator_step", state.adam_g.step}, {"discriminator_step", state.adam_d.step}}},
      {"layers", {{"generator", layer_json(state.generator.layers())},
                  {"discriminator", layer_json(state.discriminator.layers())}}},
      {"history_columns", {"L_D", "L_G_adv", "L_G_l1"}}};
  std::vector<double> blob;
  for (const auto* p : gp) append(blob, p->value);
  for (const auto* p : dp) append(blob, p->value);
  for (const auto& t : state.adam_g.m) append(blob, t);
  for (const auto& t : state.adam_g.v) append(blob, t);
  for (const auto& t : state.adam_d.m) append(blob, t);
  for (const auto& t : state.adam_d.v) append(blob, t);
  for (const auto& h : state.history) blob.insert(blob.end(), {h.d, h.g_adv, h.g_l1});
  return encode_container(std::move(header), blob);
}

GanState decode_checkpoint(std::string_view bytes) {
  const Container c = decode_container(bytes);
  const auto& h = c.header;
  if (h.value("format", "") != "psim-gan-checkpoint") throw IntegrityError("checkpoint: unknown format");
  GanState s;
  try {
    const GanSpec spec = gan_spec_from_json(h.at("spec"));
    const Normalization norm{norm_from_json(h.at("normalization").at("intensity")),
                             norm_from_json(h.at("normalization").at("phase"))};
    s = make_gan_state(spec, h.at("seed").get<std::uint64_t>(), norm);
    s.step = h.at("step").get<long>();
    s.adam_g.step = h.at("adam").at("generator_step").get<long>();
    s.adam_d.step = h.at("adam").at("discriminator_step").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint: malformed header: ") + e.what());
  }
  BlobReader reader(c.blob);
  for (auto* p : s.generator.parameters()) reader.read(p->value);
  for (auto* p : s.discriminator.parameters()) reader.read(p->value);
  for (auto& t : s.adam_g.m) reader.read(t);
  for (auto& t : s.adam_g.v) reader.read(t);
  for (auto& t : s.adam_d.m) reader.read(t);
  for (auto& t : s.adam_d.v) reader.read(t);
  s.history.resize(static_cast<std::size_t>(s.step));
  for (auto& r : s.history) r = {reader.next(), reader.next(), reader.next()};
  if (!reader.exhausted()) throw IntegrityError("checkpoint: trailing data in blob");
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const GanState& state) {
  io::write_file_atomic(path, encode_checkpoint(state));
}

GanState load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace psim
