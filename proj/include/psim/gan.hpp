#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "psim/adam.hpp"
#include "psim/networks.hpp"
#include "psim/pairs.hpp"

namespace psim {

struct GanSpec {
  GanMode mode = GanMode::phase;
  nn::GeneratorSpec generator;          // depth 4, base 16
  nn::DiscriminatorSpec discriminator;  // 3 blocks, base 16
  double lambda_l1 = 100.0;
  int image_side = 64;
  int batch_size = 1;
  nn::AdamConfig adam;  // lr 2e-4, beta1 0.5, beta2 0.999
  /// Learning rate is constant for lr_constant_steps, then falls linearly
  /// towards zero over lr_decay_steps. No decay when lr_decay_steps is 0.
  long lr_constant_steps = 0;
  long lr_decay_steps = 0;

  void validate() const;
  double lr_at(long step) const;
};

struct LossRecord {
  double d = 0.0;      // discriminator loss
  double g_adv = 0.0;  // BCE(D(x, G(x)), 1)
  double g_l1 = 0.0;   // mean |G(x) - y|, unweighted
};

struct GanState {
  GanSpec spec;
  nn::Generator generator;
  nn::Discriminator discriminator;
  nn::AdamState adam_g;
  nn::AdamState adam_d;
  long step = 0;
  std::uint64_t seed = 0;
  Normalization norm;
  std::vector<LossRecord> history;
};

/// Fresh state: weights N(0, 0.02) from derive_seed(seed, 0) for the
/// generator and derive_seed(seed, 1) for the discriminator.
GanState make_gan_state(const GanSpec& spec, std::uint64_t seed, const Normalization& norm);

struct GanLosses {
  double d = 0.0;
  double g = 0.0;
  double g_adv = 0.0;
  double g_l1 = 0.0;
};

/// L_D = (BCE(real, 1) + BCE(fake, 0)) / 2;
/// L_G = BCE(fake, 1) + lambda_l1 * mean |g_out - target|.
GanLosses gan_losses(const Tensor& real_logits, const Tensor& fake_logits, const Tensor& g_out,
                     const Tensor& target, double lambda_l1);

struct StepStats {
  LossRecord losses;
  /// Mean sigmoid of the discriminator's logits on generated samples, taken
  /// before its update.
  double fake_probability = 0.0;
};

/// One discriminator Adam step with the generator frozen, then one generator
/// Adam step through the updated discriminator.
StepStats train_step(GanState& state, const std::vector<const PairedSample*>& batch);

/// Samples for step t are positions t*B .. t*B+B-1 of an endless sequence of
/// epochs; epoch e is shuffled_indices(n, derive_seed(derive_seed(seed, 2), e)).
std::vector<std::size_t> batch_indices(std::uint64_t seed, long step, int batch_size, std::size_t n);

/// Runs `steps` steps starting from state.step. `on_step` may be empty.
void train(GanState& state, const std::vector<PairedSample>& pairs, long steps,
           const std::function<void(long, const StepStats&)>& on_step = {});

Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t, Eigen::Index sample = 0);

/// Generator output for one normalised image.
Image generate(GanState& state, const Image& normalized_input);

/// Advances a frame by one hop; hop runs 1..4 (I_hop -> I_hop+1).
using FrameAdvance = std::function<Image(const Image&, int hop)>;

/// I2' = G(I1), I3' = G(I2'), ... ; returns I2'..I5'.
std::array<Image, 4> chain_frames(const FrameAdvance& advance, const Image& i1);

/// Chained inference in physical intensity units.
std::array<Image, 4> chain_infer_frames(GanState& state, const Image& i1);

/// I1 followed by the four chained predictions, shifts set to the schedule.
InterferogramStack assemble_stack(const Image& i1, const std::array<Image, 4>& predicted,
                                  const ForwardModelSpec& model = {});

/// Direct phase: G(normalised I1) denormalised with the recorded phase range.
PhaseMap infer_phase(GanState& state, const Image& i1);

nlohmann::json to_json(const GanSpec& spec);
GanSpec gan_spec_from_json(const nlohmann::json& j);

/// Checkpoint: compact JSON header line, then the blob of float64 values:
/// generator params, discriminator params, generator Adam m and v,
/// discriminator Adam m and v, then the loss history (3 values per step).
std::string encode_checkpoint(const GanState& state);
GanState decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const GanState& state);
GanState load_checkpoint(const std::filesystem::path& path);

}  // namespace psim
