#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "psim/gan.hpp"
#include "psim/io.hpp"
#include "psim/metrics.hpp"
#include "psim/reconstruct.hpp"

using namespace psim;

namespace {

GanSpec small_spec(GanMode mode) {
  GanSpec s;
  s.mode = mode;
  s.generator.depth = 2;
  s.generator.base_channels = 4;
  s.discriminator.layers = 2;
  s.discriminator.base_channels = 4;
  s.image_side = 16;
  return s;
}

std::vector<StackRecord> records(std::size_t count, int side, std::uint64_t seed, double noise = 0.0) {
  ForwardModelSpec model;
  model.noise_sigma = noise;
  std::vector<StackRecord> out;
  for (auto& s : synth_dataset(count, side, side, ObjectFamily{}, model, seed)) out.push_back({s.stack, s.truth});
  return out;
}

bool same_state(GanState& a, GanState& b) {
  auto pa = a.generator.parameters(), pb = b.generator.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (!(pa[i]->value == pb[i]->value)) return false;
  pa = a.discriminator.parameters();
  pb = b.discriminator.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (!(pa[i]->value == pb[i]->value)) return false;
  return a.step == b.step;
}

}  // namespace

TEST(Pairs, CountsPerMode) {
  const auto data = records(6, 16, 1);
  EXPECT_EQ(build_pairs(data, GanMode::frames).pairs.size(), 24u);
  EXPECT_EQ(build_pairs(data, GanMode::phase).pairs.size(), 6u);
  EXPECT_THROW(build_pairs({}, GanMode::phase), ConfigError);
  // Counting identity for a 312-stack campaign of 5 frames each.
  EXPECT_EQ(312u * 4u, 1248u);
}

TEST(Pairs, FramesModeChainsConsecutiveFrames) {
  const auto data = records(2, 16, 2);
  const PairSet set = build_pairs(data, GanMode::frames);
  for (const auto& p : set.pairs) {
    const auto& frames = data[p.source_index].stack.frames;
    EXPECT_LT((set.norm.intensity.denormalize(p.input) - frames[p.hop - 1]).abs().maxCoeff(), 1e-12);
    EXPECT_LT((set.norm.intensity.denormalize(p.target) - frames[p.hop]).abs().maxCoeff(), 1e-12);
  }
}

TEST(Pairs, NormalisedIntoUnitRange) {
  const auto data = records(5, 16, 3, 0.05);
  for (GanMode mode : {GanMode::frames, GanMode::phase}) {
    for (const auto& p : build_pairs(data, mode).pairs) {
      EXPECT_LE(p.input.abs().maxCoeff(), 1.0 + 1e-12);
      EXPECT_LE(p.target.abs().maxCoeff(), 1.0 + 1e-12);
    }
  }
}

TEST(Pairs, PhaseTargetIsAlignedClassicalReconstruction) {
  const auto data = records(3, 32, 4);
  const PairSet set = build_pairs(data, GanMode::phase);
  for (const auto& p : set.pairs) {
    const PhaseMap target{set.norm.phase.denormalize(p.target), false};
    EXPECT_LT(rms_error(target.values, data[p.source_index].truth->values), 1e-9);
  }
}

TEST(Pairs, NormalisationRoundTrip) {
  const AffineNorm n = AffineNorm::from_range(-0.7, 3.1);
  Rng rng(5);
  Image x(8, 8);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(-5, 5);
  EXPECT_LT((n.denormalize(n.normalize(x)) - x).abs().maxCoeff(), 1e-12);
  EXPECT_DOUBLE_EQ(n.normalize(Image::Constant(1, 1, -0.7))(0), -1.0);
  EXPECT_DOUBLE_EQ(n.normalize(Image::Constant(1, 1, 3.1))(0), 1.0);
}

TEST(Augment, IdentityAndFlipInvolution) {
  const auto data = records(1, 16, 6);
  const PairedSample s = build_pairs(data, GanMode::phase).pairs[0];
  const PairedSample id = augment(s, {});
  EXPECT_TRUE((id.input == s.input).all() && (id.target == s.target).all());
  for (auto kind : {AugmentOp::Kind::flip_h, AugmentOp::Kind::flip_v}) {
    const PairedSample twice = augment(augment(s, {kind, 0}), {kind, 0});
    EXPECT_TRUE((twice.input == s.input).all());
    EXPECT_TRUE((twice.target == s.target).all());
  }
  const Image r4 = apply_augment(apply_augment(s.input, AugmentOp::rotate30(3)), AugmentOp::rotate30(9));
  EXPECT_TRUE((r4 == s.input).all());
}

TEST(Augment, QuarterTurnIsExactTranspose) {
  Image img(4, 4);
  for (int i = 0; i < 16; ++i) img(i) = i;
  const Image r = rotate_image_30(img, 3);
  // Counter-clockwise quarter turn: out(y, x) = in(x, n - 1 - y).
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) EXPECT_EQ(r(y, x), img(x, 3 - y));
}

TEST(Augment, RotationCounts) {
  const auto data = records(1, 16, 7);
  const PairedSample s = build_pairs(data, GanMode::phase).pairs[0];
  EXPECT_EQ(augment_rotations(std::vector<PairedSample>(270, s)).size(), 3240u);
  EXPECT_EQ(augment_rotations(std::vector<PairedSample>(210, s)).size(), 2520u);
}

TEST(Augment, CommutesWithReconstruction) {
  // A shallow object keeps the bilinear error of the cosine frames second order.
  ForwardModelSpec model;
  PhaseObjectSpec obj;
  obj.kind = ObjectKind::cell_blobs;
  obj.blobs = {{15, 17, 6, 0.2}};
  const PhaseMap truth = make_phase_object(obj, 32, 32, 520.0);
  const InterferogramStack stack = simulate_stack(truth, model, 0);
  const Image phase = five_step_wrapped_phase(stack).values;
  for (int k = 0; k < 12; ++k) {
    const AugmentOp op = AugmentOp::rotate30(k);
    InterferogramStack rotated = stack;
    for (auto& f : rotated.frames) f = apply_augment(f, op);
    const double err = (five_step_wrapped_phase(rotated).values - apply_augment(phase, op)).abs().maxCoeff();
    EXPECT_LT(err, k % 3 == 0 ? 1e-12 : 1e-6) << "k = " << k;
  }
  for (auto kind : {AugmentOp::Kind::flip_h, AugmentOp::Kind::flip_v}) {
    InterferogramStack flipped = stack;
    for (auto& f : flipped.frames) f = apply_augment(f, {kind, 0});
    EXPECT_LT((five_step_wrapped_phase(flipped).values - apply_augment(phase, {kind, 0})).abs().maxCoeff(), 1e-12);
  }
}

TEST(Split, SizesAndDisjointness) {
  const Split s = split_dataset(312, 0.8, 42);
  EXPECT_EQ(s.train.size(), 250u);
  EXPECT_EQ(s.test.size(), 62u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  for (auto i : s.test) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 312u);
  const Split again = split_dataset(312, 0.8, 42);
  EXPECT_EQ(s.train, again.train);
  EXPECT_EQ(s.test, again.test);
  const Split campaign = split_dataset(312, 0.8, 42, 270);
  EXPECT_EQ(campaign.train.size(), 270u);
  EXPECT_EQ(campaign.test.size(), 42u);
  EXPECT_THROW(split_dataset(1, 0.8, 0), ConfigError);
}

TEST(Split, AugmentationStaysOnTrainSide) {
  const auto data = records(10, 16, 8);
  const Split s = split_dataset(10, 0.8, 1);
  const PairSet set = build_pairs(select(data, s.train), GanMode::phase);
  for (const auto& p : augment_rotations(set.pairs)) EXPECT_LT(p.source_index, s.train.size());
}

TEST(GanLosses, ZeroLogits) {
  const Tensor z({1, 1, 4, 4});
  const GanLosses l = gan_losses(z, z, z, z, 100.0);
  EXPECT_NEAR(l.d, std::log(2.0), 1e-15);
  EXPECT_NEAR(l.g_adv, std::log(2.0), 1e-15);
  EXPECT_EQ(l.g_l1, 0.0);
  EXPECT_NEAR(l.g, std::log(2.0), 1e-15);
}

TEST(GanLosses, MatchesScalarOracle) {
  Rng rng(9);
  Tensor real({1, 1, 3, 3}), fake({1, 1, 3, 3}), out({1, 1, 4, 4}), target({1, 1, 4, 4});
  for (Eigen::Index i = 0; i < 9; ++i) {
    real[i] = rng.uniform(-8, 8);
    fake[i] = rng.uniform(-8, 8);
  }
  for (Eigen::Index i = 0; i < 16; ++i) {
    out[i] = rng.uniform(-1, 1);
    target[i] = rng.uniform(-1, 1);
  }
  auto bce = [](long double z, long double y) {
    const long double log_s = -std::log1p(std::exp(-z));
    return -(y * log_s + (1 - y) * (log_s - z));
  };
  long double lr = 0, lf0 = 0, lf1 = 0, l1 = 0;
  for (Eigen::Index i = 0; i < 9; ++i) {
    lr += bce(real[i], 1) / 9;
    lf0 += bce(fake[i], 0) / 9;
    lf1 += bce(fake[i], 1) / 9;
  }
  for (Eigen::Index i = 0; i < 16; ++i) l1 += std::abs(static_cast<long double>(out[i]) - target[i]) / 16;
  const GanLosses l = gan_losses(real, fake, out, target, 100.0);
  EXPECT_NEAR(l.d, static_cast<double>(0.5L * (lr + lf0)), 1e-12);
  EXPECT_NEAR(l.g_adv, static_cast<double>(lf1), 1e-12);
  EXPECT_NEAR(l.g, static_cast<double>(lf1 + 100 * l1), 1e-12);
}

TEST(TrainStep, ZeroLearningRateKeepsParameters) {
  const auto data = records(2, 16, 10);
  const PairSet set = build_pairs(data, GanMode::phase);
  GanSpec spec = small_spec(GanMode::phase);
  spec.adam.lr = 0.0;
  GanState a = make_gan_state(spec, 0, set.norm);
  GanState b = make_gan_state(spec, 0, set.norm);
  const StepStats st = train_step(a, {&set.pairs[0]});
  EXPECT_EQ(a.step, 1);
  EXPECT_EQ(a.history.size(), 1u);
  EXPECT_GT(st.losses.g_l1, 0.0);
  b.step = 1;
  EXPECT_TRUE(same_state(a, b));
}

TEST(TrainStep, Deterministic) {
  const auto data = records(3, 16, 11);
  const PairSet set = build_pairs(data, GanMode::frames);
  GanState a = make_gan_state(small_spec(GanMode::frames), 3, set.norm);
  GanState b = make_gan_state(small_spec(GanMode::frames), 3, set.norm);
  for (int i = 0; i < 5; ++i) {
    const StepStats sa = train_step(a, {&set.pairs[i], &set.pairs[i + 1]});
    const StepStats sb = train_step(b, {&set.pairs[i], &set.pairs[i + 1]});
    EXPECT_EQ(sa.losses.d, sb.losses.d);
    EXPECT_EQ(sa.losses.g_l1, sb.losses.g_l1);
  }
  EXPECT_TRUE(same_state(a, b));
  EXPECT_EQ(encode_checkpoint(a), encode_checkpoint(b));
}

TEST(TrainStep, EmptyBatchRejected) {
  GanState s = make_gan_state(small_spec(GanMode::phase), 0, {});
  EXPECT_THROW(train_step(s, {}), ConfigError);
}

TEST(TrainStep, LearningRateSchedule) {
  GanSpec s;
  s.lr_constant_steps = 10;
  s.lr_decay_steps = 10;
  EXPECT_EQ(s.lr_at(0), s.adam.lr);
  EXPECT_EQ(s.lr_at(9), s.adam.lr);
  EXPECT_DOUBLE_EQ(s.lr_at(15), 0.5 * s.adam.lr);
  EXPECT_EQ(s.lr_at(25), 0.0);
  s.lr_decay_steps = 0;
  EXPECT_EQ(s.lr_at(1000), s.adam.lr);
}

TEST(Batches, EpochsArePermutations) {
  std::multiset<std::size_t> seen;
  for (long step = 0; step < 7; ++step)
    for (auto i : batch_indices(5, step, 3, 7)) seen.insert(i);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(seen.count(i), 3u);
  EXPECT_EQ(batch_indices(5, 4, 3, 7), batch_indices(5, 4, 3, 7));
}

TEST(Train, ResumeMatchesUninterrupted) {
  const auto data = records(4, 16, 12);
  const PairSet set = build_pairs(data, GanMode::phase);
  GanState full = make_gan_state(small_spec(GanMode::phase), 1, set.norm);
  psim::train(full, set.pairs, 6);
  GanState half = make_gan_state(small_spec(GanMode::phase), 1, set.norm);
  psim::train(half, set.pairs, 3);
  GanState resumed = decode_checkpoint(encode_checkpoint(half));
  psim::train(resumed, set.pairs, 3);
  EXPECT_EQ(encode_checkpoint(full), encode_checkpoint(resumed));
}

TEST(Chain, IdentityAdvanceRepeatsInput) {
  Image i1(8, 8);
  for (int i = 0; i < 64; ++i) i1(i) = i * 0.1;
  const auto frames = chain_frames([](const Image& x, int) { return x; }, i1);
  ASSERT_EQ(frames.size(), 4u);
  for (const auto& f : frames) EXPECT_TRUE((f == i1).all());
  const InterferogramStack s = assemble_stack(i1, frames);
  EXPECT_EQ(s.frames.size(), 5u);
}

TEST(Chain, AnalyticAdvanceRecoversPhase) {
  ForwardModelSpec model;
  PhaseObjectSpec obj;
  obj.kind = ObjectKind::cell_blobs;
  obj.blobs = {{12, 14, 5, 200}, {22, 20, 4, 150}};
  const PhaseMap truth = make_phase_object(obj, 32, 32, 520.0);
  const Image envelope = envelope_map(truth, model);
  const double A = model.i_object + model.i_reference, B = model.fringe_amplitude();
  // The frame at the next schedule position, from the simulator's own A, B, phi.
  auto advance = [&](const Image&, int hop) -> Image {
    return A + B * envelope * (truth.values + kDefaultSchedule[hop]).cos();
  };
  const Image i1 = simulate_frame(truth, kDefaultSchedule[0], model);
  const InterferogramStack s = assemble_stack(i1, chain_frames(advance, i1), model);
  const PhaseMap wrapped = five_step_wrapped_phase(s);
  EXPECT_LT((wrap_to_pi(wrapped.values - truth.values)).abs().maxCoeff(), 1e-9);
  const PhaseMap unwrapped = unwrap_phase(wrapped, modulation_amplitude(s));
  EXPECT_LT((align_global_offset(unwrapped, truth).values - truth.values).abs().maxCoeff(), 1e-9);
}

TEST(Chain, ModeMismatch) {
  GanState phase = make_gan_state(small_spec(GanMode::phase), 0, {});
  GanState frames = make_gan_state(small_spec(GanMode::frames), 0, {});
  EXPECT_THROW(chain_infer_frames(phase, Image::Zero(16, 16)), ModeError);
  EXPECT_THROW(infer_phase(frames, Image::Zero(16, 16)), ModeError);
  EXPECT_EQ(chain_infer_frames(frames, Image::Zero(16, 16)).size(), 4u);
}

TEST(InferPhase, ZeroGeneratorGivesMidpoint) {
  Normalization norm;
  norm.phase = AffineNorm::from_range(-1.0, 5.0);
  GanState s = make_gan_state(small_spec(GanMode::phase), 0, norm);
  for (auto* p : s.generator.parameters()) p->value.fill(0.0);
  const PhaseMap out = infer_phase(s, Image::Constant(16, 16, 0.3));
  EXPECT_FALSE(out.wrapped);
  EXPECT_EQ(out.values.rows(), 16);
  EXPECT_EQ(out.values.cols(), 16);
  EXPECT_TRUE((out.values == 2.0).all());
}

TEST(Checkpoint, RoundTripAndHeader) {
  const auto data = records(2, 16, 13);
  const PairSet set = build_pairs(data, GanMode::phase);
  GanState s = make_gan_state(small_spec(GanMode::phase), 77, set.norm);
  psim::train(s, set.pairs, 2);
  const std::string bytes = encode_checkpoint(s);
  GanState back = decode_checkpoint(bytes);
  EXPECT_TRUE(same_state(s, back));
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.history.size(), 2u);
  EXPECT_EQ(back.history[1].g_l1, s.history[1].g_l1);
  EXPECT_EQ(back.norm.phase.offset, s.norm.phase.offset);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  const auto header = nlohmann::json::parse(bytes.substr(0, bytes.find('\n')));
  EXPECT_EQ(header["step"], 2);
  EXPECT_EQ(header["blob"]["sha256"].get<std::string>().size(), 64u);
  EXPECT_FALSE(header["layers"]["generator"].empty());
}

TEST(Checkpoint, TamperedBlobRejected) {
  GanState s = make_gan_state(small_spec(GanMode::frames), 1, {});
  std::string bytes = encode_checkpoint(s);
  bytes[bytes.size() - 3] ^= 0x40;
  EXPECT_THROW(decode_checkpoint(bytes), IntegrityError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 8)), IntegrityError);
  EXPECT_THROW(decode_checkpoint("not a checkpoint"), IntegrityError);
}

TEST(GanSpec, JsonRoundTripAndValidation) {
  GanSpec s = small_spec(GanMode::frames);
  s.lambda_l1 = 50;
  s.lr_decay_steps = 7;
  const GanSpec back = gan_spec_from_json(to_json(s));
  EXPECT_EQ(to_json(back), to_json(s));
  GanSpec bad = s;
  bad.image_side = 18;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = s;
  bad.lambda_l1 = -1;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(gan_spec_from_json({{"mode", "video"}}), ConfigError);
}
