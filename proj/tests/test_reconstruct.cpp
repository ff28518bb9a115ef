#include <gtest/gtest.h>

#include <cmath>
#include <queue>

#include "psim/field_model.hpp"
#include "psim/metrics.hpp"
#include "psim/reconstruct.hpp"
#include "psim/rng.hpp"

using namespace psim;

namespace {

// Frames I = A + B cos(phi + delta_k) for the nominal schedule.
InterferogramStack analytic_stack(const Image& phi, double a, double b) {
  InterferogramStack s;
  for (int k = 0; k < 5; ++k) {
    s.frames[k] = a + b * (phi + kDefaultSchedule[k]).cos();
    s.realized_shifts[k] = kDefaultSchedule[k];
  }
  return s;
}

double wrap_scalar(double x) { return std::atan2(std::sin(x), std::cos(x)); }

// Itoh unwrapping: first row left to right, then every column downwards.
Image itoh_raster(const Image& w) {
  Image out = w;
  for (Eigen::Index c = 1; c < w.cols(); ++c) out(0, c) = out(0, c - 1) + wrap_scalar(w(0, c) - w(0, c - 1));
  for (Eigen::Index r = 1; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) out(r, c) = out(r - 1, c) + wrap_scalar(w(r, c) - w(r - 1, c));
  }
  return out;
}

// Plain breadth-first region growing from a given seed.
Image bfs_unwrap(const Image& w, Eigen::Index seed_r, Eigen::Index seed_c) {
  const double two_pi = 2.0 * std::acos(-1.0);
  Image out = w;
  GridT<bool> done = GridT<bool>::Constant(w.rows(), w.cols(), false);
  std::queue<std::pair<Eigen::Index, Eigen::Index>> q;
  q.push({seed_r, seed_c});
  done(seed_r, seed_c) = true;
  const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
  while (!q.empty()) {
    auto [r, c] = q.front();
    q.pop();
    for (int k = 0; k < 4; ++k) {
      const Eigen::Index nr = r + dr[k], nc = c + dc[k];
      if (nr < 0 || nc < 0 || nr >= w.rows() || nc >= w.cols() || done(nr, nc)) continue;
      out(nr, nc) = w(nr, nc) + two_pi * std::round((out(r, c) - w(nr, nc)) / two_pi);
      done(nr, nc) = true;
      q.push({nr, nc});
    }
  }
  return out;
}

Image smooth_surface(int rows, int cols, std::uint64_t seed, double amplitude) {
  Rng rng(seed);
  Image out = Image::Zero(rows, cols);
  for (int term = 0; term < 3; ++term) {
    const double fx = rng.uniform(-0.25, 0.25), fy = rng.uniform(-0.25, 0.25), ph = rng.uniform(0, 6.28);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) out(r, c) += amplitude * std::sin(fx * c + fy * r + ph);
  }
  return out;
}

double max_gradient(const Image& p) {
  const double gx = (p.rightCols(p.cols() - 1) - p.leftCols(p.cols() - 1)).abs().maxCoeff();
  const double gy = (p.bottomRows(p.rows() - 1) - p.topRows(p.rows() - 1)).abs().maxCoeff();
  return std::max(gx, gy);
}

void expect_congruent(const Image& unwrapped, const Image& wrapped) {
  const Image d = unwrapped - wrapped;
  for (Eigen::Index i = 0; i < d.size(); ++i) EXPECT_LT(std::abs(std::remainder(d(i), kTwoPi)), 1e-12);
}

}  // namespace

TEST(FiveStep, ScalarExampleAtPiOverThree) {
  const Image phi = Image::Constant(1, 1, kPi / 3);
  const InterferogramStack s = analytic_stack(phi, 2.0, 1.0);
  EXPECT_NEAR(s.frames[0](0), 1.5, 1e-15);
  EXPECT_NEAR(s.frames[1](0), 2.8660, 1e-4);
  EXPECT_NEAR(s.frames[2](0), 2.5, 1e-15);
  EXPECT_NEAR(s.frames[3](0), 1.1340, 1e-4);
  EXPECT_NEAR(s.frames[4](0), 1.5, 1e-15);
  const double oracle = std::atan2(2.0 * std::sqrt(3.0), 2.0);
  EXPECT_NEAR(five_step_wrapped_phase(s).values(0), oracle, 1e-15);
  EXPECT_NEAR(five_step_wrapped_phase(s).values(0), kPi / 3, 1e-15);
  EXPECT_NEAR(modulation_amplitude(s).amplitude(0), 0.25 * std::hypot(2.0 * std::sqrt(3.0), 2.0), 1e-15);
  EXPECT_NEAR(modulation_amplitude(s).amplitude(0), 1.0, 1e-15);
}

TEST(FiveStep, ZeroPhase) {
  const InterferogramStack s = analytic_stack(Image::Zero(4, 4), 2.0, 1.0);
  const PhaseMap p = five_step_wrapped_phase(s);
  EXPECT_TRUE(p.wrapped);
  EXPECT_LT(p.values.abs().maxCoeff(), 1e-15);
}

TEST(FiveStep, PiBranch) {
  // Built exactly: I1 = I5 = A + B, I2 = I4 = A, I3 = A - B.
  InterferogramStack s;
  const double a = 2.0, b = 1.0;
  const double v[5] = {a + b, a, a - b, a, a + b};
  for (int k = 0; k < 5; ++k) s.frames[k] = Image::Constant(3, 3, v[k]);
  EXPECT_EQ(five_step_wrapped_phase(s).values(1, 1), kPi);
  // atan2(-0, negative) is -pi; the estimator maps it onto pi.
  const Image m0 = Image::Constant(1, 1, -0.0), one = Image::Ones(1, 1), zero = Image::Zero(1, 1);
  EXPECT_EQ(five_step_phase(one, m0, zero, zero, one)(0), kPi);
}

TEST(FiveStep, DegeneratePixelIsZero) {
  InterferogramStack s;
  for (int k = 0; k < 5; ++k) s.frames[k] = Image::Constant(4, 4, 3.0);
  EXPECT_TRUE((five_step_wrapped_phase(s).values == 0.0).all());
  EXPECT_TRUE((modulation_amplitude(s).amplitude == 0.0).all());
}

TEST(FiveStep, RejectsMismatchedFrames) {
  InterferogramStack s = analytic_stack(Image::Zero(4, 4), 2.0, 1.0);
  s.frames[3] = Image::Zero(4, 5);
  EXPECT_THROW(five_step_wrapped_phase(s), ShapeError);
  EXPECT_THROW(modulation_amplitude(s), ShapeError);
}

TEST(FiveStep, RoundTripAgainstSimulator) {
  ForwardModelSpec model;
  PhaseObjectSpec obj;
  obj.kind = ObjectKind::cell_blobs;
  obj.blobs = {{20, 24, 6, 250}, {40, 30, 9, 180}};
  const PhaseMap truth = make_phase_object(obj, 64, 48, 520.0);
  const InterferogramStack s = simulate_stack(truth, model, 0);
  const Image err = five_step_wrapped_phase(s).values - wrap_to_pi(truth.values);
  for (Eigen::Index i = 0; i < err.size(); ++i) EXPECT_LT(std::abs(std::remainder(err(i), kTwoPi)), 1e-10);
}

TEST(FiveStep, TangentRatioConsistency) {
  Rng rng(8);
  Image phi(50, 50);
  for (Eigen::Index i = 0; i < phi.size(); ++i) phi(i) = rng.uniform(-10, 10);
  InterferogramStack s = analytic_stack(phi, 3.0, 1.2);
  for (auto& f : s.frames)
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) += rng.normal(0, 0.05);
  const Image est = five_step_wrapped_phase(s).values;
  const auto& I = s.frames;
  for (Eigen::Index i = 0; i < est.size(); ++i) {
    const double den = I[0](i) - 2 * I[2](i) + I[4](i);
    if (std::abs(den) <= 1e-9) continue;
    // One ulp of the angle moves tan by (1 + tan^2) ulp, so steep pixels get a
    // tolerance relative to the ratio.
    const double ratio = 2 * (I[3](i) - I[1](i)) / den;
    EXPECT_LT(std::abs(std::tan(est(i)) - ratio), 1e-9 * std::max(1.0, ratio * ratio));
  }
}

TEST(FiveStep, AffineIntensityInvariance) {
  Rng rng(9);
  Image phi(32, 32);
  for (Eigen::Index i = 0; i < phi.size(); ++i) phi(i) = rng.uniform(-3, 3);
  const InterferogramStack s = analytic_stack(phi, 2.0, 0.7);
  InterferogramStack t = s;
  for (auto& f : t.frames) f = 2.5 * f + 0.75;
  EXPECT_LT((five_step_wrapped_phase(s).values - five_step_wrapped_phase(t).values).abs().maxCoeff(), 1e-12);
}

TEST(Modulation, EqualsFringeAmplitudeTimesEnvelope) {
  ForwardModelSpec model;
  model.i_object = 0.5;
  model.i_reference = 2.0;
  PhaseObjectSpec obj;
  obj.kind = ObjectKind::cell_blobs;
  obj.blobs = {{16, 16, 5, 400}};
  const PhaseMap truth = make_phase_object(obj, 32, 32, 520.0);
  const InterferogramStack s = simulate_stack(truth, model, 0);
  const Image expected = 2.0 * std::sqrt(0.5 * 2.0) * envelope_map(truth, model);
  EXPECT_LT((modulation_amplitude(s).amplitude - expected).abs().maxCoeff(), 1e-12);
}

TEST(Modulation, IndependentOfPhase) {
  const InterferogramStack a = analytic_stack(Image::Constant(8, 8, 0.3), 2.0, 0.8);
  const InterferogramStack b = analytic_stack(Image::Constant(8, 8, -2.2), 2.0, 0.8);
  EXPECT_LT((modulation_amplitude(a).amplitude - modulation_amplitude(b).amplitude).abs().maxCoeff(), 1e-12);
}

TEST(Unwrap, IdentityWithoutWraps) {
  const Image p = smooth_surface(16, 16, 1, 0.8);
  ASSERT_LT(p.abs().maxCoeff(), kPi);
  const UnwrapResult r = unwrap_phase_detailed({p, true}, {Image::Ones(16, 16)});
  EXPECT_FALSE(r.phase.wrapped);
  EXPECT_EQ(r.seed_branch, 0);
  EXPECT_TRUE((r.phase.values == p).all());
}

TEST(Unwrap, HorizontalRampMatchesItoh) {
  Image ramp(8, 64);
  for (int c = 0; c < 64; ++c) ramp.col(c).setConstant(4.0 * kPi * c / 63.0);
  const Image w = wrap_to_pi(ramp);
  Image itoh = w;
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 1; c < w.cols(); ++c) itoh(r, c) = itoh(r, c - 1) + wrap_scalar(w(r, c) - w(r, c - 1));
  const PhaseMap out = unwrap_phase({w, true}, {Image::Ones(8, 64)});
  const PhaseMap aligned = align_global_offset(out, {itoh, false});
  EXPECT_LT((aligned.values - itoh).abs().maxCoeff(), 1e-9);
  EXPECT_LT((align_global_offset(out, {ramp, false}).values - ramp).abs().maxCoeff(), 1e-9);
  expect_congruent(out.values, w);
}

TEST(Unwrap, SmallSurfacesMatchBreadthFirstOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Image truth = smooth_surface(8, 8, seed, 3.0);
    ASSERT_LT(max_gradient(truth), kPi);
    const Image w = wrap_to_pi(truth);
    Image quality = Image::Ones(8, 8);
    Rng rng(seed + 100);
    for (Eigen::Index i = 0; i < quality.size(); ++i) quality(i) = rng.uniform(0.5, 1.0);
    const UnwrapResult r = unwrap_phase_detailed({w, true}, {quality});
    Eigen::Index br, bc;
    quality.maxCoeff(&br, &bc);
    EXPECT_EQ(r.seed_row, br);
    EXPECT_EQ(r.seed_col, bc);
    EXPECT_TRUE((r.phase.values == bfs_unwrap(w, br, bc)).all()) << "seed " << seed;
  }
}

TEST(Unwrap, PathIndependenceOnSmoothFields) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image truth = smooth_surface(48, 40, seed, 4.0);
    ASSERT_LT(max_gradient(truth), kPi);
    const Image w = wrap_to_pi(truth);
    Image quality(48, 40);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < quality.size(); ++i) quality(i) = rng.uniform();
    const PhaseMap guided = unwrap_phase({w, true}, {quality});
    const Image raster = itoh_raster(w);
    EXPECT_LT((align_global_offset(guided, {raster, false}).values - raster).abs().maxCoeff(), 1e-9);
    expect_congruent(guided.values, w);
  }
}

TEST(Unwrap, DegenerateQualityProceeds) {
  const Image truth = smooth_surface(12, 12, 3, 3.0);
  const Image w = wrap_to_pi(truth);
  const UnwrapResult r = unwrap_phase_detailed({w, true}, {Image::Zero(12, 12)});
  EXPECT_TRUE(r.degenerate_quality);
  EXPECT_EQ(r.seed_row, 0);
  EXPECT_EQ(r.seed_col, 0);
  expect_congruent(r.phase.values, w);
  EXPECT_LT((align_global_offset(r.phase, {truth, false}).values - truth).abs().maxCoeff(), 1e-9);
}

TEST(Unwrap, RejectsUnwrappedInputAndShapeMismatch) {
  EXPECT_THROW(unwrap_phase({Image::Zero(4, 4), false}, {Image::Ones(4, 4)}), ShapeError);
  EXPECT_THROW(unwrap_phase({Image::Zero(4, 4), true}, {Image::Ones(4, 5)}), ShapeError);
}

TEST(Height, ScalarConversions) {
  EXPECT_EQ(phase_to_height({Image::Zero(2, 2), false}, 520.0).nm(0), 0.0);
  EXPECT_NEAR(phase_to_height({Image::Constant(2, 2, kPi), false}, 520.0).nm(0), 520.0 * kPi / (4 * kPi), 1e-12);
  EXPECT_NEAR(phase_to_height({Image::Constant(2, 2, kPi), false}, 520.0).nm(0), 130.0, 1e-12);
  EXPECT_NEAR(phase_to_height({Image::Constant(2, 2, 4 * kPi), false}, 520.0).nm(0), 520.0, 1e-12);
}

TEST(Height, Linearity) {
  const Image a = smooth_surface(8, 8, 1, 2.0), b = smooth_surface(8, 8, 2, 5.0);
  const Image sum = phase_to_height({a + b, false}, 520.0).nm;
  const Image parts = phase_to_height({a, false}, 520.0).nm + phase_to_height({b, false}, 520.0).nm;
  EXPECT_LT((sum - parts).abs().maxCoeff(), 1e-12);
}

TEST(Height, RejectsWrappedInput) {
  EXPECT_THROW(phase_to_height({Image::Zero(2, 2), true}, 520.0), ShapeError);
  EXPECT_THROW(phase_to_height({Image::Zero(2, 2), false}, 0.0), ConfigError);
}

TEST(Classical, RecoversTallRidge) {
  ForwardModelSpec model;
  PhaseObjectSpec obj;
  obj.kind = ObjectKind::waveguide_ridge;
  obj.ridge = {32, 16, 300, 10};
  const PhaseMap truth = make_phase_object(obj, 64, 32, 520.0);
  ASSERT_GT(truth.values.maxCoeff(), kTwoPi);
  const ClassicalReconstruction rec = reconstruct_classical(simulate_stack(truth, model, 0));
  EXPECT_LT(rms_error(align_global_offset(rec.unwrapped, truth).values, truth.values), 1e-9);
  EXPECT_EQ(rec.height.lambda0_nm, 520.0);
}
