#include "psim/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psim/metrics.hpp"
#include "psim/reconstruct.hpp"
#include "psim/rng.hpp"

namespace psim {

const char* to_string(GanMode mode) { return mode == GanMode::frames ? "frames" : "phase"; }

GanMode gan_mode_from_string(const std::string& s) {
  if (s == "frames") return GanMode::frames;
  if (s == "phase") return GanMode::phase;
  throw ConfigError("unknown mode '" + s + "' (expected frames or phase)");
}

AffineNorm AffineNorm::from_range(double lo, double hi) {
  if (!(hi > lo)) {
    // Degenerate range: centre on the value with unit half-width.
    return {lo, 1.0};
  }
  return {0.5 * (lo + hi), 0.5 * (hi - lo)};
}

PhaseMap phase_target(const StackRecord& record) {
  const ClassicalReconstruction rec = reconstruct_classical(record.stack);
  if (record.truth) return align_global_offset(rec.unwrapped, *record.truth);
  return rec.unwrapped;
}

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void include(const Image& img) {
    lo = std::min(lo, img.minCoeff());
    hi = std::max(hi, img.maxCoeff());
  }
};

Normalization fit_from_targets(const std::vector<StackRecord>& dataset, const std::vector<PhaseMap>* targets) {
  if (dataset.empty()) throw ConfigError("build_pairs: empty dataset");
  Range intensity, phase;
  for (const auto& rec : dataset) {
    for (const auto& f : rec.stack.frames) intensity.include(f);
  }
  if (targets != nullptr) {
    for (const auto& t : *targets) phase.include(t.values);
  } else {
    for (const auto& rec : dataset) phase.include(phase_target(rec).values);
  }
  const double margin = kPhaseRangeMargin * (phase.hi - phase.lo);
  return {AffineNorm::from_range(intensity.lo, intensity.hi),
          AffineNorm::from_range(phase.lo - margin, phase.hi + margin)};
}

PairSet assemble(const std::vector<StackRecord>& dataset, GanMode mode, const Normalization& norm,
                 const std::vector<PhaseMap>& targets) {
  PairSet set{mode, norm, {}};
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    const auto& frames = dataset[s].stack.frames;
    if (mode == GanMode::frames) {
      for (int k = 0; k < 4; ++k) {
        set.pairs.push_back({norm.intensity.normalize(frames[k]), norm.intensity.normalize(frames[k + 1]),
                             norm.intensity, norm.intensity, s, k + 1});
      }
    } else {
      set.pairs.push_back({norm.intensity.normalize(frames[0]), norm.phase.normalize(targets[s].values),
                           norm.intensity, norm.phase, s, 0});
    }
  }
  return set;
}

std::vector<PhaseMap> targets_for(const std::vector<StackRecord>& dataset, GanMode mode) {
  std::vector<PhaseMap> targets;
  if (mode == GanMode::phase) {
    targets.reserve(dataset.size());
    for (const auto& rec : dataset) targets.push_back(phase_target(rec));
  }
  return targets;
}

}  // namespace

Normalization fit_normalization(const std::vector<StackRecord>& dataset) {
  return fit_from_targets(dataset, nullptr);
}

PairSet build_pairs(const std::vector<StackRecord>& dataset, GanMode mode) {
  if (dataset.empty()) throw ConfigError("build_pairs: empty dataset");
  std::vector<PhaseMap> targets = targets_for(dataset, mode);
  Normalization norm = mode == GanMode::phase ? fit_from_targets(dataset, &targets)
                                              : fit_from_targets(dataset, nullptr);
  return assemble(dataset, mode, norm, targets);
}

PairSet build_pairs(const std::vector<StackRecord>& dataset, GanMode mode, const Normalization& norm) {
  if (dataset.empty()) throw ConfigError("build_pairs: empty dataset");
  return assemble(dataset, mode, norm, targets_for(dataset, mode));
}

namespace {

double reflect(double v, Eigen::Index n) {
  if (n == 1) return 0.0;
  const double period = 2.0 * static_cast<double>(n - 1);
  double t = std::fmod(std::abs(v), period);
  if (t > n - 1) t = period - t;
  return t;
}

double bilinear(const Image& img, double y, double x) {
  const double ry = reflect(y, img.rows()), rx = reflect(x, img.cols());
  const auto y0 = static_cast<Eigen::Index>(std::floor(ry));
  const auto x0 = static_cast<Eigen::Index>(std::floor(rx));
  const Eigen::Index y1 = std::min(y0 + 1, img.rows() - 1);
  const Eigen::Index x1 = std::min(x0 + 1, img.cols() - 1);
  const double fy = ry - y0, fx = rx - x0;
  if (fy == 0.0 && fx == 0.0) return img(y0, x0);
  return (1 - fy) * ((1 - fx) * img(y0, x0) + fx * img(y0, x1)) + fy * ((1 - fx) * img(y1, x0) + fx * img(y1, x1));
}

Image rotate_with(const Image& img, double c, double s) {
  const double cy = 0.5 * (img.rows() - 1), cx = 0.5 * (img.cols() - 1);
  Image out(img.rows(), img.cols());
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    for (Eigen::Index x = 0; x < img.cols(); ++x) {
      const double dx = x - cx, dy = y - cy;
      // Inverse map of a counter-clockwise rotation (y axis pointing down).
      const double sx = cx + c * dx - s * dy;
      const double sy = cy + s * dx + c * dy;
      out(y, x) = bilinear(img, sy, sx);
    }
  }
  return out;
}

}  // namespace

Image rotate_image(const Image& img, double degrees) {
  const double rad = degrees * kPi / 180.0;
  return rotate_with(img, std::cos(rad), std::sin(rad));
}

Image rotate_image_30(const Image& img, int steps) {
  const int k = ((steps % 12) + 12) % 12;
  if (k == 0) return img;
  if (k % 3 == 0) {
    static constexpr double kCos[4] = {1, 0, -1, 0};
    static constexpr double kSin[4] = {0, 1, 0, -1};
    return rotate_with(img, kCos[k / 3], kSin[k / 3]);
  }
  return rotate_image(img, 30.0 * k);
}

Image apply_augment(const Image& img, const AugmentOp& op) {
  switch (op.kind) {
    case AugmentOp::Kind::identity: return img;
    case AugmentOp::Kind::rotate: return rotate_image_30(img, op.steps);
    case AugmentOp::Kind::flip_h: return img.rowwise().reverse();
    case AugmentOp::Kind::flip_v: return img.colwise().reverse();
  }
  return img;
}

PairedSample augment(const PairedSample& sample, const AugmentOp& op) {
  PairedSample out = sample;
  out.input = apply_augment(sample.input, op);
  out.target = apply_augment(sample.target, op);
  return out;
}

std::vector<PairedSample> augment_rotations(const std::vector<PairedSample>& samples) {
  std::vector<PairedSample> out;
  out.reserve(samples.size() * 12);
  for (const auto& s : samples) {
    for (int k = 0; k < 12; ++k) out.push_back(augment(s, AugmentOp::rotate30(k)));
  }
  return out;
}

Split split_dataset(std::size_t n, double train_fraction, std::uint64_t seed, std::optional<std::size_t> train_count) {
  if (n < 2) throw ConfigError("split_dataset: need at least 2 samples");
  if (!(train_fraction > 0 && train_fraction < 1)) throw ConfigError("split_dataset: train_fraction must be in (0, 1)");
  std::size_t n_train = train_count.value_or(
      static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9)));
  if (n_train < 1 || n_train >= n) throw ConfigError("split_dataset: train count must leave both sides non-empty");
  const auto order = shuffled_indices(n, seed);
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return s;
}

}  // namespace psim
