#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psim/field_model.hpp"
#include "psim/image.hpp"

namespace psim {

enum class GanMode { frames, phase };
const char* to_string(GanMode mode);
GanMode gan_mode_from_string(const std::string& s);

/// Affine map between physical values and [-1, 1]: x = n * scale + offset.
struct AffineNorm {
  double offset = 0.0;
  double scale = 1.0;

  static AffineNorm from_range(double lo, double hi);
  Image normalize(const Image& x) const { return (x - offset) / scale; }
  Image denormalize(const Image& n) const { return n * scale + offset; }
};

/// Dataset-wide normalisation recorded when pairs are built and reused at
/// inference, where only I1 is available.
struct Normalization {
  AffineNorm intensity;
  AffineNorm phase;
};

struct PairedSample {
  Image input;
  Image target;
  AffineNorm input_norm;
  AffineNorm target_norm;
  std::size_t source_index = 0;  // stack the pair came from
  int hop = 0;                   // frames mode: k for the pair I_k -> I_{k+1}
};

/// One stack plus its ground truth when known.
struct StackRecord {
  InterferogramStack stack;
  std::optional<PhaseMap> truth;
};

struct PairSet {
  GanMode mode = GanMode::phase;
  Normalization norm;
  std::vector<PairedSample> pairs;
};

/// Fraction of the phase range added on each side before mapping to [-1, 1].
inline constexpr double kPhaseRangeMargin = 0.1;

/// Scans the dataset for the intensity range (all frames) and the phase range
/// (targets, widened by kPhaseRangeMargin on each side).
Normalization fit_normalization(const std::vector<StackRecord>& dataset);

/// Phase target for one stack: the classical reconstruction, offset-aligned to
/// the ground truth when one is present.
PhaseMap phase_target(const StackRecord& record);

/// frames: four pairs (I_k -> I_{k+1}) per stack; phase: one pair (I1 -> phase).
PairSet build_pairs(const std::vector<StackRecord>& dataset, GanMode mode);
PairSet build_pairs(const std::vector<StackRecord>& dataset, GanMode mode, const Normalization& norm);

struct AugmentOp {
  enum class Kind { identity, rotate, flip_h, flip_v };
  Kind kind = Kind::identity;
  int steps = 0;  // rotate: multiples of 30 degrees

  static AugmentOp rotate30(int k) { return {Kind::rotate, k}; }
};

/// Rotation about the image centre, bilinear, reflect-padded, cropped to the
/// original size. Multiples of 90 degrees use exact trigonometric values.
Image rotate_image(const Image& img, double degrees);
Image rotate_image_30(const Image& img, int steps);
Image apply_augment(const Image& img, const AugmentOp& op);

/// The same geometric transform on input and target.
PairedSample augment(const PairedSample& sample, const AugmentOp& op);

/// Each sample under rotations k * 30 degrees, k = 0..11.
std::vector<PairedSample> augment_rotations(const std::vector<PairedSample>& samples);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffled split with |train| = ceil(train_fraction * n) unless train_count
/// overrides it.
Split split_dataset(std::size_t n, double train_fraction, std::uint64_t seed,
                    std::optional<std::size_t> train_count = std::nullopt);

template <typename T>
std::vector<T> select(const std::vector<T>& items, const std::vector<std::size_t>& indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(items.at(i));
  return out;
}

}  // namespace psim
