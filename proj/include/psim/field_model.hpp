#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psim/image.hpp"
#include "psim/rng.hpp"

namespace psim {

/// Band-limited source; coherence_length is derived from the other two.
struct SourceSpec {
  double lambda0 = 520.0;       // nm
  double delta_lambda = 72.0;   // nm, full width
  double coherence_length = 0;  // nm

  /// Builds a validated spec with L_c = (2 ln 2 / pi) lambda0^2 / delta_lambda.
  static SourceSpec make(double lambda0_nm, double delta_lambda_nm);
  static double coherence_length_for(double lambda0_nm, double delta_lambda_nm);
  void validate() const;
};

enum class ObjectKind { waveguide_ridge, cell_blobs, flat };

struct RidgeGeometry {
  double center = 0;  // px, column of the ridge axis
  double width = 1;   // px, full plateau width
  double height = 0;  // nm
  double edge = 0;    // px, raised-cosine shoulder on each side
};

struct BlobGeometry {
  double center_x = 0;  // px
  double center_y = 0;  // px
  double radius = 1;    // px, Gaussian sigma
  double peak_height = 0;  // nm
};

struct PhaseObjectSpec {
  ObjectKind kind = ObjectKind::flat;
  RidgeGeometry ridge;
  std::vector<BlobGeometry> blobs;

  void validate() const;
};

using ShiftSchedule = std::array<double, 5>;

/// Nominal five-step schedule (-pi, -pi/2, 0, pi/2, pi).
inline constexpr ShiftSchedule kDefaultSchedule = {-kPi, -kPi / 2, 0.0, kPi / 2, kPi};

struct ForwardModelSpec {
  SourceSpec source = SourceSpec::make(520.0, 72.0);
  double i_object = 1.0;
  double i_reference = 1.0;
  ShiftSchedule shift_schedule = kDefaultSchedule;
  double jitter_sigma = 0.0;  // rad
  double noise_sigma = 0.0;   // intensity units
  double envelope_reference_opd = 0.0;  // nm

  void validate() const;
  /// 2 sqrt(I_o I_r): modulation amplitude before the coherence envelope.
  double fringe_amplitude() const;
};

struct InterferogramStack {
  std::array<Image, 5> frames;
  std::array<double, 5> realized_shifts{};
  ForwardModelSpec model;
  std::uint64_t seed = 0;

  Eigen::Index width() const { return frames[0].cols(); }
  Eigen::Index height() const { return frames[0].rows(); }
  /// Throws ShapeError unless all frames share non-empty dimensions.
  void validate() const;
};

/// Ground-truth unwrapped phase, 4 pi h / lambda0 (reflection geometry).
PhaseMap make_phase_object(const PhaseObjectSpec& spec, int width, int height, double lambda0);

/// Height profile in nm for the given object.
Image height_profile(const PhaseObjectSpec& spec, int width, int height);

/// Gaussian coherence envelope exp(-(opd / L_c)^2).
double coherence_envelope(double opd, const SourceSpec& source);

/// Envelope per pixel. Pixel OPD is 2 h - reference, with h recovered from
/// the unwrapped phase as lambda0 phi / (4 pi).
Image envelope_map(const PhaseMap& phase, const ForwardModelSpec& model);

/// Two-beam interference with an explicit envelope:
/// I = I_o + I_r + 2 sqrt(I_o I_r) gamma cos(phi + shift) (+ noise).
template <typename PhaseDerived, typename EnvDerived>
Image interference(const Eigen::ArrayBase<PhaseDerived>& phase, double shift,
                   const Eigen::ArrayBase<EnvDerived>& envelope, double i_object,
                   double i_reference) {
  require_same_shape(phase, envelope, "interference");
  const double amplitude = 2.0 * std::sqrt(i_object * i_reference);
  return (i_object + i_reference) + amplitude * envelope * (phase + shift).cos();
}

/// Frame whose envelope is derived from the object phase itself.
Image simulate_frame(const PhaseMap& phase, double shift, const ForwardModelSpec& model,
                     const std::optional<Image>& noise_field = std::nullopt);

/// Frame with a caller-supplied envelope map.
Image simulate_frame(const PhaseMap& phase, double shift, const ForwardModelSpec& model,
                     const Image& envelope, const std::optional<Image>& noise_field);

/// Five frames. Draw order from Rng(seed): the five jitter values eps_1..eps_5
/// first, then the noise field of frame 1 row-major, frame 2, ..., frame 5.
/// Draws are skipped entirely when the matching sigma is zero.
InterferogramStack simulate_stack(const PhaseMap& phase, const ForwardModelSpec& model,
                                  std::uint64_t seed);

/// Sampling ranges used to draw independent objects of one family.
struct ObjectFamily {
  ObjectKind kind = ObjectKind::cell_blobs;
  // ridge
  double ridge_width_min = 0.125, ridge_width_max = 0.25;  // fraction of width
  double ridge_edge = 3.0;                                 // px
  double ridge_height_min = 60.0, ridge_height_max = 120.0;  // nm
  // blobs
  int blob_count_min = 1, blob_count_max = 3;
  double blob_radius_min = 0.0625, blob_radius_max = 0.15;  // fraction of min side
  double blob_peak_min = 40.0, blob_peak_max = 110.0;       // nm

  void validate() const;
};

/// Draws one object from the family. Consumes draws from rng in a fixed order.
PhaseObjectSpec sample_object(const ObjectFamily& family, int width, int height, Rng& rng);

struct SynthSample {
  InterferogramStack stack;
  PhaseMap truth;
  PhaseObjectSpec object;
};

/// Sample i uses sample_seed = derive_seed(seed, i); its object is drawn from
/// Rng(derive_seed(sample_seed, 0)) and its stack simulated with
/// derive_seed(sample_seed, 1).
SynthSample synth_sample(std::size_t index, int width, int height, const ObjectFamily& family,
                         const ForwardModelSpec& model, std::uint64_t seed);

std::vector<SynthSample> synth_dataset(std::size_t count, int width, int height,
                                       const ObjectFamily& family, const ForwardModelSpec& model,
                                       std::uint64_t seed);

const char* to_string(ObjectKind kind);
ObjectKind object_kind_from_string(const std::string& s);

}  // namespace psim
