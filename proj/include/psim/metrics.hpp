#pragma once

#include <cstddef>
#include <vector>

#include "psim/field_model.hpp"
#include "psim/image.hpp"

namespace psim {

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  void validate() const;
};

struct SsimResult {
  double mean = 0.0;
  /// One value per valid window, indexed by the window's top-left corner.
  Image map;
};

/// Normalised 1D Gaussian taps; the 2D window is their outer product.
Eigen::ArrayXd gaussian_taps(int size, double sigma);

/// Classic windowed SSIM over all fully-contained windows.
SsimResult ssim(const Image& a, const Image& b, const SsimParams& params);

/// Mean of the SSIM map over windows whose centre pixel is set in mask.
double masked_mean(const SsimResult& result, const GridT<bool>& mask, int window);

/// Pixels more than `fraction` of the range above the minimum of truth.
GridT<bool> foreground_mask(const Image& truth, double fraction = 0.1);

/// SSIM of phase maps: pred is offset-aligned to truth first and the dynamic
/// range is taken from truth (1 when truth is constant).
SsimResult ssim_phase(const PhaseMap& pred, const PhaseMap& truth, SsimParams params = {});

/// SSIM of intensity frames with the dynamic range of the reference frame.
SsimResult ssim_intensity(const Image& pred, const Image& reference, SsimParams params = {});

double rms_error(const Image& a, const Image& b);
double mean_abs_error(const Image& a, const Image& b);

/// Median; the mean of the two middle values for even counts.
double median(const Image& a);

/// pred - round(median(pred - truth) / 2 pi) * 2 pi, rounding half up.
PhaseMap align_global_offset(const PhaseMap& pred, const PhaseMap& truth);

struct Profile {
  std::vector<double> values;
  std::vector<std::size_t> boundaries;  // indices where a new frame starts (excluding 0)
  std::size_t segment_width = 0;

  /// Values of frame k (0-based) as a row.
  std::vector<double> segment(std::size_t k) const;
};

/// Row `row` of frames I1..I5 laid end to end.
Profile stitched_line_profile(const InterferogramStack& stack, Eigen::Index row);
Profile stitched_line_profile(const std::array<Image, 5>& frames, Eigen::Index row);

}  // namespace psim
