#include "psim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace psim {

void SsimParams::validate() const {
  if (window < 1 || window % 2 == 0) throw ConfigError("ssim window must be a positive odd size");
  if (!(sigma > 0)) throw ConfigError("ssim sigma must be > 0");
  if (!(k1 > 0) || !(k2 > 0)) throw ConfigError("ssim k1 and k2 must be > 0");
  if (!(dynamic_range > 0)) throw ConfigError("ssim dynamic range must be > 0");
}

Eigen::ArrayXd gaussian_taps(int size, double sigma) {
  Eigen::ArrayXd taps(size);
  const double c = 0.5 * (size - 1);
  for (int i = 0; i < size; ++i) {
    const double d = i - c;
    taps(i) = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return taps / taps.sum();
}

namespace {

// Valid-mode separable filter.
Image filter_valid(const Image& img, const Eigen::ArrayXd& taps) {
  const Eigen::Index k = taps.size();
  const Eigen::Index out_rows = img.rows() - k + 1, out_cols = img.cols() - k + 1;
  Image horiz = Image::Zero(img.rows(), out_cols);
  for (Eigen::Index t = 0; t < k; ++t) horiz += taps(t) * img.middleCols(t, out_cols);
  Image out = Image::Zero(out_rows, out_cols);
  for (Eigen::Index t = 0; t < k; ++t) out += taps(t) * horiz.middleRows(t, out_rows);
  return out;
}

}  // namespace

SsimResult ssim(const Image& a, const Image& b, const SsimParams& params) {
  params.validate();
  require_same_shape(a, b, "ssim");
  if (a.rows() < params.window || a.cols() < params.window) {
    throw ShapeError("ssim: image " + std::to_string(a.cols()) + "x" + std::to_string(a.rows()) +
                     " smaller than the " + std::to_string(params.window) + "px window");
  }
  const Eigen::ArrayXd taps = gaussian_taps(params.window, params.sigma);
  const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
  const double c2 = std::pow(params.k2 * params.dynamic_range, 2);

  const Image mu_a = filter_valid(a, taps);
  const Image mu_b = filter_valid(b, taps);
  const Image var_a = filter_valid(a * a, taps) - mu_a.square();
  const Image var_b = filter_valid(b * b, taps) - mu_b.square();
  const Image cov = filter_valid(a * b, taps) - mu_a * mu_b;

  SsimResult r;
  r.map = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
          ((mu_a.square() + mu_b.square() + c1) * (var_a + var_b + c2));
  r.mean = r.map.mean();
  return r;
}

double masked_mean(const SsimResult& result, const GridT<bool>& mask, int window) {
  const int half = window / 2;
  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < result.map.rows(); ++i) {
    for (Eigen::Index j = 0; j < result.map.cols(); ++j) {
      if (mask(i + half, j + half)) {
        sum += result.map(i, j);
        ++count;
      }
    }
  }
  return count == 0 ? result.mean : sum / static_cast<double>(count);
}

GridT<bool> foreground_mask(const Image& truth, double fraction) {
  const double lo = truth.minCoeff(), hi = truth.maxCoeff();
  return truth > lo + fraction * (hi - lo);
}

SsimResult ssim_phase(const PhaseMap& pred, const PhaseMap& truth, SsimParams params) {
  const PhaseMap aligned = align_global_offset(pred, truth);
  const double range = truth.values.maxCoeff() - truth.values.minCoeff();
  params.dynamic_range = range > 0 ? range : 1.0;
  return ssim(aligned.values, truth.values, params);
}

SsimResult ssim_intensity(const Image& pred, const Image& reference, SsimParams params) {
  const double range = reference.maxCoeff() - reference.minCoeff();
  params.dynamic_range = range > 0 ? range : 1.0;
  return ssim(pred, reference, params);
}

double rms_error(const Image& a, const Image& b) {
  require_same_shape(a, b, "rms_error");
  return std::sqrt((a - b).square().mean());
}

double mean_abs_error(const Image& a, const Image& b) {
  require_same_shape(a, b, "mean_abs_error");
  return (a - b).abs().mean();
}

double median(const Image& a) {
  if (a.size() == 0) throw ShapeError("median of an empty image");
  std::vector<double> v(a.data(), a.data() + a.size());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

PhaseMap align_global_offset(const PhaseMap& pred, const PhaseMap& truth) {
  require_same_shape(pred.values, truth.values, "align_global_offset");
  const double offset = median(pred.values - truth.values);
  const double branches = std::floor(offset / kTwoPi + 0.5);
  if (branches == 0.0) return pred;
  return PhaseMap{pred.values - branches * kTwoPi, pred.wrapped};
}

std::vector<double> Profile::segment(std::size_t k) const {
  const auto begin = values.begin() + static_cast<std::ptrdiff_t>(k * segment_width);
  return {begin, begin + static_cast<std::ptrdiff_t>(segment_width)};
}

Profile stitched_line_profile(const std::array<Image, 5>& frames, Eigen::Index row) {
  const Eigen::Index height = frames[0].rows(), width = frames[0].cols();
  for (const auto& f : frames) require_same_shape(frames[0], f, "stitched_line_profile");
  if (row < 0 || row >= height) {
    throw ShapeError("profile row " + std::to_string(row) + " out of range [0, " +
                     std::to_string(height) + ")");
  }
  Profile p;
  p.segment_width = static_cast<std::size_t>(width);
  p.values.reserve(5 * p.segment_width);
  for (int k = 0; k < 5; ++k) {
    if (k > 0) p.boundaries.push_back(p.values.size());
    for (Eigen::Index x = 0; x < width; ++x) p.values.push_back(frames[k](row, x));
  }
  return p;
}

Profile stitched_line_profile(const InterferogramStack& stack, Eigen::Index row) {
  return stitched_line_profile(stack.frames, row);
}

}  // namespace psim
