#pragma once

#include <cstddef>

#include "psim/field_model.hpp"
#include "psim/image.hpp"

namespace psim {

/// Wrapped phase from five frames at pi/2 steps:
/// atan2(2 (I2 - I4), 2 I3 - I1 - I5), mapped into (-pi, pi].
/// Pixels where both terms vanish are set to 0.
template <typename D1, typename D2, typename D3, typename D4, typename D5>
Image five_step_phase(const Eigen::ArrayBase<D1>& i1, const Eigen::ArrayBase<D2>& i2,
                      const Eigen::ArrayBase<D3>& i3, const Eigen::ArrayBase<D4>& i4,
                      const Eigen::ArrayBase<D5>& i5) {
  const Image num = 2.0 * (i2 - i4);
  const Image den = 2.0 * i3 - i1 - i5;
  Image phi(num.rows(), num.cols());
  for (Eigen::Index k = 0; k < phi.size(); ++k) {
    const double n = num(k), d = den(k);
    if (n == 0.0 && d == 0.0) {
      phi(k) = 0.0;
      continue;
    }
    double v = std::atan2(n, d);
    if (v <= -kPi) v = kPi;
    phi(k) = v;
  }
  return phi;
}

/// B = 1/4 sqrt((2 (I2 - I4))^2 + (2 I3 - I1 - I5)^2).
template <typename D1, typename D2, typename D3, typename D4, typename D5>
Image five_step_modulation(const Eigen::ArrayBase<D1>& i1, const Eigen::ArrayBase<D2>& i2,
                           const Eigen::ArrayBase<D3>& i3, const Eigen::ArrayBase<D4>& i4,
                           const Eigen::ArrayBase<D5>& i5) {
  const Image num = 2.0 * (i2 - i4);
  const Image den = 2.0 * i3 - i1 - i5;
  return 0.25 * (num.square() + den.square()).sqrt();
}

PhaseMap five_step_wrapped_phase(const InterferogramStack& stack);
QualityMap modulation_amplitude(const InterferogramStack& stack);

struct UnwrapResult {
  PhaseMap phase;
  Eigen::Index seed_row = 0;
  Eigen::Index seed_col = 0;
  /// 2 pi branch of the seed pixel; the seed keeps its wrapped value so this is 0.
  int seed_branch = 0;
  bool degenerate_quality = false;
};

/// Quality-guided flood fill. The seed is the highest-quality pixel; the
/// frontier pops the highest-quality pixel next, ties broken by row-major
/// index. Each pixel is unwrapped from the neighbour that reached it, and its
/// value is stored as wrapped + 2 pi k so the output is exactly congruent to
/// the input.
UnwrapResult unwrap_phase_detailed(const PhaseMap& wrapped, const QualityMap& quality);
PhaseMap unwrap_phase(const PhaseMap& wrapped, const QualityMap& quality);

/// h = lambda0 phi / (4 pi); rejects wrapped input.
HeightMap phase_to_height(const PhaseMap& phase, double lambda0);

struct ClassicalReconstruction {
  PhaseMap wrapped;
  QualityMap quality;
  PhaseMap unwrapped;
  HeightMap height;
};

ClassicalReconstruction reconstruct_classical(const InterferogramStack& stack);

}  // namespace psim
