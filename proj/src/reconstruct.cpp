#include "psim/reconstruct.hpp"

#include <queue>
#include <vector>

#include "psim/log.hpp"

namespace psim {

PhaseMap five_step_wrapped_phase(const InterferogramStack& stack) {
  stack.validate();
  const auto& f = stack.frames;
  return PhaseMap{five_step_phase(f[0], f[1], f[2], f[3], f[4]), true};
}

QualityMap modulation_amplitude(const InterferogramStack& stack) {
  stack.validate();
  const auto& f = stack.frames;
  return QualityMap{five_step_modulation(f[0], f[1], f[2], f[3], f[4])};
}

UnwrapResult unwrap_phase_detailed(const PhaseMap& wrapped, const QualityMap& quality) {
  if (!wrapped.wrapped) throw ShapeError("unwrap_phase expects a wrapped phase map");
  require_same_shape(wrapped.values, quality.amplitude, "unwrap_phase");
  const Eigen::Index rows = wrapped.values.rows(), cols = wrapped.values.cols();
  const Eigen::Index n = rows * cols;
  if (n == 0) throw ShapeError("unwrap_phase: empty map");

  const auto& w = wrapped.values;
  const auto& q = quality.amplitude;

  UnwrapResult result;
  result.degenerate_quality = (q == 0.0).all();
  if (result.degenerate_quality) {
    log::info("unwrap_phase: quality map is all zero; falling back to raster order");
  }

  Eigen::Index seed = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (q(i) > q(seed)) seed = i;
  }

  struct Entry {
    double quality;
    Eigen::Index index;
  };
  // Max-quality first, then the smaller row-major index.
  auto lower_priority = [](const Entry& a, const Entry& b) {
    if (a.quality != b.quality) return a.quality < b.quality;
    return a.index > b.index;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower_priority)> frontier(lower_priority);

  Image out(rows, cols);
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  out(seed) = w(seed);
  done[static_cast<std::size_t>(seed)] = 1;
  frontier.push({q(seed), seed});

  while (!frontier.empty()) {
    const Eigen::Index p = frontier.top().index;
    frontier.pop();
    const Eigen::Index r = p / cols, c = p % cols;
    const Eigen::Index neighbours[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& nb : neighbours) {
      if (nb[0] < 0 || nb[0] >= rows || nb[1] < 0 || nb[1] >= cols) continue;
      const Eigen::Index j = nb[0] * cols + nb[1];
      if (done[static_cast<std::size_t>(j)]) continue;
      const double estimate = out(p) + wrap_to_pi(w(j) - w(p));
      const double k = std::round((estimate - w(j)) / kTwoPi);
      out(j) = w(j) + kTwoPi * k;
      done[static_cast<std::size_t>(j)] = 1;
      frontier.push({q(j), j});
    }
  }

  result.phase = PhaseMap{std::move(out), false};
  result.seed_row = seed / cols;
  result.seed_col = seed % cols;
  result.seed_branch = 0;
  return result;
}

PhaseMap unwrap_phase(const PhaseMap& wrapped, const QualityMap& quality) {
  return unwrap_phase_detailed(wrapped, quality).phase;
}

HeightMap phase_to_height(const PhaseMap& phase, double lambda0) {
  if (phase.wrapped) throw ShapeError("phase_to_height requires an unwrapped phase map");
  if (!(lambda0 > 0)) throw ConfigError("lambda0 must be > 0");
  return HeightMap{(lambda0 / (4.0 * kPi)) * phase.values, lambda0};
}

ClassicalReconstruction reconstruct_classical(const InterferogramStack& stack) {
  ClassicalReconstruction r;
  r.wrapped = five_step_wrapped_phase(stack);
  r.quality = modulation_amplitude(stack);
  r.unwrapped = unwrap_phase(r.wrapped, r.quality);
  r.height = phase_to_height(r.unwrapped, stack.model.source.lambda0);
  return r;
}

}  // namespace psim
