#pragma once

#include <span>
#include <vector>

#include "psim/layers.hpp"

namespace psim::nn {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> m;  // first moments, one per parameter
  std::vector<Tensor> v;  // second moments
  long step = 0;
};

/// Zero moments shaped like each parameter.
AdamState make_adam_state(std::span<Param* const> params, const AdamConfig& config);

/// One bias-corrected Adam update from each parameter's grad.
void adam_step(std::span<Param* const> params, AdamState& state);

}  // namespace psim::nn
