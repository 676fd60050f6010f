#pragma once

#include <cstdint>
#include <vector>

#include "imcgae/array.hpp"

namespace imcgae {

/// Adam with bias correction. Moment buffers are allocated lazily on the
/// first step and must then keep matching the parameter shapes.
struct AdamState {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<NumArray> m;
  std::vector<NumArray> v;
};

void adam_step(std::vector<NumArray*>& params, const std::vector<const NumArray*>& grads,
               AdamState& state);

}  // namespace imcgae
