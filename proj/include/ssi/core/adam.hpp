#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssi/core/tensor.hpp"

namespace ssi {

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Per-parameter first/second moments; sized on the first step.
struct AdamState {
  AdamOptions options;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

// Bias-corrected Adam update applied in place. params[i] pairs with grads[i].
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state);

}  // namespace ssi
