#pragma once

#include <cstddef>

#include "ssi/core/tensor.hpp"

namespace ssi::metrics {

// Mean squared difference over all elements; shapes must match.
double spectral_mse(const Tensor& pred, const Tensor& target);

struct R2Score {
  double mean = 0.0;         // average over channels with target variance
  std::size_t channels = 0;  // channels that entered the average
  std::size_t skipped = 0;   // channels whose target is constant
};

// Per-channel 1 - SS_res / SS_tot over all rows of a [..., C] pair, averaged
// over channels. When every channel is skipped the mean is reported as 0.
R2Score mean_r2_detail(const Tensor& pred, const Tensor& target);
double mean_r2(const Tensor& pred, const Tensor& target);

}  // namespace ssi::metrics
