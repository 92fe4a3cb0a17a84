#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ssi/core/tensor.hpp"

namespace ssi {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for the relative error, so that gradients at the level
  // of finite-difference round-off are compared absolutely.
  double floor = 1e-7;
  // Round-off in one loss evaluation, in units of eps * |loss|. Raises the
  // floor above when the loss is large relative to the step.
  double noise_ulps = 4.0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  double floor = 0.0;  // denominator floor actually used

  bool passed() const noexcept { return failures == 0; }
};

double relative_error(double analytic, double numeric, double floor) noexcept;

// Compares `analytic[i]` against central differences of `loss` with respect
// to every entry of `*params[i]`. `loss` must read the parameters through the
// same pointers; each entry is restored after probing.
GradCheckReport check_gradients(std::span<Tensor* const> params, std::span<const Tensor> analytic,
                                const std::function<double()>& loss,
                                const GradCheckOptions& options = {});

}  // namespace ssi
