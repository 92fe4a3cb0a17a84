#pragma once

#include <cstdint>

#include "ssi/core/gradcheck.hpp"
#include "ssi/core/tape.hpp"

namespace ssi::training {

struct GanGradCheckResult {
  GradCheckReport d_hinge;     // hinge D loss, train-mode batch norm, w.r.t. D
  GradCheckReport g_combined;  // weighted MSE + hinge adversarial, w.r.t. G and D
  double seconds = 0.0;

  bool passed() const noexcept { return d_hinge.passed() && g_combined.passed(); }
  std::size_t checked() const noexcept { return d_hinge.checked + g_combined.checked; }
  std::size_t failures() const noexcept { return d_hinge.failures + g_combined.failures; }
  double max_rel_error() const noexcept;
};

// Central-difference check of both adversarial losses on the miniature
// networks with seeded parameters and a batch of two random examples.
// `fault` corrupts the analytic backward pass only.
GanGradCheckResult gan_gradcheck(std::uint64_t seed, FaultInjection fault = FaultInjection::kNone,
                                 double mse_weight = 0.75, double adv_weight = 0.25,
                                 const GradCheckOptions& options = {});

}  // namespace ssi::training
