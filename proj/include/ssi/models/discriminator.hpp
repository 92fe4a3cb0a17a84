#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "ssi/models/network.hpp"
#include "ssi/models/params.hpp"

namespace ssi::models {

/// Patch discriminator over an [n_mels, frames, 1] image: three stride-2 same
/// convs, zero-pad, 2x2 valid conv, zero-pad, 4x4 valid conv to one channel,
/// tanh. ReLU and batch norm follow every conv except the last.
struct DiscriminatorConfig {
  std::size_t n_mels = 80;
  std::size_t frames = 5;
  std::array<std::size_t, 4> filters = {64, 128, 256, 512};
  bool bn_after_activation = true;
  BatchNormOptions bn = {};

  static DiscriminatorConfig canonical() { return {}; }
  static DiscriminatorConfig miniature();

  // Output map extents [H, W]; 10 x 1 for the canonical instance.
  std::array<std::size_t, 2> output_extent() const;
  std::size_t output_count() const { return output_extent()[0] * output_extent()[1]; }
  std::string descriptor() const;
  void validate() const;
};

class Discriminator : public DiscriminatorNetwork {
 public:
  explicit Discriminator(DiscriminatorConfig cfg = {});

  const DiscriminatorConfig& config() const noexcept { return cfg_; }
  ModelParams init_params(std::uint64_t seed) const;

  // mel patches [B, frames, n_mels] (time-major) -> scores [B, output_count].
  // Train mode normalizes with batch statistics and, when `running` is given,
  // folds them into its running statistics (usually running == &params).
  // Infer mode reads the running statistics of `params`.
  Var forward(Var mel, const ParamBinding& p, const ModelParams& params, Mode mode,
              ModelParams* running = nullptr) const override;
  Tensor predict(const ModelParams& params, const Tensor& mel) const;

 private:
  DiscriminatorConfig cfg_;
};

}  // namespace ssi::models
