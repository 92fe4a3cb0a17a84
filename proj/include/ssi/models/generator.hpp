#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ssi/models/network.hpp"
#include "ssi/models/params.hpp"

namespace ssi::models {

struct Conv3dLayer {
  std::size_t filters;
  std::array<std::size_t, 3> kernel;
  std::array<std::size_t, 3> stride;
};

/// 3-D CNN from a 25-frame ultrasound block to 5 mel vectors. Convs use same
/// padding and swish; a spatial max-pool follows; a shared two-layer dense head
/// maps each temporal slice to one mel vector.
struct GeneratorConfig {
  std::size_t frames = 25;
  std::size_t height = 64;
  std::size_t width = 128;
  std::vector<Conv3dLayer> convs = {{16, {5, 5, 5}, {5, 2, 2}}, {32, {3, 3, 3}, {1, 2, 2}}, {64, {3, 3, 3}, {1, 2, 2}}};
  std::array<std::size_t, 2> pool = {2, 2};
  std::size_t hidden = 500;
  std::size_t n_mels = 80;

  static GeneratorConfig canonical() { return {}; }
  // Same topology on 25x8x16 inputs with a handful of filters, for gradient checks.
  static GeneratorConfig miniature();

  // Extents [T, H, W, C] after the conv stack and after pooling.
  std::array<std::size_t, 4> conv_output() const;
  std::array<std::size_t, 4> pooled_output() const;
  std::size_t out_frames() const { return conv_output()[0]; }
  std::string descriptor() const;
  void validate() const;
};

class Generator : public GeneratorNetwork {
 public:
  explicit Generator(GeneratorConfig cfg = {});

  const GeneratorConfig& config() const noexcept { return cfg_; }
  ModelParams init_params(std::uint64_t seed) const;

  // x: [B, 25, H, W] -> [B, 5, n_mels].
  Var forward(Var x, const ParamBinding& p) const override;
  // Inference on [25, H, W] or [B, 25, H, W]; returns [5, n_mels] or [B, 5, n_mels].
  Tensor predict(const ModelParams& params, const Tensor& x) const;

 private:
  GeneratorConfig cfg_;
};

}  // namespace ssi::models
